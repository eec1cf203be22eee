"""Single-timescale actor-critic on tabular MDPs, with exact DP oracles."""

__version__ = "0.1.0"

from .errors import (
    ConditioningError,
    ConfigError,
    ContractViolationError,
    ErgodicityError,
    InfiniteDivergenceError,
    ParameterError,
    SamplingError,
    SstacError,
)
from .mdp import (
    TabularMDP,
    apply_P,
    apply_P_pi,
    bellman_eval,
    build_mdp,
    chain2,
    exact_q_pi,
    gridworld5,
    load_mdp,
    objective_J,
    optimal_q,
    random_mdp,
    save_mdp,
    stationary_dists,
    visitation_dist,
)
from .features import FeatureMap, gram_matrix, gram_min_singular, random_features, tabular_features
from .policy import EnergyPolicy, kl, kl_regularized_argmax, softmax_rows, to_matrix
from .sampling import RNG_ID, RunRng, rollout_sampler, sample_sa, sample_tuples
from .linear_ac import (
    LinearAcState,
    TransitionBatch,
    actor_step,
    critic_step_exact,
    critic_step_offpolicy,
    critic_step_sampled,
    draw_batch,
    project_l2,
    run_linear_ac,
)
from .deep_net import (
    DnnParams,
    forward,
    forward_many,
    forward_value,
    gradient,
    init_params,
    linearization_gap,
    load_checkpoint,
    project_ball,
    sa_encoding,
    sa_encoding_table,
    save_checkpoint,
)
from .neural_ac import NeuralAcState, actor_inner_loop, critic_inner_loop, run_neural_ac
from .diagnostics import IterDiag, concentrability_surrogate, error_decomposition, pushforward
from .trace import BASE_COLUMNS, NEURAL_COLUMNS, RunTrace, load_trace
from .harness import ExperimentConfig, diag_checks, execute_run, run_command, run_id, sweep_command
