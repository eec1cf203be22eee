"""Single-timescale actor-critic with deep ReLU network approximation.

Each outer iteration runs two projected-SGD inner loops: the actor regresses
toward ``tilde_tau * (beta^{-1} Q + tau^{-1} f)`` under the previous policy's
stationary distribution, and the critic regresses toward the one-step
bootstrap target under the new policy's distribution, with the bootstrap
values frozen at loop entry.  Both loops warm-start from the current
parameters, keep every iterate inside the Frobenius ball around the shared
anchor initialization, and return the average of their iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mdp as mdp_mod
from .deep_net import (
    DnnParams,
    forward_many,
    gradient,
    init_params,
    linearization_gap,
    project_ball_inplace,
    sa_encoding_table,
)
from .diagnostics import error_decomposition
from .errors import ContractViolationError, ParameterError, SamplingError, SstacError
from .features import FeatureMap
from .policy import softmax_rows
from .sampling import RNG_ID, RunRng, sample_sa, sample_tuples
from .trace import NEURAL_COLUMNS, RunTrace


@dataclass
class NeuralAcState:
    """Actor/critic networks plus schedule and inner-loop settings."""

    actor: DnnParams
    critic: DnnParams
    inv_tau: float
    k: int
    beta: float
    radius: float  # shared by both networks
    alpha: float  # actor inner stepsize
    eta: float  # critic inner stepsize
    n_actor: int
    n_critic: int

    def __post_init__(self):
        same_anchor = all(
            np.array_equal(wa, wc) for wa, wc in zip(self.actor.anchor, self.critic.anchor)
        )
        if not same_anchor or not np.array_equal(self.actor.sign_vector, self.critic.sign_vector):
            raise ContractViolationError("actor and critic must share the same anchor initialization")




def _sgd_averaged(
    start: DnnParams,
    radius: float,
    stepsize: float,
    n_steps: int,
    residual_fn,
    inputs: np.ndarray,
) -> DnnParams:
    """Projected-SGD loop returning the average of iterates 1..n_steps.

    ``residual_fn(value, step_index)`` maps the current network output at the
    sampled input to the scalar residual multiplying the gradient.
    """
    if len(inputs) < n_steps:
        raise SamplingError(f"sampler provided {len(inputs)} draws, inner loop needs {n_steps}")
    work = start
    acc = [np.zeros_like(w) for w in work.weights]
    for n in range(n_steps):
        value, grads = gradient(work, inputs[n])
        resid = residual_fn(value, n)
        for h in range(work.depth):
            work.weights[h] -= stepsize * resid * grads[h]
        project_ball_inplace(work, radius)
        if float(work.anchor_distances().max()) > radius + 1e-9:
            raise SstacError("inner iterate escaped the projection ball")
        for h in range(work.depth):
            acc[h] += work.weights[h]
    averaged = [a / n_steps for a in acc]
    return DnnParams(weights=averaged, sign_vector=work.sign_vector, anchor=work.anchor, seed=work.seed)


def actor_inner_loop(
    state: NeuralAcState,
    target_table: np.ndarray,
    encodings: np.ndarray,
    pairs: np.ndarray,
) -> DnnParams:
    """Fit the actor energy to the KL-regularized target by projected SGD.

    ``pairs`` are (s, a) draws from the current policy's stationary
    distribution; ``target_table`` holds the frozen regression target.
    """
    inputs = encodings[pairs[:, 0], pairs[:, 1]]
    targets = target_table[pairs[:, 0], pairs[:, 1]]
    return _sgd_averaged(
        state.actor.clone(),
        state.radius,
        state.alpha,
        state.n_actor,
        lambda value, n: value - targets[n],
        inputs,
    )


def critic_inner_loop(
    state: NeuralAcState,
    tuples,
    encodings: np.ndarray,
    gamma: float,
) -> DnnParams:
    """One-step bootstrap regression by projected SGD with frozen targets.

    ``tuples`` is (s, a, r, s', a') with (s, a) from the new policy's
    stationary distribution; the bootstrap value comes from the critic
    snapshot taken at loop entry, so later iterates never move the target.
    """
    s, a, r, s_next, a_next = tuples
    snapshot = forward_many(
        state.critic, encodings.reshape(-1, encodings.shape[2])
    ).reshape(encodings.shape[:2])
    targets = (1.0 - gamma) * r + gamma * snapshot[s_next, a_next]
    inputs = encodings[s, a]
    return _sgd_averaged(
        state.critic.clone(),
        state.radius,
        state.eta,
        state.n_critic,
        lambda value, n: value - targets[n],
        inputs,
    )


def run_neural_ac(
    mdp: mdp_mod.TabularMDP,
    m: int,
    depth: int,
    K: int,
    *,
    n_actor: int = 400,
    n_critic: int = 400,
    seed: int = 0,
    radius: float = 10.0,
    rho_eval: str = "rho_star",
    beta: float | None = None,
    alpha: float | None = None,
    eta: float | None = None,
) -> RunTrace:
    """Run the deep neural actor-critic loop for iterations k = 0 .. K.

    Stepsizes default to ``n_actor^{-1/2}`` and ``n_critic^{-1/2}``; the
    temperature follows ``tau_{k+1}^{-1} = (k+1) / beta`` with
    ``beta = sqrt(K)`` unless overridden.  Deterministic per seed.
    """
    if K < 1:
        raise ParameterError("K must be >= 1")
    if n_actor < 1 or n_critic < 1:
        raise ParameterError("inner iteration counts must be >= 1")
    if rho_eval not in ("rho_star", "uniform"):
        raise ParameterError(f"rho_eval must be 'rho_star' or 'uniform', got {rho_eval!r}")
    beta_val = float(beta) if beta is not None else math.sqrt(K)
    if beta_val <= 0:
        raise ParameterError("beta must be positive")
    alpha_val = float(alpha) if alpha is not None else 1.0 / math.sqrt(n_actor)
    eta_val = float(eta) if eta is not None else 1.0 / math.sqrt(n_critic)

    n_states, n_actions = mdp.n_states, mdp.n_actions
    d = n_states + n_actions
    encodings = sa_encoding_table(n_states, n_actions)
    enc_flat = encodings.reshape(-1, d)
    enc_features = FeatureMap(phi=encodings)

    rng = RunRng(seed)
    shared_init = init_params(d, m, depth, seed, rng=rng.stream("init"))
    state = NeuralAcState(
        actor=shared_init.clone(),
        critic=shared_init.clone(),
        inv_tau=0.0,
        k=0,
        beta=beta_val,
        radius=radius,
        alpha=alpha_val,
        eta=eta_val,
        n_actor=n_actor,
        n_critic=n_critic,
    )

    q_star, pi_star = mdp_mod.optimal_q(mdp, tol=1e-12)
    nu_star, rho_star = mdp_mod.stationary_dists(mdp, pi_star)
    if rho_eval == "rho_star":
        rho_eval_table = rho_star
    else:
        rho_eval_table = np.full((n_states, n_actions), 1.0 / (n_states * n_actions))

    f_k = forward_many(state.actor, enc_flat).reshape(n_states, n_actions)
    q_k = forward_many(state.critic, enc_flat).reshape(n_states, n_actions)
    pi_k = softmax_rows(state.inv_tau * f_k)
    policies = [pi_k]
    rows: list[list[float]] = []
    cum_regret = 0.0

    for k in range(K + 1):
        inv_tau_next = (k + 1) / beta_val
        tilde_inv = state.inv_tau + 1.0 / beta_val
        if abs(tilde_inv - inv_tau_next) > 1e-12 * max(1.0, inv_tau_next):
            raise SstacError(f"temperature schedule drift at k={k}")
        target_actor = (q_k / beta_val + state.inv_tau * f_k) / tilde_inv

        _, rho_k = mdp_mod.stationary_dists(mdp, pi_k)
        pairs = sample_sa(rho_k, rng.stream("actor_loop"), n_actor)
        actor_next = actor_inner_loop(state, target_actor, encodings, pairs)

        f_next = forward_many(actor_next, enc_flat).reshape(n_states, n_actions)
        pi_next = softmax_rows(inv_tau_next * f_next)
        _, rho_next = mdp_mod.stationary_dists(mdp, pi_next)

        tuples = sample_tuples(mdp, rho_next, pi_next, rng.stream("critic_loop"), n_critic)
        critic_next = critic_inner_loop(state, tuples, encodings, mdp.gamma)
        q_next = forward_many(critic_next, enc_flat).reshape(n_states, n_actions)

        q_pi_next = mdp_mod.exact_q_pi(mdp, pi_next)
        diag, _ = error_decomposition(
            mdp,
            pi_k=pi_k,
            pi_next=pi_next,
            q_omega_k=q_k,
            q_omega_next=q_next,
            q_pi_next=q_pi_next,
            q_star=q_star,
            pi_star=pi_star,
            nu_star=nu_star,
            rho_next=rho_next,
            rho_eval=rho_eval_table,
            beta=beta_val,
            features=enc_features,
        )
        cum_regret += diag.gap

        actor_mse = float(np.sum(rho_k * (f_next - target_actor) ** 2))
        bellman_target = mdp_mod.bellman_eval(mdp, pi_next, q_k)
        critic_mse = float(np.sum(rho_next * (q_next - bellman_target) ** 2))
        actor_gap = float(np.mean([linearization_gap(actor_next, x) for x in enc_flat]))
        critic_gap = float(np.mean([linearization_gap(critic_next, x) for x in enc_flat]))

        rows.append(
            [
                k,
                diag.gap,
                cum_regret,
                diag.eps_c_l2,
                diag.eps_c_sup,
                diag.e_sup,
                diag.theta_kl,
                diag.eps_a,
                diag.eps_b,
                diag.phi_star,
                diag.sigma_star,
                diag.j_pi,
                diag.kl_to_opt,
                diag.a_resid,
                inv_tau_next,
                float(actor_next.anchor_distances().max()),
                float(critic_next.anchor_distances().max()),
                actor_mse,
                critic_mse,
                actor_gap,
                critic_gap,
            ]
        )

        state = NeuralAcState(
            actor=actor_next,
            critic=critic_next,
            inv_tau=inv_tau_next,
            k=k + 1,
            beta=beta_val,
            radius=radius,
            alpha=alpha_val,
            eta=eta_val,
            n_actor=n_actor,
            n_critic=n_critic,
        )
        f_k, q_k, pi_k = f_next, q_next, pi_next
        policies.append(pi_next)

    manifest = {
        "rng_id": RNG_ID,
        "params": {
            "algorithm": "neural",
            "K": K,
            "m": m,
            "H": depth,
            "d": d,
            "N_a": n_actor,
            "N_c": n_critic,
            "seed": seed,
            "beta": beta_val,
            "radius": radius,
            "alpha": alpha_val,
            "eta": eta_val,
            "rho_eval": rho_eval,
        },
    }
    history = {
        "policies": policies,
        "q_star": q_star,
        "pi_star": pi_star,
        "nu_star": nu_star,
        "rho_star": rho_star,
        "final_state": state,
    }
    return RunTrace(manifest=manifest, columns=list(NEURAL_COLUMNS), rows=rows, history=history)
