"""Single-timescale actor-critic with linear function approximation.

The actor performs the natural-policy-gradient weight recursion
``theta_{k+1} = tau_{k+1} (beta^{-1} omega_k + tau_k^{-1} theta_k)`` under the
schedule ``tau_{k+1}^{-1} = (k+1) / beta``; the critic applies the Bellman
evaluation operator once per iteration, either as an exact population
least-squares solve, a sampled projected least-squares step, or an
off-policy variant under a fixed behavioral distribution.
"""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import mdp as mdp_mod
from .diagnostics import error_decomposition
from .errors import ConditioningError, ParameterError, SstacError
from .features import FeatureMap, gram_matrix
from .policy import softmax_rows
from .sampling import RNG_ID, RunRng, _conditional_draws, sample_sa, sample_tuples
from .trace import BASE_COLUMNS, RunTrace

log = logging.getLogger(__name__)

MODES = ("exact", "sampled", "offpolicy")


@dataclass(frozen=True)
class LinearAcState:
    """Actor/critic weights plus the temperature schedule position."""

    theta: np.ndarray  # actor energy weights
    omega: np.ndarray  # critic weights, always inside the radius ball
    inv_tau: float  # equals k / beta under the schedule
    k: int
    beta: float
    radius: float


def project_l2(w: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the centered ball of the given radius."""
    norm = float(np.linalg.norm(w))
    if norm <= radius:
        return w
    if radius <= 0.0:
        return np.zeros_like(w)
    return w * (radius / norm)


def actor_step(state: LinearAcState) -> LinearAcState:
    """One natural-policy-gradient step; advances the temperature schedule.

    Equivalent to theta_{k+1} being the running average of all critic
    weights seen so far.
    """
    inv_tau_next = (state.k + 1) / state.beta
    theta_next = (state.omega / state.beta + state.inv_tau * state.theta) / inv_tau_next
    return dataclasses.replace(state, theta=theta_next, inv_tau=inv_tau_next, k=state.k + 1)


def _check_gram(gram: np.ndarray, tol: float, hint: str) -> None:
    sigma_min = float(np.linalg.eigvalsh(gram)[0])
    if sigma_min < tol:
        raise ConditioningError(
            f"Gram matrix is singular beyond tolerance (sigma_min={sigma_min:.3e} < {tol:.0e}); {hint}",
            sigma_min=sigma_min,
        )


def critic_step_exact(
    state: LinearAcState,
    mdp: mdp_mod.TabularMDP,
    policy_next: np.ndarray,
    features: FeatureMap,
    rho_next: np.ndarray,
    *,
    gram_tol: float = 1e-12,
) -> np.ndarray:
    """Population least-squares critic under rho_next, projected onto the ball."""
    gram = gram_matrix(features, rho_next)
    _check_gram(gram, gram_tol, "the evaluation distribution may lack support")
    q_omega = features.value_table(state.omega)
    target = mdp_mod.bellman_eval(mdp, policy_next, q_omega)
    rhs = np.einsum("sa,sad->d", rho_next * target, features.phi)
    omega_tilde = np.linalg.solve(gram, rhs)
    return project_l2(omega_tilde, state.radius)


@dataclass(frozen=True)
class TransitionBatch:
    """Sampled data for one critic update: Gram pairs and target tuples."""

    gram_pairs: np.ndarray  # (N, 2) (s, a) drawn from rho
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    a_next: np.ndarray

    @property
    def size(self) -> int:
        return len(self.s)


def draw_batch(
    mdp: mdp_mod.TabularMDP,
    rho: np.ndarray,
    policy_next: np.ndarray,
    rng: RunRng,
    n: int,
    *,
    shared: bool = False,
) -> TransitionBatch:
    """Draw the two sample sets of one sampled critic update.

    The Gram set and the target set use independent streams; ``shared=True``
    reuses the Gram pairs as target pairs (off by default, matching the
    two-independent-sets reading).
    """
    gram_pairs = sample_sa(rho, rng.stream("gram_batch"), n)
    if shared:
        target_rng = rng.stream("target_batch")
        s, a = gram_pairs[:, 0], gram_pairs[:, 1]
        s_next = _conditional_draws(target_rng, mdp.transition[s, a])
        a_next = _conditional_draws(target_rng, np.asarray(policy_next, dtype=float)[s_next])
        r = mdp.reward[s, a]
    else:
        s, a, r, s_next, a_next = sample_tuples(mdp, rho, policy_next, rng.stream("target_batch"), n)
    return TransitionBatch(gram_pairs=gram_pairs, s=s, a=a, r=r, s_next=s_next, a_next=a_next)


def critic_step_sampled(
    state: LinearAcState,
    batch: TransitionBatch,
    features: FeatureMap,
    gamma: float,
    *,
    ridge: float = 0.0,
    gram_tol: float = 1e-12,
) -> np.ndarray:
    """Empirical projected least-squares critic from a transition batch."""
    phi = features.phi
    phi_gram = phi[batch.gram_pairs[:, 0], batch.gram_pairs[:, 1]]
    gram = phi_gram.T @ phi_gram / batch.size
    if ridge > 0.0:
        gram = gram + ridge * np.eye(features.dim)
    _check_gram(gram, gram_tol, "increase N or enable the ridge")
    q_boot = phi[batch.s_next, batch.a_next] @ state.omega
    y = (1.0 - gamma) * batch.r + gamma * q_boot
    rhs = (y[:, None] * phi[batch.s, batch.a]).mean(axis=0)
    omega_tilde = np.linalg.solve(gram, rhs)
    return project_l2(omega_tilde, state.radius)


def critic_step_offpolicy(
    state: LinearAcState,
    behavior,
    policy_next: np.ndarray,
    features: FeatureMap,
    mdp: mdp_mod.TabularMDP,
    *,
    gram_tol: float = 1e-12,
) -> np.ndarray:
    """Critic update under a behavioral distribution or a reusable fixed batch.

    ``behavior`` is either a state-action distribution table (population
    expectations, exact next-policy operator) or a TransitionBatch whose
    (s, a, r, s') tuples are reused across iterations; in the batch form the
    next-action expectation is taken exactly under ``policy_next``, which is
    what makes reuse sound after the policy has moved on.
    """
    q_omega = features.value_table(state.omega)
    if isinstance(behavior, TransitionBatch):
        phi = features.phi
        phi_gram = phi[behavior.gram_pairs[:, 0], behavior.gram_pairs[:, 1]]
        gram = phi_gram.T @ phi_gram / behavior.size
        _check_gram(gram, gram_tol, "increase the behavioral batch size")
        v_next = (np.asarray(policy_next, dtype=float) * q_omega).sum(axis=1)
        y = (1.0 - mdp.gamma) * behavior.r + mdp.gamma * v_next[behavior.s_next]
        rhs = (y[:, None] * phi[behavior.s, behavior.a]).mean(axis=0)
    else:
        rho_bhv = np.asarray(behavior, dtype=float)
        gram = gram_matrix(features, rho_bhv)
        _check_gram(gram, gram_tol, "the behavioral distribution may lack support")
        target = mdp_mod.bellman_eval(mdp, policy_next, q_omega)
        rhs = np.einsum("sa,sad->d", rho_bhv * target, features.phi)
    omega_tilde = np.linalg.solve(gram, rhs)
    return project_l2(omega_tilde, state.radius)


def default_radius(mdp: mdp_mod.TabularMDP) -> float:
    # Dominates ||Q^pi||_inf <= r_max with slack, so the exact critic never clips.
    return 2.0 * mdp.r_max / (1.0 - mdp.gamma)


def run_linear_ac(
    mdp: mdp_mod.TabularMDP,
    features: FeatureMap,
    K: int,
    *,
    mode: str = "exact",
    N: int = 1024,
    seed: int = 0,
    radius: float | None = None,
    rho_eval: str = "rho_star",
    beta: float | None = None,
    ridge: float = 0.0,
    shared_batch: bool = False,
    offpolicy_batch_n: int | None = None,
    gram_tol: float = 1e-12,
) -> RunTrace:
    """Run the full linear actor-critic loop for iterations k = 0 .. K.

    Returns a RunTrace with one diagnostic row per iteration (K+1 rows) and
    in-memory history (policies, weight iterates, exact oracles).  Fully
    deterministic given the seed.
    """
    if K < 1:
        raise ParameterError("K must be >= 1")
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if mode == "sampled" and N < 1:
        raise ParameterError("N must be >= 1 in sampled mode")
    if rho_eval not in ("rho_star", "uniform"):
        raise ParameterError(f"rho_eval must be 'rho_star' or 'uniform', got {rho_eval!r}")

    beta_val = float(beta) if beta is not None else math.sqrt(K)
    if beta_val <= 0:
        raise ParameterError("beta must be positive")
    radius_val = float(radius) if radius is not None else default_radius(mdp)
    rng = RunRng(seed)
    if ridge > 0.0:
        log.info("ridge %g active in sampled critic updates", ridge)

    q_star, pi_star = mdp_mod.optimal_q(mdp, tol=1e-12)
    nu_star, rho_star = mdp_mod.stationary_dists(mdp, pi_star)
    n_states, n_actions = mdp.n_states, mdp.n_actions
    if rho_eval == "rho_star":
        rho_eval_table = rho_star
    else:
        rho_eval_table = np.full((n_states, n_actions), 1.0 / (n_states * n_actions))

    d = features.dim
    state = LinearAcState(
        theta=np.zeros(d), omega=np.zeros(d), inv_tau=0.0, k=0, beta=beta_val, radius=radius_val
    )

    rho_bhv = None
    off_batch = None
    if mode == "offpolicy":
        uniform_policy = np.full((n_states, n_actions), 1.0 / n_actions)
        _, rho_bhv = mdp_mod.stationary_dists(mdp, uniform_policy)
        if offpolicy_batch_n:
            off_batch = draw_batch(mdp, rho_bhv, uniform_policy, rng, offpolicy_batch_n)

    pi_0 = softmax_rows(state.inv_tau * features.value_table(state.theta))
    policies = [pi_0]
    theta_hist = [state.theta.copy()]
    omega_hist = [state.omega.copy()]
    rows: list[list[float]] = []
    omega_sum = np.zeros(d)
    cum_regret = 0.0

    for k in range(K + 1):
        pi_k = policies[-1]
        omega_sum = omega_sum + state.omega
        after_actor = actor_step(state)
        avg = omega_sum / (k + 1)
        drift = float(np.max(np.abs(after_actor.theta - avg)))
        if drift > 1e-12:
            raise SstacError(f"running-average identity violated at k={k}: drift {drift:.3e}")

        pi_next = softmax_rows(after_actor.inv_tau * features.value_table(after_actor.theta))
        _, rho_next = mdp_mod.stationary_dists(mdp, pi_next)

        if mode == "exact":
            omega_next = critic_step_exact(after_actor, mdp, pi_next, features, rho_next, gram_tol=gram_tol)
        elif mode == "sampled":
            batch = draw_batch(mdp, rho_next, pi_next, rng, N, shared=shared_batch)
            omega_next = critic_step_sampled(
                after_actor, batch, features, mdp.gamma, ridge=ridge, gram_tol=gram_tol
            )
        else:
            behavior = off_batch if off_batch is not None else rho_bhv
            omega_next = critic_step_offpolicy(
                after_actor, behavior, pi_next, features, mdp, gram_tol=gram_tol
            )
        if float(np.linalg.norm(omega_next)) > radius_val + 1e-12:
            raise SstacError("critic projection invariant violated")

        q_omega_k = features.value_table(state.omega)
        q_omega_next = features.value_table(omega_next)
        q_pi_next = mdp_mod.exact_q_pi(mdp, pi_next)
        diag, _ = error_decomposition(
            mdp,
            pi_k=pi_k,
            pi_next=pi_next,
            q_omega_k=q_omega_k,
            q_omega_next=q_omega_next,
            q_pi_next=q_pi_next,
            q_star=q_star,
            pi_star=pi_star,
            nu_star=nu_star,
            rho_next=rho_next,
            rho_eval=rho_eval_table,
            beta=beta_val,
            features=features,
        )
        cum_regret += diag.gap
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
                after_actor.inv_tau,
                float(np.linalg.norm(after_actor.theta)),
                float(np.linalg.norm(omega_next)),
            ]
        )
        state = dataclasses.replace(after_actor, omega=omega_next)
        policies.append(pi_next)
        theta_hist.append(state.theta.copy())
        omega_hist.append(omega_next.copy())

    manifest = {
        "rng_id": RNG_ID,
        "params": {
            "algorithm": f"linear_{mode}",
            "K": K,
            "N": N if mode == "sampled" else None,
            "seed": seed,
            "beta": beta_val,
            "radius": radius_val,
            "rho_eval": rho_eval,
            "ridge": ridge,
            "shared_batch": shared_batch,
            "offpolicy_batch_n": offpolicy_batch_n,
        },
    }
    history = {
        "policies": policies,
        "theta": theta_hist,
        "omega": omega_hist,
        "q_star": q_star,
        "pi_star": pi_star,
        "nu_star": nu_star,
        "rho_star": rho_star,
    }
    return RunTrace(manifest=manifest, columns=list(BASE_COLUMNS), rows=rows, history=history)
