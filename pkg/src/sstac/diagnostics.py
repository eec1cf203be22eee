"""Exact per-iteration error decomposition and concentrability diagnostics.

Everything here is computed by exact expectation over the finite
state-action space; nothing is estimated from samples.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import mdp as mdp_mod
from .features import gram_min_singular
from .policy import kl

_ZERO = 1e-300  # guards log() of fully underflowed policy entries


@dataclass
class IterDiag:
    """Scalar diagnostics for one coupled actor/critic update."""

    gap: float  # E_rho_eval[Q* - Q^{pi_next}]
    eps_c_l2: float  # critic statistical error, L2 under rho_next
    eps_c_sup: float
    e_sup: float  # tracking error  ||Q_w_k - T^{pi_next} Q_w_k||_inf
    theta_kl: float  # E_nu*[ KL(pi*||pi_k) - KL(pi*||pi_next) ]
    eps_a: float  # E_nu*[ |actor-error inner product vs pi*| ]
    eps_b: float  # E_nu*[ |actor-error inner product vs pi_k| ]
    phi_star: float  # density-ratio norm ||d rho* / d rho_next||_{rho_next,2}
    sigma_star: float  # min singular value of the feature Gram under rho_next
    j_pi: float  # objective of pi_next
    kl_to_opt: float  # E_nu*[ KL(pi*||pi_next) ]
    a_resid: float  # residual of the three-term decomposition identity


def error_decomposition(
    mdp: mdp_mod.TabularMDP,
    *,
    pi_k: np.ndarray,
    pi_next: np.ndarray,
    q_omega_k: np.ndarray,
    q_omega_next: np.ndarray,
    q_pi_next: np.ndarray,
    q_star: np.ndarray,
    pi_star: np.ndarray,
    nu_star: np.ndarray,
    rho_next: np.ndarray,
    rho_eval: np.ndarray,
    beta: float,
    features=None,
) -> tuple[IterDiag, dict]:
    """All §-style analysis quantities for one update, plus the raw tables.

    The returned dict carries the three decomposition tables (under keys
    ``a1``, ``a2``, ``a3``), the critic error table ``eps_c``, and the
    tracking error table ``e``.
    """
    gamma = mdp.gamma
    t_next_q_omega_k = mdp_mod.bellman_eval(mdp, pi_next, q_omega_k)

    a1 = gamma * (mdp_mod.apply_P_pi(mdp, pi_star, q_omega_k) - mdp_mod.apply_P_pi(mdp, pi_next, q_omega_k))
    a2 = gamma * mdp_mod.apply_P_pi(mdp, pi_star, q_pi_next - q_omega_k)
    a3 = t_next_q_omega_k - q_pi_next
    identity = (1.0 - gamma) * mdp.reward + gamma * mdp_mod.apply_P_pi(mdp, pi_star, q_pi_next) - q_pi_next
    a_resid = float(np.max(np.abs(a1 + a2 + a3 - identity)))

    eps_c = t_next_q_omega_k - q_omega_next
    e_table = q_omega_k - t_next_q_omega_k

    kl_rows_prev = kl(pi_star, pi_k)
    kl_rows_next = kl(pi_star, pi_next)
    theta_kl = float(nu_star @ (kl_rows_prev - kl_rows_next))
    kl_to_opt = float(nu_star @ kl_rows_next)

    log_ratio = np.log(np.maximum(pi_next, _ZERO)) - np.log(np.maximum(pi_k, _ZERO))
    mismatch = log_ratio - q_omega_k / beta
    eps_a_rows = np.abs((mismatch * (pi_star - pi_next)).sum(axis=1))
    eps_b_rows = np.abs((mismatch * (pi_k - pi_next)).sum(axis=1))

    phi_star = density_ratio_l2(nu_star[:, None] * pi_star, rho_next)

    diag = IterDiag(
        gap=float(np.sum(rho_eval * (q_star - q_pi_next))),
        eps_c_l2=float(np.sqrt(np.sum(rho_next * eps_c**2))),
        eps_c_sup=float(np.max(np.abs(eps_c))),
        e_sup=float(np.max(np.abs(e_table))),
        theta_kl=theta_kl,
        eps_a=float(nu_star @ eps_a_rows),
        eps_b=float(nu_star @ eps_b_rows),
        phi_star=phi_star,
        sigma_star=float(gram_min_singular(features, rho_next)) if features is not None else float("nan"),
        j_pi=float(np.sum(mdp.initial_dist[:, None] * pi_next * q_pi_next)),
        kl_to_opt=kl_to_opt,
        a_resid=a_resid,
    )
    tables = {"a1": a1, "a2": a2, "a3": a3, "eps_c": eps_c, "e": e_table}
    return diag, tables


def density_ratio_l2(rho_star: np.ndarray, rho_base: np.ndarray) -> float:
    """Weighted L2 norm of the density ratio d rho* / d rho_base under rho_base."""
    mask = rho_star > 0
    if np.any(mask & (rho_base <= 0)):
        return float("inf")
    return float(np.sqrt(np.sum(rho_star[mask] ** 2 / rho_base[mask])))


def pushforward(mdp: mdp_mod.TabularMDP, dist: np.ndarray, policy: np.ndarray) -> np.ndarray:
    """One-step future state-action distribution of ``dist`` under ``policy``."""
    state_marginal = np.einsum("sa,sat->t", dist, mdp.transition)
    return state_marginal[:, None] * np.asarray(policy, dtype=float)


def concentrability_surrogate(
    mdp: mdp_mod.TabularMDP,
    rho_eval: np.ndarray,
    policies: list[np.ndarray],
    rho_star: np.ndarray,
    horizon: int,
) -> dict:
    """Visited-sequence surrogate of the discounted-average concentrability coefficient.

    The true coefficient takes a supremum over all policy sequences; this
    surrogate restricts it to consecutive windows of the policies actually
    visited by a run, truncated at ``horizon`` steps.  All outputs are
    labeled as surrogates.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    support = rho_star > 0
    c_hat = np.zeros(horizon)
    warned = False
    for start in range(len(policies)):
        dist = rho_eval
        for k in range(1, min(horizon, len(policies) - start) + 1):
            dist = pushforward(mdp, dist, policies[start + k - 1])
            escaped = ~support & (dist > 1e-12)
            if np.any(escaped):
                if not warned:
                    s, a = np.argwhere(escaped)[0]
                    warnings.warn(
                        f"future distribution puts mass on (s={s}, a={a}) where rho* is zero; "
                        "concentrability surrogate is infinite",
                        stacklevel=2,
                    )
                    warned = True
                c_hat[k - 1] = np.inf
            else:
                ratio = float(np.max(dist[support] / rho_star[support]))
                c_hat[k - 1] = max(c_hat[k - 1], ratio)
    ks = np.arange(1, horizon + 1)
    weights = (1.0 - mdp.gamma) ** 2 * ks**2 * mdp.gamma**ks
    return {"c_hat": c_hat, "C_hat_surrogate": float(np.sum(weights * c_hat)), "horizon": horizon}
