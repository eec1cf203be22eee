"""Energy-based softmax policies, KL divergence, and the KL-regularized improvement step."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError, InfiniteDivergenceError, ParameterError

log = logging.getLogger(__name__)

# exp() overflows around 709 for doubles; clamp scaled energies before softmax.
LOGIT_CLAMP = 700.0


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; logits beyond +-700 are clamped."""
    z = np.asarray(logits, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ContractViolationError("softmax requires finite logits")
    if np.any(np.abs(z) > LOGIT_CLAMP):
        log.warning("clamping logits with |value| > %g (max %g)", LOGIT_CLAMP, np.abs(z).max())
        z = np.clip(z, -LOGIT_CLAMP, LOGIT_CLAMP)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class EnergyPolicy:
    """Softmax policy pi(a|s) proportional to exp(inv_temp * f(s, a)).

    The inverse temperature is stored directly, so the fully explorative
    initial policy (infinite temperature) is the exact value ``inv_temp = 0``.
    The energy table holds f(s, a) for every pair; use the classmethods to
    build it from a linear or otherwise parameterized energy function.
    """

    inv_temp: float
    energies: np.ndarray  # (S, A)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        object.__setattr__(self, "energies", e)
        if e.ndim != 2:
            raise ContractViolationError(f"energies must be a (S, A) table, got shape {e.shape}")
        if self.inv_temp < 0:
            raise ParameterError("inverse temperature must be nonnegative")
        if not np.all(np.isfinite(e)):
            raise ContractViolationError("energies must be finite")

    @classmethod
    def from_linear(cls, features, weights: np.ndarray, inv_temp: float) -> "EnergyPolicy":
        return cls(inv_temp=inv_temp, energies=features.value_table(weights))

    @classmethod
    def from_function(cls, f, n_states: int, n_actions: int, inv_temp: float) -> "EnergyPolicy":
        table = np.array([[f(s, a) for a in range(n_actions)] for s in range(n_states)], dtype=float)
        return cls(inv_temp=inv_temp, energies=table)


def to_matrix(policy: EnergyPolicy) -> np.ndarray:
    """Materialize the (S, A) probability matrix of an energy policy."""
    return softmax_rows(policy.inv_temp * policy.energies)


def kl(p: np.ndarray, q: np.ndarray):
    """KL(p || q) with the 0 log 0 = 0 convention.

    Accepts single rows (returns a float) or matrices of rows (returns a
    per-row array).  Raises when p puts mass where q has none.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ContractViolationError(f"shape mismatch: {p.shape} vs {q.shape}")
    single = p.ndim == 1
    p2 = np.atleast_2d(p)
    q2 = np.atleast_2d(q)
    support = p2 > 0
    if np.any(support & (q2 <= 0)):
        raise InfiniteDivergenceError("KL(p || q) is infinite: q vanishes on the support of p")
    terms = np.zeros_like(p2)
    terms[support] = p2[support] * np.log(p2[support] / q2[support])
    out = terms.sum(axis=1)
    return float(out[0]) if single else out


def kl_regularized_argmax(policy: EnergyPolicy, q_values: np.ndarray, beta: float) -> np.ndarray:
    """Exact maximizer of <Q(s,.), pi(.|s)> - beta * KL(pi || policy) per state.

    The closed form is the softmax of ``beta^{-1} Q + inv_temp * f`` row-wise.
    """
    if beta <= 0:
        raise ParameterError(f"beta must be positive, got {beta}")
    q = np.asarray(q_values, dtype=float)
    if q.shape != policy.energies.shape:
        raise ContractViolationError(f"Q shape {q.shape} does not match policy table {policy.energies.shape}")
    return softmax_rows(q / beta + policy.inv_temp * policy.energies)
