"""Feature maps for the linear setting, with norm and conditioning diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

_NORM_TOL = 1e-12


@dataclass(frozen=True)
class FeatureMap:
    """Bounded feature vectors phi[s, a] in R^d with ||phi|| <= 1."""

    phi: np.ndarray  # (S, A, d)

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        object.__setattr__(self, "phi", phi)
        if phi.ndim != 3:
            raise ContractViolationError(f"phi must have shape (S, A, d), got {phi.shape}")
        norms = np.linalg.norm(phi, axis=2)
        if np.any(norms > 1.0 + _NORM_TOL):
            raise ContractViolationError(f"feature norms must not exceed 1, max is {norms.max()!r}")

    @property
    def dim(self) -> int:
        return self.phi.shape[2]

    @property
    def n_states(self) -> int:
        return self.phi.shape[0]

    @property
    def n_actions(self) -> int:
        return self.phi.shape[1]

    def value_table(self, weights: np.ndarray) -> np.ndarray:
        """Linear function table: result[s, a] = weights . phi[s, a]."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.dim,):
            raise ContractViolationError(f"weights must have shape ({self.dim},), got {w.shape}")
        return self.phi @ w


def tabular_features(n_states: int, n_actions: int) -> FeatureMap:
    """One-hot feature per (s, a) pair; dimension is n_states * n_actions."""
    d = n_states * n_actions
    phi = np.eye(d).reshape(n_states, n_actions, d)
    return FeatureMap(phi=phi)


def random_features(n_states: int, n_actions: int, dim: int, seed: int) -> FeatureMap:
    """Seeded Gaussian features normalized to unit length."""
    if dim < 1:
        raise ContractViolationError("feature dimension must be >= 1")
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((n_states, n_actions, dim))
    phi /= np.linalg.norm(phi, axis=2, keepdims=True)
    return FeatureMap(phi=phi)


def gram_matrix(features: FeatureMap, rho: np.ndarray) -> np.ndarray:
    """Second-moment matrix E_rho[phi phi^T]."""
    rho = np.asarray(rho, dtype=float)
    if rho.shape != (features.n_states, features.n_actions):
        raise ContractViolationError(
            f"rho must have shape {(features.n_states, features.n_actions)}, got {rho.shape}"
        )
    flat_phi = features.phi.reshape(-1, features.dim)
    return (flat_phi * rho.reshape(-1, 1)).T @ flat_phi


def gram_min_singular(features: FeatureMap, rho: np.ndarray) -> float:
    """Smallest singular value of E_rho[phi phi^T] (the conditioning diagnostic)."""
    gram = gram_matrix(features, rho)
    eigvals = np.linalg.eigvalsh(gram)
    return float(max(eigvals[0], 0.0))
