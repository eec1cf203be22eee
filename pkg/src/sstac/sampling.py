"""Seeded randomness: named independent streams, categorical draws, rollouts.

Every consumer of randomness pulls from a named stream of a single
:class:`RunRng`, so traces are bit-reproducible and consuming one stream
never perturbs another.  Categorical sampling goes through inverse-CDF on
raw uniforms, the most version-stable Generator primitive.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import ContractViolationError

# Recorded in run manifests; bump if the draw algorithm ever changes.
RNG_ID = "numpy-pcg64/seedseq-crc32-streams/inverse-cdf-v1"


class RunRng:
    """One seed, many independent named streams (gram_batch, actor_loop, ...)."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, purpose: str) -> np.random.Generator:
        gen = self._streams.get(purpose)
        if gen is None:
            key = zlib.crc32(purpose.encode("utf-8"))
            gen = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(key,)))
            self._streams[purpose] = gen
        return gen


def categorical(rng: np.random.Generator, probs: np.ndarray, n: int) -> np.ndarray:
    """n i.i.d. draws from a probability vector, via inverse CDF."""
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ContractViolationError("categorical probabilities must be nonnegative and sum to 1")
    cum = np.cumsum(p)
    idx = np.searchsorted(cum, rng.random(n), side="right")
    return np.minimum(idx, len(p) - 1)


def _conditional_draws(rng: np.random.Generator, row_probs: np.ndarray) -> np.ndarray:
    """One draw per row of a (n, K) matrix of distributions."""
    cum = np.cumsum(row_probs, axis=1)
    u = rng.random(row_probs.shape[0])
    idx = (cum < u[:, None]).sum(axis=1)
    return np.minimum(idx, row_probs.shape[1] - 1)


def sample_sa(rho: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """(n, 2) array of state-action pairs drawn i.i.d. from a joint table rho[s, a]."""
    rho = np.asarray(rho, dtype=float)
    flat = categorical(rng, rho.reshape(-1), n)
    s, a = np.divmod(flat, rho.shape[1])
    return np.stack([s, a], axis=1)


def sample_tuples(mdp, rho: np.ndarray, policy_next: np.ndarray, rng: np.random.Generator, n: int):
    """Transition tuples (s, a, r, s', a') with (s,a) ~ rho, s' ~ P, a' ~ policy_next.

    Returns five aligned arrays; rewards are read from the table.
    """
    pairs = sample_sa(rho, rng, n)
    s, a = pairs[:, 0], pairs[:, 1]
    s_next = _conditional_draws(rng, mdp.transition[s, a])
    a_next = _conditional_draws(rng, np.asarray(policy_next, dtype=float)[s_next])
    r = mdp.reward[s, a]
    return s, a, r, s_next, a_next


def rollout_sampler(mdp, policy: np.ndarray, burn_in: int, rng: np.random.Generator, start_dist=None):
    """Infinite stream of (s, a) pairs from one trajectory, after ``burn_in`` steps.

    Mixing bias is the caller's accepted risk; this exists for stress tests
    against the exact stationary samplers.
    """
    if burn_in < 0:
        raise ContractViolationError("burn_in must be >= 0")
    pi = np.asarray(policy, dtype=float)
    zeta = mdp.initial_dist if start_dist is None else np.asarray(start_dist, dtype=float)
    s = int(categorical(rng, zeta, 1)[0])
    t = 0
    while True:
        a = int(categorical(rng, pi[s], 1)[0])
        if t >= burn_in:
            yield s, a
        s = int(categorical(rng, mdp.transition[s, a], 1)[0])
        t += 1
