"""Deep ReLU networks with frozen output signs, anchored Frobenius-ball projection,
exact backpropagation, and the local-linearization diagnostic.

The network is ``x_0 = x``, ``x_h = relu(W_h^T x_{h-1}) / sqrt(m)``, output
``b . x_H`` with fixed signs ``b in {-1, +1}^m``.  Only the weight matrices
train; every parameter set remembers the initialization it is anchored to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolationError

# Subgradient convention at the ReLU kink: derivative 0 at exactly 0.


@dataclass
class DnnParams:
    """Weights, frozen sign vector, and the anchor initialization."""

    weights: list[np.ndarray]  # W_1 (d, m), W_h (m, m) for h >= 2
    sign_vector: np.ndarray  # (m,) entries in {-1, +1}, never trained
    anchor: list[np.ndarray] = field(repr=False)
    seed: int | None = None

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def width(self) -> int:
        return self.weights[0].shape[1]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[0]

    def clone(self) -> "DnnParams":
        """Copy with independent weight arrays; anchor and signs are shared read-only."""
        return DnnParams(
            weights=[w.copy() for w in self.weights],
            sign_vector=self.sign_vector,
            anchor=self.anchor,
            seed=self.seed,
        )

    def anchor_distances(self) -> np.ndarray:
        """Per-layer Frobenius distances to the anchor."""
        return np.array([np.linalg.norm(w - w0) for w, w0 in zip(self.weights, self.anchor)])


def init_params(d: int, m: int, depth: int, seed: int, rng: np.random.Generator | None = None) -> DnnParams:
    """Standard-Gaussian weights, Rademacher signs, anchor frozen at creation."""
    if d < 1 or m < 1 or depth < 1:
        raise ContractViolationError("d, m, and depth must all be >= 1")
    if rng is None:
        rng = np.random.default_rng(seed)
    shapes = [(d, m)] + [(m, m)] * (depth - 1)
    weights = [rng.standard_normal(shape) for shape in shapes]
    signs = rng.integers(0, 2, size=m) * 2.0 - 1.0
    return DnnParams(
        weights=weights,
        sign_vector=signs,
        anchor=[w.copy() for w in weights],
        seed=seed,
    )


def _check_input(params: DnnParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (params.input_dim,):
        raise ContractViolationError(f"input must have shape ({params.input_dim},), got {x.shape}")
    return x


def forward(params: DnnParams, x: np.ndarray) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Network output plus cached layer activations and pre-activations."""
    x = _check_input(params, x)
    scale = 1.0 / np.sqrt(params.width)
    activations = [x]
    pre_activations = []
    h = x
    for w in params.weights:
        z = w.T @ h
        pre_activations.append(z)
        h = scale * np.maximum(z, 0.0)
        activations.append(h)
    return float(params.sign_vector @ h), activations, pre_activations


def forward_value(params: DnnParams, x: np.ndarray) -> float:
    return forward(params, x)[0]


def forward_many(params: DnnParams, xs: np.ndarray) -> np.ndarray:
    """Vectorized outputs for a batch of inputs with shape (n, d)."""
    xs = np.asarray(xs, dtype=float)
    scale = 1.0 / np.sqrt(params.width)
    h = xs
    for w in params.weights:
        h = scale * np.maximum(h @ w, 0.0)
    return h @ params.sign_vector


def gradient(params: DnnParams, x: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Output value and exact per-layer gradients d(output)/dW_h.

    Uses the sigma'(0) = 0 convention at ReLU kinks.
    """
    value, activations, pre_activations = forward(params, x)
    scale = 1.0 / np.sqrt(params.width)
    # delta_h = d(output) / d(pre-activation of layer h)
    delta = scale * (pre_activations[-1] > 0.0) * params.sign_vector
    grads: list[np.ndarray] = [None] * params.depth
    for h in range(params.depth - 1, -1, -1):
        grads[h] = np.outer(activations[h], delta)
        if h > 0:
            upstream = params.weights[h] @ delta
            delta = scale * (pre_activations[h - 1] > 0.0) * upstream
    return value, grads


# Distances within one part in 1e12 of the radius count as inside, which makes
# the projection exactly idempotent despite rounding in the shrink.
_BALL_SLACK = 1e-12


def project_ball(params: DnnParams, radius: float) -> DnnParams:
    """Shrink each layer radially toward its anchor so every Frobenius distance is <= radius.

    Idempotent; layers already inside the ball are returned untouched.
    """
    if radius < 0:
        raise ContractViolationError("radius must be >= 0")
    new_weights = []
    for w, w0 in zip(params.weights, params.anchor):
        dist = float(np.linalg.norm(w - w0))
        if dist <= radius * (1.0 + _BALL_SLACK):
            new_weights.append(w)
        elif radius == 0.0:
            new_weights.append(w0.copy())
        else:
            new_weights.append(w0 + (w - w0) * (radius / dist))
    return DnnParams(weights=new_weights, sign_vector=params.sign_vector, anchor=params.anchor, seed=params.seed)


def project_ball_inplace(params: DnnParams, radius: float) -> None:
    """In-place variant used by the SGD inner loops."""
    for h, (w, w0) in enumerate(zip(params.weights, params.anchor)):
        diff = w - w0
        dist = float(np.linalg.norm(diff))
        if dist > radius * (1.0 + _BALL_SLACK):
            params.weights[h] = w0 + diff * (radius / dist) if radius > 0.0 else w0.copy()


def linearization_gap(params: DnnParams, x: np.ndarray) -> float:
    """|u_theta(x) - u_anchor(x) - <theta - anchor, grad u_anchor(x)>|."""
    at_anchor = DnnParams(
        weights=params.anchor, sign_vector=params.sign_vector, anchor=params.anchor, seed=params.seed
    )
    value0, grads0 = gradient(at_anchor, x)
    linear_term = sum(
        float(np.sum((w - w0) * g)) for w, w0, g in zip(params.weights, params.anchor, grads0)
    )
    return abs(forward_value(params, x) - value0 - linear_term)


# ---------------------------------------------------------------------------
# State-action encoding
# ---------------------------------------------------------------------------


def sa_encoding_table(n_states: int, n_actions: int) -> np.ndarray:
    """Unit-norm input per pair: one-hot(s) concatenated with one-hot(a), scaled by 1/sqrt(2).

    Shape (S, A, S + A).
    """
    d = n_states + n_actions
    table = np.zeros((n_states, n_actions, d))
    for s in range(n_states):
        for a in range(n_actions):
            table[s, a, s] = 1.0 / np.sqrt(2.0)
            table[s, a, n_states + a] = 1.0 / np.sqrt(2.0)
    return table


def sa_encoding(n_states: int, n_actions: int, s: int, a: int) -> np.ndarray:
    return sa_encoding_table(n_states, n_actions)[s, a]


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(params: DnnParams, path, radius: float | None = None) -> None:
    """JSON checkpoint with header (d, m, H, seed, R) and exact float round-trip."""
    doc = {
        "d": params.input_dim,
        "m": params.width,
        "H": params.depth,
        "seed": params.seed,
        "R": radius,
        "sign_vector": params.sign_vector.tolist(),
        "weights": [w.tolist() for w in params.weights],
        "anchor": [w.tolist() for w in params.anchor],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> tuple[DnnParams, float | None]:
    with open(path) as fh:
        doc = json.load(fh)
    params = DnnParams(
        weights=[np.asarray(w, dtype=float) for w in doc["weights"]],
        sign_vector=np.asarray(doc["sign_vector"], dtype=float),
        anchor=[np.asarray(w, dtype=float) for w in doc["anchor"]],
        seed=doc["seed"],
    )
    if params.input_dim != doc["d"] or params.width != doc["m"] or params.depth != doc["H"]:
        raise ContractViolationError("checkpoint header does not match stored weight shapes")
    return params, doc["R"]
