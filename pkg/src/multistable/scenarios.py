"""Bundled and randomly generated information structures."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .structure import InformationStructure, from_arrays

#: Pr[W=1 | x, y] for the 3x3 duck-rabbit scenario, rows indexed by x.
DUCKRABBIT_TABLE = np.array(
    [
        [0.5, 0.0, 0.5],
        [0.0, 0.5, 1.0],
        [0.5, 1.0, 0.5],
    ]
)


def binary_structure(p_one, weights=None, labels=None) -> InformationStructure:
    """Structure with outcomes (0, 1) from a table of Pr[W=1 | x]."""
    p_one = np.asarray(p_one, dtype=float)
    if weights is None:
        weights = np.ones_like(p_one)
    probs = np.stack([1.0 - p_one, p_one], axis=-1)
    return from_arrays(weights, probs, labels, (0, 1))


def duckrabbit3x3() -> InformationStructure:
    """Two agents with uniform signals on {0,1,2} and a binary target."""
    return binary_structure(DUCKRABBIT_TABLE)


def xor2() -> InformationStructure:
    """Two uniform bits with W = X xor Y."""
    return binary_structure([[0.0, 1.0], [1.0, 0.0]])


def noisy_copies(accuracies: Sequence[float] = (0.8, 0.7), prior: float = 0.5) -> InformationStructure:
    """Signals that are independent noisy copies of a binary W."""
    p_w = np.array([1.0 - prior, prior])
    channels = []
    for a in accuracies:
        # channel[x, w] = Pr[X = x | W = w]
        channels.append(np.array([[a, 1.0 - a], [1.0 - a, a]]))
    return conditionally_independent(p_w, channels)


def redundant_copies(accuracy: float = 0.8, n: int = 2) -> InformationStructure:
    """n agents who all observe the same noisy copy Z of a uniform binary W."""
    shape = (2,) * n
    weights = np.zeros(shape)
    probs = np.zeros(shape + (2,))
    probs[...] = 0.5
    for z in (0, 1):
        idx = (z,) * n
        weights[idx] = 0.5
        probs[idx] = [accuracy, 1 - accuracy] if z == 0 else [1 - accuracy, accuracy]
    return from_arrays(weights, probs, None, (0, 1))


def conditionally_independent(prior, channels) -> InformationStructure:
    """Build theta from Pr[W] and per-agent channels ``channel[x, w] = Pr[X_i=x|W=w]``."""
    prior = np.asarray(prior, dtype=float)
    joint = prior.copy()
    # joint has axes (x_1, ..., x_k, w) after each step
    joint = joint[None, :] * np.asarray(channels[0], dtype=float)
    for ch in channels[1:]:
        ch = np.asarray(ch, dtype=float)
        joint = joint[..., None, :] * ch
    weights = joint.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(weights[..., None] > 0, joint / weights[..., None], 1.0 / len(prior))
    return from_arrays(weights, probs)


def direct_sum_labels(a: Sequence, b: Sequence) -> list:
    return [(u, v) for u in a for v in b]


# ---------------------------------------------------------------------------
# random suites


def _tied_vectors(rng: np.random.Generator, k: int, dim: int, tie_prob: float) -> np.ndarray:
    """k random positive vectors in R^dim where some rows repeat earlier rows."""
    rows = []
    for j in range(k):
        if rows and rng.random() < tie_prob:
            rows.append(rows[rng.integers(len(rows))])
        else:
            rows.append(rng.uniform(0.05, 1.0, size=dim))
    return np.array(rows)


def random_conditionally_independent(
    rng: np.random.Generator,
    sizes: Sequence[int] = (3, 3),
    n_outcomes: int = 2,
    tie_prob: float = 0.4,
) -> InformationStructure:
    """Random substitutes structure: sample Pr[W], then independent channels W -> X_i.

    Some signal values share a likelihood vector (probability ``tie_prob``) so
    that non-trivial perfect-consensus rectangles actually occur.
    """
    prior = rng.dirichlet(np.ones(n_outcomes))
    channels = []
    for k in sizes:
        lik = _tied_vectors(rng, k, n_outcomes, tie_prob)
        channels.append(lik / lik.sum(axis=0, keepdims=True))
    return conditionally_independent(prior, channels)


def random_structure(
    rng: np.random.Generator,
    sizes: Sequence[int] = (3, 3),
    n_outcomes: int = 2,
    grid: Sequence[float] | None = (0.0, 0.25, 0.5, 0.75, 1.0),
    uniform_weights: bool | None = None,
) -> InformationStructure:
    """Random general structure.

    With a ``grid`` (binary W only), Pr[W=1|x] is drawn from the grid, which
    produces many exact consensus rectangles with diverging beliefs.
    """
    shape = tuple(sizes)
    if uniform_weights is None:
        uniform_weights = bool(rng.random() < 0.5)
    weights = np.ones(shape) if uniform_weights else rng.uniform(0.1, 1.0, size=shape)
    if grid is not None and n_outcomes == 2:
        p1 = rng.choice(np.asarray(grid, dtype=float), size=shape)
        probs = np.stack([1.0 - p1, p1], axis=-1)
    else:
        probs = rng.dirichlet(np.ones(n_outcomes), size=shape)
    return from_arrays(weights, probs)


def random_suite(
    seed: int,
    count: int,
    kind: str = "substitutes",
    max_size: int = 3,
    n_agents: int = 2,
    n_outcomes: int = 2,
) -> list[InformationStructure]:
    """Deterministic list of random structures for property sweeps."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        sizes = tuple(int(s) for s in rng.integers(1, max_size + 1, size=n_agents))
        if kind == "substitutes":
            out.append(random_conditionally_independent(rng, sizes, n_outcomes))
        elif kind == "grid":
            out.append(random_structure(rng, sizes, n_outcomes))
        elif kind == "dirichlet":
            out.append(random_structure(rng, sizes, n_outcomes, grid=None))
        else:
            raise ValueError(f"unknown suite kind {kind!r}")
    return out


BUILTIN = {
    "duckrabbit3x3": duckrabbit3x3,
    "xor2": xor2,
    "noisy_copies": noisy_copies,
    "redundant_copies": redundant_copies,
}
