"""Exact information-theoretic functionals on finite distributions.

Everything here works in bits unless a ``base`` argument says otherwise.
Distributions are plain 1-D numpy arrays; joint tables are 2-D arrays whose
entries need not be normalized (they are normalized internally).
"""

from __future__ import annotations

import numpy as np

#: Tolerance for equality checks between probabilities / information values.
ATOL = 1e-9
#: Tolerance for normalization checks.
NORM_TOL = 1e-12


def _as_dist(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def check_distribution(p, tol: float = NORM_TOL) -> np.ndarray:
    """Return ``p`` as an array after checking it is a probability vector."""
    p = _as_dist(p)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("distribution must be a non-empty 1-D array")
    if np.any(p < 0):
        raise ValueError("distribution has negative entries")
    if abs(p.sum() - 1.0) > tol:
        raise ValueError(f"distribution sums to {p.sum()!r}, not 1")
    return p


def entropy(p, base: float = 2.0) -> float:
    """Shannon entropy with the convention 0 log 0 = 0."""
    p = _as_dist(p).ravel()
    nz = p[p > 0]
    return max(float(-(nz * np.log(nz)).sum() / np.log(base)), 0.0) + 0.0


def binary_entropy(x: float) -> float:
    return entropy([x, 1.0 - x])


def kl_divergence(p, q, base: float = 2.0) -> float:
    """D(p || q). Returns ``inf`` when p is not absolutely continuous w.r.t. q."""
    p = _as_dist(p)
    q = _as_dist(q)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same support")
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    val = float((p[mask] * (np.log(p[mask]) - np.log(q[mask]))).sum() / np.log(base))
    # rounding can leave tiny negatives when p == q
    return max(val, 0.0)


def tv_distance(p, q) -> float:
    p = _as_dist(p)
    q = _as_dist(q)
    if p.shape != q.shape:
        raise ValueError("p and q must have the same support")
    return float(0.5 * np.abs(p - q).sum())


def mutual_information(joint, base: float = 2.0) -> float:
    """I(A;B) for a 2-D table of (possibly unnormalized) joint masses.

    Computed from the definition sum p(a,b) log p(a,b)/(p(a)p(b)); this is
    deliberately a different route from the expected-KL form used elsewhere.
    """
    joint = _as_dist(joint)
    total = joint.sum()
    if total <= 0:
        raise ValueError("joint table has zero mass")
    pj = joint / total
    pa = pj.sum(axis=1, keepdims=True)
    pb = pj.sum(axis=0, keepdims=True)
    mask = pj > 0
    ratio = pj[mask] / (pa @ pb)[mask]
    return max(float((pj[mask] * np.log(ratio)).sum() / np.log(base)), 0.0)


def conditional_entropy(joint, base: float = 2.0) -> float:
    """H(B|A) for a 2-D joint table with rows indexed by A."""
    joint = _as_dist(joint)
    total = joint.sum()
    pj = joint / total
    return entropy(pj.ravel(), base) - entropy(pj.sum(axis=1), base)


def expected_kl(weights, posteriors, reference, base: float = 2.0) -> float:
    """sum_k w_k D(posteriors[k] || reference), skipping zero-weight rows."""
    weights = _as_dist(weights)
    total = weights.sum()
    out = 0.0
    for w, post in zip(weights, np.asarray(posteriors, dtype=float)):
        if w > 0:
            out += (w / total) * kl_divergence(post, reference, base)
    return out
