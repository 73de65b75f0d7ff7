"""Cost of switching between stable histories by forgetting and re-perceiving."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .complexity import gestalt_stimulus
from .consensus import is_epsilon_consensus
from .errors import GuardExceeded, PreconditionError, ZeroMassError
from .infotheory import tv_distance
from .structure import (
    RECT_GUARD,
    Hyperrectangle,
    InformationStructure,
    posterior_global,
    rect_cond_prob,
    rect_prob,
)


@dataclass(frozen=True)
class SwitchReport:
    h: Hyperrectangle
    h_prime: Hyperrectangle
    best_hat: Hyperrectangle
    cost_bits: float
    ell_lower_bound_bits: float
    tv: float
    # min{2(1 - 2^-b), sqrt(2^(b+1) g)}; None unless cost <= 1 and g was supplied
    bound_applied: float | None = None
    # hull form of the lower bound; equals ell when the rectangles overlap and
    # stays finite when they are disjoint
    union_lower_bound_bits: float = 0.0


@dataclass(frozen=True)
class SwitchBoundVerdict:
    cost_bits: float
    tv: float
    complexity: float
    mass_bound: float  # 2 (1 - 2^-b)
    complexity_bound: float  # sqrt(2^(b+1) g)
    holds: bool

    @property
    def bound(self) -> float:
        return min(self.mass_bound, self.complexity_bound)


def switching_cost_via(
    theta: InformationStructure, h: Hyperrectangle, h_prime: Hyperrectangle, hat: Hyperrectangle
) -> float:
    """log2 1/Pr[h|hat] + log2 1/Pr[h'|hat] in bits."""
    if not (h.issubset(hat) and h_prime.issubset(hat)):
        raise PreconditionError(f"{hat} does not contain both {h} and {h_prime}")
    if rect_prob(theta, h) <= 0 or rect_prob(theta, h_prime) <= 0:
        raise ZeroMassError("switching endpoints must have positive mass")
    return -math.log2(rect_cond_prob(theta, h, hat)) - math.log2(rect_cond_prob(theta, h_prime, hat))


def _supersets(base: tuple[int, ...], k: int) -> list[tuple[int, ...]]:
    extra = [v for v in range(k) if v not in base]
    out = []
    for r in range(len(extra) + 1):
        for add in itertools.combinations(extra, r):
            out.append(tuple(sorted(base + add)))
    return out


def common_coarsenings(
    theta: InformationStructure, h: Hyperrectangle, h_prime: Hyperrectangle, guard: int = RECT_GUARD
) -> list[Hyperrectangle]:
    """Every rectangle containing both arguments, lexicographic order."""
    hull = h.hull(h_prime)
    count = int(np.prod([2 ** (k - len(b)) for k, b in zip(theta.shape, hull.subsets)]))
    if count > guard:
        raise GuardExceeded(f"{count} candidate coarsenings exceed the guard {guard}")
    axes = [_supersets(b, k) for b, k in zip(hull.subsets, theta.shape)]
    return sorted(Hyperrectangle(c) for c in itertools.product(*axes))


def ell_bound(p: float, q: float) -> float:
    """log2((1 + p/q - p)(1 + q/p - q)); ``inf`` when either overlap is zero."""
    if p < 0 or q < 0 or p > 1 + 1e-12 or q > 1 + 1e-12:
        raise PreconditionError("overlaps must lie in [0, 1]")
    if p == 0 or q == 0:
        return math.inf
    return math.log2((1 + p / q - p) * (1 + q / p - q))


def union_bound(theta: InformationStructure, h: Hyperrectangle, h_prime: Hyperrectangle) -> float:
    """log2 of (Pr[h] + Pr[h'] - Pr[h & h'])^2 / (Pr[h] Pr[h'])."""
    a, b = rect_prob(theta, h), rect_prob(theta, h_prime)
    if a <= 0 or b <= 0:
        raise ZeroMassError("switching endpoints must have positive mass")
    meet = h.intersect(h_prime)
    union = a + b - (rect_prob(theta, meet) if meet is not None else 0.0)
    return 2 * math.log2(union) - math.log2(a) - math.log2(b)


def min_switching_cost(
    theta: InformationStructure,
    h: Hyperrectangle,
    h_prime: Hyperrectangle,
    guard: int = RECT_GUARD,
    complexity: float | None = None,
) -> SwitchReport:
    """Cheapest forget-then-reperceive route from ``h`` to ``h_prime``.

    Ties go to the smaller-mass coarsening, then lexicographic order.
    Passing ``complexity`` (g(theta, x, eps)) fills ``bound_applied``.
    """
    best = None
    for hat in common_coarsenings(theta, h, h_prime, guard):
        c = switching_cost_via(theta, h, h_prime, hat)
        key = (round(c, 12), rect_prob(theta, hat))
        if best is None or key < best[0]:
            best = (key, hat, c)
    _, hat, cost = best
    p = rect_cond_prob(theta, h_prime, h)
    q = rect_cond_prob(theta, h, h_prime)
    tv = tv_distance(posterior_global(theta, h), posterior_global(theta, h_prime))
    bound = None
    if complexity is not None and cost <= 1:
        bound = min(2 * (1 - 2 ** (-cost)), math.sqrt(2 ** (cost + 1) * complexity))
    return SwitchReport(h, h_prime, hat, cost, ell_bound(p, q), tv, bound, union_bound(theta, h, h_prime))


def switch_divergence_bound(
    theta: InformationStructure,
    x: Sequence[int],
    h: Hyperrectangle,
    h_prime: Hyperrectangle,
    epsilon: float,
    complexity: float | None = None,
) -> SwitchBoundVerdict:
    """Check TV(q_h, q_h') against the cheap-switch bound (requires cost <= 1)."""
    x = tuple(x)
    for r in (h, h_prime):
        if not r.contains(x):
            raise PreconditionError(f"{r} does not contain the stimulus {x}")
        if not is_epsilon_consensus(theta, r, epsilon).is_consensus:
            raise PreconditionError(f"{r} is not a {epsilon}-consensus")
    report = min_switching_cost(theta, h, h_prime)
    b = report.cost_bits
    if b > 1:
        raise PreconditionError(f"switching cost {b:.6f} bits exceeds 1")
    b = max(b, 0.0)
    if complexity is None:
        complexity = gestalt_stimulus(theta, x, epsilon)
    mass = 2 * (1 - 2 ** (-b))
    cplx = math.sqrt(2 ** (b + 1) * max(float(complexity), 0.0))
    return SwitchBoundVerdict(b, report.tv, float(complexity), mass, cplx, report.tv <= min(mass, cplx) + 1e-12)


def switching_matrix(theta: InformationStructure, rects: Sequence[Hyperrectangle]) -> np.ndarray:
    """Pairwise minimal switching costs (bits)."""
    k = len(rects)
    out = np.zeros((k, k))
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = min_switching_cost(theta, rects[a], rects[b]).cost_bits
    return out
