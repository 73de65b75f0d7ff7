"""Gestalt complexity, direct sums and multistability detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .consensus import enumerate_consensus_rectangles, is_epsilon_consensus
from .errors import PreconditionError
from .infotheory import ATOL, tv_distance
from .structure import (
    RECT_GUARD,
    Hyperrectangle,
    InformationStructure,
    from_arrays,
    is_conditionally_independent,
    posterior_global,
    rect_cond_prob,
    regret,
)


@dataclass(frozen=True)
class MultistabilityWitness:
    h: Hyperrectangle
    h_prime: Hyperrectangle
    q_h: np.ndarray
    q_h_prime: np.ndarray
    tv: float
    overlap: tuple[float, float]  # (Pr[h'|h], Pr[h|h'])
    epsilon: float
    d: float


@dataclass(frozen=True)
class MonostabilityVerdict:
    """Outcome of checking the overlap theorems on one pair of consensuses.

    ``lemma_threshold`` is min{2 max(regret)/d^2, 1 - d/2};
    ``substitutes_threshold`` is 2 n eps / d^2;
    ``complexity_threshold`` is 2 g(theta, x, eps) / d^2.
    A hypothesis holds when both overlaps are strictly above its threshold.
    """

    overlap: tuple[float, float]
    regrets: tuple[float, float]
    tv: float
    d: float
    lemma_threshold: float
    substitutes_threshold: float
    complexity_threshold: float
    lemma_hypothesis: bool
    substitutes_hypothesis: bool
    complexity_hypothesis: bool
    conclusion: bool  # tv < d
    conditionally_independent: bool

    @property
    def substitutes_violated(self) -> bool:
        # the 2 n eps / d^2 threshold is only claimed for substitutes
        return self.conditionally_independent and self.substitutes_hypothesis and not self.conclusion

    @property
    def lemma_violated(self) -> bool:
        return self.lemma_hypothesis and not self.conclusion

    @property
    def complexity_violated(self) -> bool:
        return self.complexity_hypothesis and not self.conclusion


def gestalt_history(theta: InformationStructure, h: Hyperrectangle, epsilon: float) -> float:
    """Regret of an epsilon-consensus history."""
    if not is_epsilon_consensus(theta, h, epsilon).is_consensus:
        raise PreconditionError(f"{h} is not a {epsilon}-consensus")
    return regret(theta, h)


def _argmax_regret(rects) -> tuple[float, Hyperrectangle]:
    # enumeration is lexicographic, so keeping the first maximum is the tie-break
    best = None
    for c in rects:
        if best is None or c.regret > best.regret + ATOL:
            best = c
    if best is None:
        raise PreconditionError("no qualifying consensus rectangle")
    return best.regret, best.rect


def gestalt_stimulus(
    theta: InformationStructure, x: Sequence[int], epsilon: float, guard: int = RECT_GUARD
) -> float:
    """Max regret over epsilon-consensus rectangles containing ``x``."""
    return gestalt_stimulus_argmax(theta, x, epsilon, guard)[0]


def gestalt_stimulus_argmax(theta, x, epsilon, guard=RECT_GUARD) -> tuple[float, Hyperrectangle]:
    if theta.weights[tuple(x)] <= 0:
        raise PreconditionError(f"stimulus {tuple(x)} has zero weight")
    return _argmax_regret(enumerate_consensus_rectangles(theta, epsilon, tuple(x), guard))


def gestalt_structure(theta: InformationStructure, epsilon: float, guard: int = RECT_GUARD) -> float:
    """Max regret over all epsilon-consensus rectangles."""
    return _argmax_regret(enumerate_consensus_rectangles(theta, epsilon, None, guard))[0]


def direct_sum(theta_a: InformationStructure, theta_b: InformationStructure) -> InformationStructure:
    """Independent product: agents of A then B, outcomes Omega_A x Omega_B."""
    w = np.multiply.outer(theta_a.weights, theta_b.weights)
    qa = theta_a.outcome_probs
    qb = theta_b.outcome_probs
    na, nb = theta_a.n, theta_b.n
    # q[xa, xb, wa, wb] = qa[xa, wa] * qb[xb, wb]
    q = np.einsum(
        qa,
        list(range(na)) + [na + nb],
        qb,
        list(range(na, na + nb)) + [na + nb + 1],
        list(range(na + nb + 2)),
    )
    q = q.reshape(w.shape + (theta_a.n_outcomes * theta_b.n_outcomes,))
    outcomes = [(u, v) for u in theta_a.outcomes for v in theta_b.outcomes]
    return from_arrays(w, q, theta_a.signal_spaces + theta_b.signal_spaces, outcomes)


def direct_sum_rect(h_a: Hyperrectangle, h_b: Hyperrectangle) -> Hyperrectangle:
    return Hyperrectangle(h_a.subsets + h_b.subsets)


def detect_multistability(
    theta: InformationStructure,
    x: Sequence[int],
    epsilon: float,
    d: float,
    guard: int = RECT_GUARD,
) -> list[MultistabilityWitness]:
    """Unordered pairs of epsilon-consensuses containing ``x`` with TV >= d."""
    x = tuple(x)
    rects = enumerate_consensus_rectangles(theta, epsilon, x, guard)
    out = []
    for a in range(len(rects)):
        for b in range(a + 1, len(rects)):
            ra, rb = rects[a], rects[b]
            tv = tv_distance(ra.belief, rb.belief)
            if tv >= d - 1e-12:
                overlap = (
                    rect_cond_prob(theta, rb.rect, ra.rect),
                    rect_cond_prob(theta, ra.rect, rb.rect),
                )
                out.append(
                    MultistabilityWitness(
                        ra.rect, rb.rect, ra.belief, rb.belief, tv, overlap, epsilon, d
                    )
                )
    # stable sort keeps lexicographic pair order among equal tv
    out.sort(key=lambda w: -round(w.tv, 12))
    return out


def is_multistable(theta, x, epsilon, d, guard=RECT_GUARD) -> bool:
    return bool(detect_multistability(theta, x, epsilon, d, guard))


def monostability_certificate(
    theta: InformationStructure,
    x: Sequence[int],
    h: Hyperrectangle,
    h_prime: Hyperrectangle,
    epsilon: float,
    d: float,
    complexity: float | None = None,
) -> MonostabilityVerdict:
    """Evaluate the overlap thresholds for a pair of consensuses containing ``x``.

    ``complexity`` may be passed to skip recomputing g(theta, x, epsilon).
    """
    x = tuple(x)
    if d <= 0:
        raise PreconditionError("d must be positive")
    for r in (h, h_prime):
        if not r.contains(x):
            raise PreconditionError(f"{r} does not contain the stimulus {x}")
        if not is_epsilon_consensus(theta, r, epsilon).is_consensus:
            raise PreconditionError(f"{r} is not a {epsilon}-consensus")
    overlap = (rect_cond_prob(theta, h_prime, h), rect_cond_prob(theta, h, h_prime))
    regrets = (float(regret(theta, h)), float(regret(theta, h_prime)))
    tv = tv_distance(posterior_global(theta, h), posterior_global(theta, h_prime))
    if complexity is None:
        complexity = gestalt_stimulus(theta, x, epsilon)
    return _verdict(overlap, regrets, tv, d, theta.n, epsilon, float(complexity), is_conditionally_independent(theta))


def _verdict(overlap, regrets, tv, d, n, epsilon, complexity, independent) -> MonostabilityVerdict:
    lemma_t = min(2 * max(regrets) / d**2, 1 - d / 2)
    subs_t = 2 * n * epsilon / d**2
    cplx_t = 2 * complexity / d**2

    def above(t):
        return overlap[0] > t and overlap[1] > t

    return MonostabilityVerdict(
        overlap,
        regrets,
        tv,
        d,
        lemma_t,
        subs_t,
        cplx_t,
        above(lemma_t),
        above(subs_t),
        above(cplx_t),
        tv < d,
        independent,
    )


def certify_stimulus(
    theta: InformationStructure,
    x: Sequence[int],
    epsilon: float,
    ds: Sequence[float],
    rects=None,
    guard: int = RECT_GUARD,
):
    """Verdicts for every pair of epsilon-consensuses containing ``x`` and every d.

    Yields ``(h, h_prime, verdict)``.  Shared quantities are computed once per
    pair, so this is the fast path for sweeps.  ``rects`` may carry a
    precomputed list of consensus records (as from
    ``enumerate_consensus_rectangles``) that contain ``x``.
    """
    x = tuple(x)
    if any(d <= 0 for d in ds):
        raise PreconditionError("d must be positive")
    if rects is None:
        rects = enumerate_consensus_rectangles(theta, epsilon, x, guard)
    rects = [c for c in rects if c.rect.contains(x)]
    if not rects:
        return
    complexity = float(_argmax_regret(rects)[0])
    independent = is_conditionally_independent(theta)
    for a in range(len(rects)):
        for b in range(a + 1, len(rects)):
            ra, rb = rects[a], rects[b]
            overlap = (rect_cond_prob(theta, rb.rect, ra.rect), rect_cond_prob(theta, ra.rect, rb.rect))
            regrets = (float(ra.regret), float(rb.regret))
            tv = tv_distance(ra.belief, rb.belief)
            for d in ds:
                yield ra.rect, rb.rect, _verdict(overlap, regrets, tv, d, theta.n, epsilon, complexity, independent)
