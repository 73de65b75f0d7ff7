"""Consensus and equilibrium tests for a (structure, history) pair."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import bisect

from .errors import MultistableError, ZeroMassError
from .infotheory import ATOL, binary_entropy, entropy, mutual_information
from .partitions import PARTITION_GUARD, bell, set_partitions
from .structure import (
    RECT_GUARD,
    Hyperrectangle,
    InformationStructure,
    cond_mutual_info_signal,
    iter_rectangles,
    local_tables,
    posterior_global,
    rect_prob,
    regret,
)

#: Utilities at or below this value count as "non-positive".
UTILITY_TOL = 1e-12


@dataclass(frozen=True)
class ConsensusReport:
    is_consensus: bool
    per_agent_mi: tuple[float, ...]
    epsilon: float


class ConsensusRect(NamedTuple):
    rect: Hyperrectangle
    belief: np.ndarray
    regret: float


@dataclass(frozen=True)
class Deviation:
    agent: int
    partition: tuple[tuple[int, ...], ...]
    information: float
    entropy: float
    utility: float


@dataclass(frozen=True)
class EquilibriumReport:
    is_equilibrium: bool
    beta: float
    worst: Deviation | None


def _require_mass(theta: InformationStructure, h: Hyperrectangle) -> None:
    if rect_prob(theta, h) <= 0:
        raise ZeroMassError(f"rectangle {h} has zero mass")


def is_epsilon_consensus(
    theta: InformationStructure, h: Hyperrectangle, epsilon: float, tol: float = ATOL
) -> ConsensusReport:
    """Every agent's I(X_i; W | h) is at most epsilon (up to ``tol``)."""
    if epsilon < 0:
        raise MultistableError("epsilon must be non-negative")
    _require_mass(theta, h)
    mis = tuple(cond_mutual_info_signal(theta, i, h) for i in range(theta.n))
    return ConsensusReport(max(mis) <= epsilon + tol, mis, float(epsilon))


def enumerate_consensus_rectangles(
    theta: InformationStructure,
    epsilon: float,
    containing=None,
    guard: int = RECT_GUARD,
    tol: float = ATOL,
) -> list[ConsensusRect]:
    """All positive-mass epsilon-consensus rectangles, lexicographic order."""
    out = []
    for h in iter_rectangles(theta, containing=containing, guard=guard):
        if is_epsilon_consensus(theta, h, epsilon, tol).is_consensus:
            out.append(ConsensusRect(h, posterior_global(theta, h), regret(theta, h)))
    return out


def partition_utilities(
    theta: InformationStructure,
    h: Hyperrectangle,
    i: int,
    guard: int = PARTITION_GUARD,
) -> list[tuple[tuple[tuple[int, ...], ...], float, float]]:
    """(partition, I(P;W|h), H(P|h)) for every partition P of agent i's B_i."""
    table = local_tables(theta, h, i)
    items = h.subsets[i]
    out = []
    for blocks in set_partitions(range(len(items)), guard=guard):
        merged = np.array([table[list(b)].sum(axis=0) for b in blocks])
        info = mutual_information(merged) if len(blocks) > 1 else 0.0
        ent = entropy(merged.sum(axis=1) / merged.sum()) if len(blocks) > 1 else 0.0
        labelled = tuple(tuple(items[k] for k in b) for b in blocks)
        out.append((labelled, info, ent))
    return out


def is_beta_equilibrium(
    theta: InformationStructure,
    h: Hyperrectangle,
    beta: float,
    guard: int = PARTITION_GUARD,
) -> EquilibriumReport:
    """No agent has a message partition with I(P;W|h) - beta H(P|h) > 0.

    Any deterministic message function of X_i is, up to relabelling, a set
    partition of B_i, and both I and H only see the induced partition, so
    enumerating partitions is exhaustive.
    """
    if beta < 0:
        raise MultistableError("beta must be non-negative")
    _require_mass(theta, h)
    for i in range(theta.n):
        if bell(len(h.subsets[i])) > guard:
            raise MultistableError(
                f"agent {i}: Bell({len(h.subsets[i])}) partitions exceed the guard {guard}"
            )
    worst: Deviation | None = None
    for i in range(theta.n):
        for blocks, info, ent in partition_utilities(theta, h, i, guard):
            u = info - beta * ent
            cand = Deviation(i, blocks, info, ent, u)
            # strict improvement keeps the lexicographically first maximizer
            if worst is None or u > worst.utility + UTILITY_TOL:
                worst = cand
    assert worst is not None
    return EquilibriumReport(worst.utility <= UTILITY_TOL, float(beta), worst)


def inverse_binary_entropy(epsilon: float, xtol: float = 1e-12) -> float:
    """The x in [1e-12, 0.5] with H_b(x) = epsilon (bits)."""
    if not 0 < epsilon <= 1:
        raise MultistableError("epsilon must lie in (0, 1]")
    if binary_entropy(0.5) <= epsilon:
        return 0.5
    lo = 1e-12
    if binary_entropy(lo) >= epsilon:
        return lo
    return bisect(lambda x: binary_entropy(x) - epsilon, lo, 0.5, xtol=xtol, maxiter=500)


def b_of_epsilon(epsilon: float) -> float:
    """Cost weight below which beta-equilibrium implies epsilon-consensus.

    b = epsilon^2 / 16 / log2(1 / x) where x <= 1/2 solves H_b(x) = epsilon.
    """
    x = inverse_binary_entropy(epsilon)
    return epsilon**2 / 16.0 / math.log2(1.0 / x)
