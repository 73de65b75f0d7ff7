"""Protocols as rectangle partitions: accuracy, information cost and local search.

The objective of a protocol depends only on the partition of the stimulus
space into final histories, so the search runs directly over partitions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .consensus import is_beta_equilibrium
from .errors import GuardExceeded, MultistableError, StructureError
from .infotheory import entropy, kl_divergence, mutual_information
from .partitions import two_block_splits
from .protocol import Policy, Protocol, run_all
from .structure import (
    Hyperrectangle,
    InformationStructure,
    posterior_global,
    rect_prob,
    regret,
)

IMPROVE_TOL = 1e-12
MOVES = ("split", "merge")


@dataclass(frozen=True)
class ProtocolPartition:
    """Disjoint positive-mass leaves covering every positive-weight stimulus."""

    leaves: tuple[Hyperrectangle, ...]

    def __post_init__(self):
        object.__setattr__(self, "leaves", tuple(sorted(self.leaves)))

    def leaf_of(self, x: Sequence[int]) -> Hyperrectangle:
        for leaf in self.leaves:
            if leaf.contains(x):
                return leaf
        raise StructureError(f"stimulus {tuple(x)} is not covered")

    def __len__(self) -> int:
        return len(self.leaves)

    def describe(self, theta: InformationStructure | None = None) -> str:
        return " | ".join(leaf.format(theta) for leaf in self.leaves)


def make_partition(theta: InformationStructure, leaves: Iterable[Hyperrectangle]) -> ProtocolPartition:
    """Validate leaves and wrap them."""
    leaves = list(leaves)
    for a, b in itertools.combinations(leaves, 2):
        if a.intersect(b) is not None:
            raise StructureError(f"leaves {a} and {b} overlap")
    for leaf in leaves:
        if rect_prob(theta, leaf) <= 0:
            raise StructureError(f"leaf {leaf} has zero mass")
    covered = sum(rect_prob(theta, leaf) for leaf in leaves)
    if abs(covered - 1.0) > 1e-9:
        raise StructureError(f"leaves cover mass {covered}, not 1")
    return ProtocolPartition(tuple(leaves))


def trivial_partition(theta: InformationStructure) -> ProtocolPartition:
    return ProtocolPartition((theta.full_rect(),))


def full_partition(theta: InformationStructure) -> ProtocolPartition:
    return ProtocolPartition(tuple(Hyperrectangle.point(x) for x in theta.support()))


def accuracy(theta: InformationStructure, part: ProtocolPartition) -> float:
    """v = I(Pi(X); W) in bits."""
    prior = theta.outcome_marginal()
    return sum(
        rect_prob(theta, leaf) * kl_divergence(posterior_global(theta, leaf), prior)
        for leaf in part.leaves
    )


def info_cost(theta: InformationStructure, part: ProtocolPartition) -> float:
    """c = I(Pi(X); X) = H(Pi(X)) since the leaf is a function of x."""
    return entropy([rect_prob(theta, leaf) for leaf in part.leaves])


def objective(theta: InformationStructure, part: ProtocolPartition, beta: float) -> float:
    if beta < 0:
        raise MultistableError("beta must be non-negative")
    return accuracy(theta, part) - beta * info_cost(theta, part)


def expected_regret(theta: InformationStructure, part: ProtocolPartition) -> float:
    return sum(rect_prob(theta, leaf) * regret(theta, leaf) for leaf in part.leaves)


# ---------------------------------------------------------------------------
# neighbourhood


@dataclass(frozen=True)
class Move:
    kind: str  # "split" or "merge"
    agent: int
    leaves_before: tuple[Hyperrectangle, ...]
    leaves_after: tuple[Hyperrectangle, ...]

    def __str__(self) -> str:
        before = "+".join(str(r) for r in self.leaves_before)
        after = "+".join(str(r) for r in self.leaves_after)
        return f"{self.kind}[{self.agent}] {before} -> {after}"


def neighbors(
    theta: InformationStructure, part: ProtocolPartition, moves: Sequence[str] = MOVES
) -> list[tuple[Move, ProtocolPartition]]:
    """Partitions differing from ``part`` at one leaf in one agent's knowledge.

    ``split`` cuts one agent's B_i at one leaf into two blocks; ``merge`` joins
    two leaves that agree on every axis but one.
    """
    out = []
    leaves = part.leaves
    if "split" in moves:
        for k, leaf in enumerate(leaves):
            for i in range(theta.n):
                for a, b in two_block_splits(leaf.subsets[i]):
                    la, lb = leaf.replace(i, a), leaf.replace(i, b)
                    if rect_prob(theta, la) <= 0 or rect_prob(theta, lb) <= 0:
                        continue
                    new = leaves[:k] + leaves[k + 1:] + (la, lb)
                    out.append((Move("split", i, (leaf,), (la, lb)), ProtocolPartition(new)))
    if "merge" in moves:
        for (ka, la), (kb, lb) in itertools.combinations(enumerate(leaves), 2):
            diff = [i for i in range(theta.n) if la.subsets[i] != lb.subsets[i]]
            if len(diff) != 1:
                continue
            i = diff[0]
            merged = la.replace(i, la.subsets[i] + lb.subsets[i])
            new = tuple(leaf for k, leaf in enumerate(leaves) if k not in (ka, kb)) + (merged,)
            out.append((Move("merge", i, (la, lb), (merged,)), ProtocolPartition(new)))
    return out


@dataclass(frozen=True)
class TraceStep:
    step: int
    move: str
    objective: float
    accuracy: float
    cost: float


@dataclass(frozen=True)
class SearchResult:
    trace: tuple[TraceStep, ...]
    partition: ProtocolPartition

    @property
    def objective(self) -> float:
        return self.trace[-1].objective


def local_search(
    theta: InformationStructure,
    beta: float,
    start: ProtocolPartition | None = None,
    seed: int = 0,
    moves: Sequence[str] = MOVES,
    strategy: str = "best",
    max_steps: int = 10_000,
    guard: int = 10**6,
) -> SearchResult:
    """Greedy hill climbing on accuracy - beta * cost.

    ``best`` takes the best neighbour (ties: lexicographically smallest
    leaves); ``first`` scans neighbours in a seeded random order and takes
    the first strict improvement.  Stops when nothing improves by more than
    1e-12.
    """
    if strategy not in ("best", "first"):
        raise MultistableError(f"unknown strategy {strategy!r}")
    rng = np.random.default_rng(seed)
    part = trivial_partition(theta) if start is None else start
    cur = objective(theta, part, beta)
    trace = [TraceStep(0, "start", cur, accuracy(theta, part), info_cost(theta, part))]
    for step_no in range(1, max_steps + 1):
        nbrs = neighbors(theta, part, moves)
        if len(nbrs) > guard:
            raise GuardExceeded(f"{len(nbrs)} neighbours exceed the guard {guard}")
        chosen = None
        if strategy == "best":
            best_val = cur + IMPROVE_TOL
            for mv, cand in sorted(nbrs, key=lambda mc: mc[1].leaves):
                val = objective(theta, cand, beta)
                if val > best_val:
                    chosen, best_val = (mv, cand, val), val
        else:
            for k in rng.permutation(len(nbrs)):
                mv, cand = nbrs[k]
                val = objective(theta, cand, beta)
                if val > cur + IMPROVE_TOL:
                    chosen = (mv, cand, val)
                    break
        if chosen is None:
            break
        mv, part, cur = chosen
        trace.append(TraceStep(step_no, str(mv), cur, accuracy(theta, part), info_cost(theta, part)))
    return SearchResult(tuple(trace), part)


def is_local_optimum(
    theta: InformationStructure, beta: float, part: ProtocolPartition, moves: Sequence[str] = MOVES
) -> tuple[bool, tuple[Move, ProtocolPartition, float] | None]:
    """True iff no neighbour has a strictly larger objective (tolerance 1e-12)."""
    cur = objective(theta, part, beta)
    best = None
    for mv, cand in sorted(neighbors(theta, part, moves), key=lambda mc: mc[1].leaves):
        val = objective(theta, cand, beta)
        if val > cur + IMPROVE_TOL and (best is None or val > best[2]):
            best = (mv, cand, val)
    return best is None, best


def is_beta_equilibrium_partition(theta: InformationStructure, part: ProtocolPartition, beta: float) -> bool:
    return all(is_beta_equilibrium(theta, leaf, beta).is_equilibrium for leaf in part.leaves)


# ---------------------------------------------------------------------------
# protocols <-> partitions


def partition_from_protocol(theta: InformationStructure, protocol: Protocol) -> ProtocolPartition:
    leaves = {tr.final for tr in run_all(theta, protocol).values()}
    return make_partition(theta, leaves)


def round_decomposition(theta: InformationStructure, protocol: Protocol) -> list[tuple[float, float]]:
    """[(I(H^t; W | H^{t-1}), H(H^t | H^{t-1})) for t = 1..T].

    Stimuli that stopped early keep their final history in later rounds.
    """
    runs = run_all(theta, protocol)
    paths = {x: tr.rects() for x, tr in runs.items()}
    horizon = max(len(p) for p in paths.values()) - 1
    out = []
    for t in range(1, horizon + 1):
        groups: dict[Hyperrectangle, dict[Hyperrectangle, np.ndarray]] = {}
        for x, path in paths.items():
            prev = path[min(t - 1, len(path) - 1)]
            cur = path[min(t, len(path) - 1)]
            row = groups.setdefault(prev, {}).setdefault(cur, np.zeros(theta.n_outcomes))
            row += theta.joint[x]
        info = ent = 0.0
        for children in groups.values():
            table = np.array(list(children.values()))
            mass = table.sum()
            if len(children) > 1:
                info += mass * mutual_information(table)
                ent += mass * entropy(table.sum(axis=1) / mass)
        out.append((info, ent))
    return out


def _cut_blocks(values: tuple[int, ...], leaf_subsets: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Coarsest blocks of ``values`` such that no leaf straddles two blocks."""
    parent = {v: v for v in values}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for sub in leaf_subsets:
        for v in sub[1:]:
            parent[find(v)] = find(sub[0])
    comps: dict[int, list[int]] = {}
    seen = {v for sub in leaf_subsets for v in sub}
    for v in values:
        if v in seen:
            comps.setdefault(find(v), []).append(v)
    blocks = sorted(tuple(c) for c in comps.values())
    orphans = tuple(v for v in values if v not in seen)
    if orphans and blocks:
        blocks[0] = tuple(sorted(blocks[0] + orphans))
    return blocks


def protocol_from_partition(
    theta: InformationStructure, part: ProtocolPartition, beta: float = 1.0
) -> Protocol:
    """Explicit protocol whose final histories are the leaves of ``part``.

    Agents speak in round-robin order and follow a custom plan; an agent
    without a planned split at the current history stays silent.  Raises
    if the partition cannot be produced by any protocol tree.
    """
    plans: list[dict[Hyperrectangle, tuple]] = [dict() for _ in range(theta.n)]
    depth = 0

    def build(rect: Hyperrectangle, leaves: list[Hyperrectangle], level: int):
        nonlocal depth
        depth = max(depth, level)
        if len(leaves) == 1:
            return
        for i in range(theta.n):
            blocks = _cut_blocks(rect.subsets[i], [leaf.subsets[i] for leaf in leaves])
            if len(blocks) > 1:
                plans[i][rect] = tuple(blocks)
                for blk in blocks:
                    sub = rect.replace(i, blk)
                    build(sub, [leaf for leaf in leaves if set(leaf.subsets[i]) <= set(blk)], level + 1)
                return
        raise StructureError(f"leaves inside {rect} cannot be separated by any single agent")

    build(theta.full_rect(), list(part.leaves), 0)
    policies = tuple(Policy(i, "custom-partition", plan=plans[i]) for i in range(theta.n))
    return Protocol(policies, order=tuple(range(theta.n)), max_rounds=max(1, theta.n * (depth + 1)), beta=beta)


def enumerate_rectangle_partitions(theta: InformationStructure, guard: int = 10**6) -> list[ProtocolPartition]:
    """Every partition of the product space into positive-mass rectangles."""
    cells = list(itertools.product(*[range(k) for k in theta.shape]))
    if len(cells) > 16:
        raise GuardExceeded(f"{len(cells)} cells is too many for exhaustive partition search")
    axes_subsets = [
        [c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)] for k in theta.shape
    ]
    out: list[ProtocolPartition] = []

    def rec(covered: frozenset, leaves: list[Hyperrectangle]):
        if len(out) > guard:
            raise GuardExceeded(f"more than {guard} rectangle partitions")
        first = next((c for c in cells if c not in covered), None)
        if first is None:
            if all(rect_prob(theta, leaf) > 0 for leaf in leaves):
                out.append(ProtocolPartition(tuple(leaves)))
            return
        per_axis = [[s for s in subs if first[i] in s] for i, subs in enumerate(axes_subsets)]
        for combo in itertools.product(*per_axis):
            r = Hyperrectangle(combo)
            rc = set(r.cells())
            if rc & covered:
                continue
            rec(covered | rc, leaves + [r])

    rec(frozenset(), [])
    return out


def global_optimum(theta: InformationStructure, beta: float) -> tuple[float, ProtocolPartition]:
    """Best objective over all rectangle partitions (exhaustive; small spaces only)."""
    best = None
    for part in enumerate_rectangle_partitions(theta):
        val = objective(theta, part, beta)
        if best is None or val > best[0] + IMPROVE_TOL:
            best = (val, part)
    return best
