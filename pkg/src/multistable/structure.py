"""Information structures, hyperrectangle histories and posterior beliefs.

An :class:`InformationStructure` is a complete table over the product of the
agents' signal spaces.  Each cell carries a probability weight and a
conditional distribution over outcomes.  Internally everything is addressed
by integer indices; labels are only used at the boundary (``rect``,
``stimulus``, formatting).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import GuardExceeded, StructureError, ZeroMassError
from .infotheory import NORM_TOL, kl_divergence

#: Default cap on the number of rectangles an exhaustive enumeration may visit.
RECT_GUARD = 10**7


@dataclass(frozen=True, order=True)
class Hyperrectangle:
    """Knowledge state ``X_i in B_i for all i``, stored as sorted index tuples."""

    subsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        norm = tuple(tuple(sorted(set(int(v) for v in b))) for b in self.subsets)
        if any(len(b) == 0 for b in norm):
            raise StructureError("every B_i of a hyperrectangle must be nonempty")
        object.__setattr__(self, "subsets", norm)

    @classmethod
    def full(cls, shape: Sequence[int]) -> "Hyperrectangle":
        return cls(tuple(tuple(range(k)) for k in shape))

    @classmethod
    def point(cls, x: Sequence[int]) -> "Hyperrectangle":
        return cls(tuple((int(v),) for v in x))

    @property
    def n(self) -> int:
        return len(self.subsets)

    @property
    def n_cells(self) -> int:
        return int(np.prod([len(b) for b in self.subsets]))

    def contains(self, x: Sequence[int]) -> bool:
        return all(v in b for v, b in zip(x, self.subsets))

    def issubset(self, other: "Hyperrectangle") -> bool:
        return all(set(a) <= set(b) for a, b in zip(self.subsets, other.subsets))

    def intersect(self, other: "Hyperrectangle") -> "Hyperrectangle | None":
        """Axis-wise intersection; ``None`` when the result is empty."""
        inter = [sorted(set(a) & set(b)) for a, b in zip(self.subsets, other.subsets)]
        if any(not b for b in inter):
            return None
        return Hyperrectangle(tuple(tuple(b) for b in inter))

    def hull(self, other: "Hyperrectangle") -> "Hyperrectangle":
        """Smallest rectangle containing both (axis-wise union)."""
        return Hyperrectangle(
            tuple(tuple(sorted(set(a) | set(b))) for a, b in zip(self.subsets, other.subsets))
        )

    def replace(self, i: int, block: Iterable[int]) -> "Hyperrectangle":
        subs = list(self.subsets)
        subs[i] = tuple(block)
        return Hyperrectangle(tuple(subs))

    def cells(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(*self.subsets)

    def format(self, theta: "InformationStructure | None" = None) -> str:
        parts = []
        for i, b in enumerate(self.subsets):
            labels = b if theta is None else [theta.signal_spaces[i][j] for j in b]
            parts.append("{" + ",".join(str(v) for v in labels) + "}")
        return "x".join(parts)

    def __str__(self) -> str:
        return self.format()


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Exact joint distribution of n discrete signals and a discrete target.

    ``weights`` has shape ``(|S_1|, ..., |S_n|)`` and sums to one;
    ``outcome_probs`` has shape ``(|S_1|, ..., |S_n|, |Omega|)``.
    ``normalization`` is the factor that was applied to the raw weights.
    """

    signal_spaces: tuple[tuple, ...]
    outcomes: tuple
    weights: np.ndarray
    outcome_probs: np.ndarray
    normalization: float = 1.0
    joint: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        q = np.array(self.outcome_probs, dtype=float)
        w.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "outcome_probs", q)
        joint = w[..., None] * q
        joint.flags.writeable = False
        object.__setattr__(self, "joint", joint)
        object.__setattr__(
            self, "_index", [{lab: k for k, lab in enumerate(s)} for s in self.signal_spaces]
        )

    @property
    def n(self) -> int:
        return len(self.signal_spaces)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.signal_spaces)

    @property
    def n_outcomes(self) -> int:
        return len(self.outcomes)

    def signal_index(self, i: int, label) -> int:
        try:
            return self._index[i][label]
        except (KeyError, TypeError):
            pass
        # textual input (CLI, CSV) matches labels by their string form
        for lab, k in self._index[i].items():
            if str(lab) == str(label):
                return k
        raise StructureError(f"{label!r} is not a signal of agent {i}")

    def stimulus(self, labels: Sequence) -> tuple[int, ...]:
        """Convert a tuple of signal labels into cell indices."""
        if len(labels) != self.n:
            raise StructureError(f"stimulus needs {self.n} signals, got {len(labels)}")
        return tuple(self.signal_index(i, lab) for i, lab in enumerate(labels))

    def rect(self, subsets: Sequence[Iterable]) -> Hyperrectangle:
        """Build a hyperrectangle from per-agent label sets."""
        if len(subsets) != self.n:
            raise StructureError(f"rectangle needs {self.n} subsets")
        return Hyperrectangle(
            tuple(tuple(self.signal_index(i, lab) for lab in b) for i, b in enumerate(subsets))
        )

    def full_rect(self) -> Hyperrectangle:
        return Hyperrectangle.full(self.shape)

    def support(self) -> list[tuple[int, ...]]:
        """Positive-weight stimuli in lexicographic order."""
        return [tuple(int(v) for v in idx) for idx in zip(*np.nonzero(self.weights))]

    def outcome_marginal(self) -> np.ndarray:
        return self.joint.reshape(-1, self.n_outcomes).sum(axis=0)

    def __eq__(self, other):
        if not isinstance(other, InformationStructure):
            return NotImplemented
        return (
            self.signal_spaces == other.signal_spaces
            and self.outcomes == other.outcomes
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.outcome_probs, other.outcome_probs)
        )

    __hash__ = object.__hash__


def from_arrays(
    weights,
    outcome_probs,
    signal_spaces: Sequence[Sequence] | None = None,
    outcomes: Sequence | None = None,
) -> InformationStructure:
    """Validate and normalize array-form inputs into a structure."""
    w = np.asarray(weights, dtype=float)
    q = np.asarray(outcome_probs, dtype=float)
    if q.ndim != w.ndim + 1 or q.shape[:-1] != w.shape:
        raise StructureError(
            f"outcome table shape {q.shape} does not match weights shape {w.shape}"
        )
    if q.shape[-1] == 0:
        raise StructureError("outcome space is empty")
    if signal_spaces is None:
        signal_spaces = [tuple(range(k)) for k in w.shape]
    if outcomes is None:
        outcomes = tuple(range(q.shape[-1]))
    signal_spaces = tuple(tuple(s) for s in signal_spaces)
    if tuple(len(s) for s in signal_spaces) != w.shape:
        raise StructureError("signal space sizes do not match the weight table")
    for i, s in enumerate(signal_spaces):
        if len(set(s)) != len(s):
            raise StructureError(f"agent {i} has duplicate signal labels")
    if len(set(outcomes)) != len(outcomes):
        raise StructureError("duplicate outcome labels")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        bad = tuple(int(v) for v in np.argwhere(~(w >= 0))[0])
        raise StructureError(f"negative or non-finite weight at cell {bad}")
    if np.any(~np.isfinite(q)) or np.any(q < 0):
        bad = tuple(int(v) for v in np.argwhere(~(q >= 0))[0][:-1])
        raise StructureError(f"negative outcome probability at cell {bad}")
    sums = q.sum(axis=-1)
    off = np.abs(sums - 1.0) > 1e-9
    if np.any(off):
        bad = tuple(int(v) for v in np.argwhere(off)[0])
        raise StructureError(f"outcome probabilities at cell {bad} sum to {sums[bad]!r}")
    q = q / sums[..., None]
    total = w.sum()
    if total <= 0:
        raise StructureError("total weight is zero")
    factor = 1.0 / total
    return InformationStructure(signal_spaces, tuple(outcomes), w * factor, q, factor)


def validate_structure(raw: dict) -> InformationStructure:
    """Build a structure from a scenario description.

    ``raw`` has keys ``agents`` (list of signal-label lists), ``outcomes``
    and ``cells`` (records with ``signals``, ``weight``, ``outcome_probs``).
    Every tuple of the product space must appear exactly once.
    """
    try:
        agents = [list(a) for a in raw["agents"]]
        outcomes = list(raw["outcomes"])
        cells = list(raw["cells"])
    except (KeyError, TypeError) as exc:
        raise StructureError(f"scenario is missing field {exc}") from None
    if not agents:
        raise StructureError("no agents")
    if not outcomes:
        raise StructureError("outcome space is empty")
    for i, a in enumerate(agents):
        if not a:
            raise StructureError(f"agent {i} has an empty signal space")
        if len(set(map(repr, a))) != len(a):
            raise StructureError(f"agent {i} has duplicate signal labels")
    index = [{lab: k for k, lab in enumerate(a)} for a in agents]
    shape = tuple(len(a) for a in agents)
    w = np.full(shape, np.nan)
    q = np.zeros(shape + (len(outcomes),))
    for c_no, cell in enumerate(cells):
        sig = cell.get("signals")
        if sig is None or len(sig) != len(agents):
            raise StructureError(f"cell #{c_no}: expected {len(agents)} signals")
        try:
            idx = tuple(index[i][lab] for i, lab in enumerate(sig))
        except KeyError as exc:
            raise StructureError(f"cell #{c_no} {sig}: unknown signal label {exc}") from None
        if not np.isnan(w[idx]):
            raise StructureError(f"cell {sig} appears more than once")
        weight = float(cell.get("weight", np.nan))
        if not np.isfinite(weight) or weight < 0:
            raise StructureError(f"cell {sig}: negative or missing weight {cell.get('weight')!r}")
        probs = np.asarray(cell.get("outcome_probs", []), dtype=float)
        if probs.shape != (len(outcomes),):
            raise StructureError(f"cell {sig}: expected {len(outcomes)} outcome probabilities")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise StructureError(f"cell {sig}: outcome probabilities {probs.tolist()} are malformed")
        w[idx] = weight
        q[idx] = probs
    if np.any(np.isnan(w)):
        missing = tuple(int(v) for v in np.argwhere(np.isnan(w))[0])
        labels = [agents[i][k] for i, k in enumerate(missing)]
        raise StructureError(f"cell {labels} is missing")
    return from_arrays(w, q, agents, outcomes)


# ---------------------------------------------------------------------------
# rectangle probabilities and beliefs


def restrict(theta: InformationStructure, h: Hyperrectangle) -> np.ndarray:
    """Joint masses (cells x outcomes) inside ``h``, shape ``(*|B_i|, |Omega|)``."""
    if h.n != theta.n:
        raise StructureError(f"rectangle has {h.n} axes, structure has {theta.n} agents")
    return theta.joint[np.ix_(*h.subsets, range(theta.n_outcomes))]


def rect_prob(theta: InformationStructure, h: Hyperrectangle) -> float:
    return float(theta.weights[np.ix_(*h.subsets)].sum())


def rect_cond_prob(theta: InformationStructure, h_prime: Hyperrectangle, h: Hyperrectangle) -> float:
    """Pr[x in h' | x in h]."""
    denom = rect_prob(theta, h)
    if denom <= 0:
        raise ZeroMassError(f"conditioning rectangle {h} has zero mass")
    inter = h.intersect(h_prime)
    if inter is None:
        return 0.0
    return rect_prob(theta, inter) / denom


def _normalize(masses: np.ndarray, what: str) -> np.ndarray:
    total = masses.sum()
    if total <= 0:
        raise ZeroMassError(f"{what} has zero mass")
    return masses / total


def posterior_global(theta: InformationStructure, h: Hyperrectangle) -> np.ndarray:
    """q_h: the outcome distribution given x in h."""
    sub = restrict(theta, h)
    return _normalize(sub.reshape(-1, theta.n_outcomes).sum(axis=0), f"rectangle {h}")


def posterior_local(theta: InformationStructure, h: Hyperrectangle, i: int, x_i: int) -> np.ndarray:
    """q_{h,x_i}: belief of agent ``i`` holding signal index ``x_i`` at history ``h``."""
    if x_i not in h.subsets[i]:
        raise StructureError(f"signal {x_i} of agent {i} is outside B_{i} = {h.subsets[i]}")
    return posterior_global(theta, h.replace(i, (x_i,)))


def posterior_ground_truth(theta: InformationStructure, x: Sequence[int]) -> np.ndarray:
    x = tuple(x)
    if theta.weights[x] <= 0:
        raise ZeroMassError(f"stimulus {x} has zero weight")
    return np.array(theta.outcome_probs[x])


def local_tables(theta: InformationStructure, h: Hyperrectangle, i: int) -> np.ndarray:
    """Joint masses of (X_i, W) inside ``h``: shape ``(|B_i|, |Omega|)``."""
    sub = restrict(theta, h)
    axes = tuple(a for a in range(theta.n) if a != i)
    return sub.sum(axis=axes)


def cond_mutual_info_signal(theta: InformationStructure, i: int, h: Hyperrectangle) -> float:
    """I(X_i; W | h) as the expected KL between local and global beliefs."""
    table = local_tables(theta, h, i)
    masses = table.sum(axis=1)
    total = masses.sum()
    if total <= 0:
        raise ZeroMassError(f"rectangle {h} has zero mass")
    q_h = table.sum(axis=0) / total
    out = 0.0
    for m, row in zip(masses, table):
        if m > 0:
            out += (m / total) * kl_divergence(row / m, q_h)
    return out


def regret(theta: InformationStructure, h: Hyperrectangle) -> float:
    """I(X; W | h): expected KL between ground-truth and global beliefs over h."""
    sub = restrict(theta, h).reshape(-1, theta.n_outcomes)
    masses = sub.sum(axis=1)
    total = masses.sum()
    if total <= 0:
        raise ZeroMassError(f"rectangle {h} has zero mass")
    q_h = sub.sum(axis=0) / total
    out = 0.0
    for m, row in zip(masses, sub):
        if m > 0:
            out += (m / total) * kl_divergence(row / m, q_h)
    return out


# ---------------------------------------------------------------------------
# enumeration


def nonempty_subsets(k: int) -> list[tuple[int, ...]]:
    """All nonempty subsets of range(k) in lexicographic tuple order."""
    subs = [
        c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)
    ]
    return sorted(subs)


def count_rectangles(shape: Sequence[int]) -> int:
    return int(np.prod([2**k - 1 for k in shape], dtype=object))


def iter_rectangles(
    theta: InformationStructure,
    containing: Sequence[int] | None = None,
    positive: bool = True,
    guard: int = RECT_GUARD,
) -> Iterator[Hyperrectangle]:
    """Enumerate rectangles in lexicographic order.

    ``containing`` restricts to rectangles holding that stimulus; ``positive``
    drops zero-mass rectangles.
    """
    total = count_rectangles(theta.shape)
    if total > guard:
        raise GuardExceeded(f"{total} rectangles exceed the enumeration guard {guard}")
    per_axis = []
    for i, k in enumerate(theta.shape):
        subs = nonempty_subsets(k)
        if containing is not None:
            subs = [s for s in subs if containing[i] in s]
        per_axis.append(subs)
    for combo in itertools.product(*per_axis):
        h = Hyperrectangle(combo)
        if positive and rect_prob(theta, h) <= 0:
            continue
        yield h


def is_conditionally_independent(theta: InformationStructure, tol: float = 1e-12) -> bool:
    """True when the signals are mutually independent given W."""
    joint = theta.joint
    p_w = theta.outcome_marginal()
    for w in range(theta.n_outcomes):
        if p_w[w] <= 0:
            continue
        cond = joint[..., w] / p_w[w]
        prod = np.ones(())
        for i in range(theta.n):
            axes = tuple(a for a in range(theta.n) if a != i)
            prod = np.multiply.outer(prod, cond.sum(axis=axes))
        if not np.allclose(prod, cond, atol=tol, rtol=0):
            return False
    return True


__all__ = [
    "Hyperrectangle",
    "InformationStructure",
    "NORM_TOL",
    "cond_mutual_info_signal",
    "count_rectangles",
    "from_arrays",
    "is_conditionally_independent",
    "iter_rectangles",
    "local_tables",
    "nonempty_subsets",
    "posterior_global",
    "posterior_ground_truth",
    "posterior_local",
    "rect_cond_prob",
    "rect_prob",
    "regret",
    "restrict",
    "validate_structure",
]
