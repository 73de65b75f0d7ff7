"""Shared-blackboard protocols.

A protocol is a speaker order plus one deterministic policy per agent.  In
each round the speaker writes a message; we represent the message by the
block of her current signal set ``B_i`` that it reveals, so every history is
a hyperrectangle and refines the previous one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import MultistableError, PolicyError, ZeroMassError
from .infotheory import ATOL, entropy, tv_distance
from .structure import (
    Hyperrectangle,
    InformationStructure,
    cond_mutual_info_signal,
    local_tables,
    posterior_global,
    rect_cond_prob,
)

POLICY_KINDS = ("threshold", "full-reveal", "silent", "custom-partition", "posterior")
STOP_RULES = ("default", "consensus", "always", "never", "plan")

Blocks = tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Policy:
    """Deterministic message rule of one agent.

    ``threshold``: reveal whether the local belief in ``outcome`` is >= tau
    (or > tau when ``strict``).  ``posterior``: reveal the local belief
    itself, i.e. group signals with equal beliefs.  ``custom-partition``:
    ``plan`` maps a history to the blocks the agent splits ``B_i`` into;
    histories missing from the plan get silence.
    """

    agent: int
    kind: str = "full-reveal"
    tau: float = 0.5
    outcome: int = 1
    strict: bool = False
    plan: Mapping[Hyperrectangle, Blocks] | None = None
    stop: str = "default"
    stop_tolerance: float = ATOL

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise PolicyError(f"unknown policy kind {self.kind!r}")
        if self.stop not in STOP_RULES:
            raise PolicyError(f"unknown stop rule {self.stop!r}")
        if self.kind == "custom-partition" and self.plan is None:
            raise PolicyError("custom-partition policy needs a plan")

    def blocks(self, theta: InformationStructure, h: Hyperrectangle) -> Blocks:
        """Partition of the current ``B_i`` induced by this policy at ``h``."""
        b = h.subsets[self.agent]
        if self.kind == "silent":
            return (b,)
        if self.kind == "full-reveal":
            return tuple((v,) for v in b)
        if self.kind == "custom-partition":
            return tuple(tuple(blk) for blk in self.plan.get(h, (b,)))
        table = local_tables(theta, h, self.agent)
        mass = table.sum(axis=1)
        if self.kind == "threshold":
            high, low = [], []
            for v, row, m in zip(b, table, mass):
                q = row[self.outcome] / m if m > 0 else -math.inf
                up = q > self.tau + 1e-12 if self.strict else q >= self.tau - 1e-12
                (high if up else low).append(v)
            return tuple(blk for blk in (tuple(low), tuple(high)) if blk)
        # posterior: signals with the same local belief are indistinguishable
        groups: dict[tuple, list[int]] = {}
        for v, row, m in zip(b, table, mass):
            key = tuple(np.round(row / m, 12)) if m > 0 else ("null",)
            groups.setdefault(key, []).append(v)
        return tuple(tuple(g) for g in sorted(groups.values()))

    def message(self, theta: InformationStructure, h: Hyperrectangle, x_i: int) -> tuple[int, ...]:
        blocks = self.blocks(theta, h)
        _check_blocks(blocks, h.subsets[self.agent], self.agent)
        for blk in blocks:
            if x_i in blk:
                return blk
        raise PolicyError(f"agent {self.agent}: signal {x_i} is not covered by {blocks}")

    def wants_stop(self, theta: InformationStructure, h: Hyperrectangle) -> bool:
        rule = self.stop
        if rule == "default":
            rule = {"silent": "always", "custom-partition": "plan"}.get(self.kind, "consensus")
        if rule == "always":
            return True
        if rule == "never":
            return False
        if rule == "plan":
            return self.plan is None or h not in self.plan
        return cond_mutual_info_signal(theta, self.agent, h) <= self.stop_tolerance


def _check_blocks(blocks: Blocks, b: Sequence[int], agent: int) -> None:
    flat = [v for blk in blocks for v in blk]
    if any(len(blk) == 0 for blk in blocks):
        raise PolicyError(f"agent {agent}: empty message block")
    if sorted(flat) != sorted(b) or len(set(flat)) != len(flat):
        raise PolicyError(f"agent {agent}: blocks {blocks} do not partition B_{agent} = {tuple(b)}")


@dataclass(frozen=True)
class Protocol:
    """Speaker order plus one policy per agent.

    With an explicit ``order`` the sequence is cycled; with ``order=None``
    speakers are drawn uniformly from a generator seeded by ``seed``.
    """

    policies: tuple[Policy, ...]
    order: tuple[int, ...] | None = None
    seed: int | None = None
    max_rounds: int = 20
    beta: float = 1.0
    speakers: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        pols = tuple(self.policies)
        object.__setattr__(self, "policies", pols)
        if self.max_rounds < 1:
            raise MultistableError("max_rounds must be at least 1")
        if sorted(p.agent for p in pols) != list(range(len(pols))):
            raise MultistableError("need exactly one policy per agent 0..n-1")
        pols = tuple(sorted(pols, key=lambda p: p.agent))
        object.__setattr__(self, "policies", pols)
        n = len(pols)
        if self.order is not None:
            order = tuple(int(i) for i in self.order)
            if not order or any(not 0 <= i < n for i in order):
                raise MultistableError(f"order {order} must list agents in 0..{n - 1}")
            object.__setattr__(self, "order", order)
            speakers = tuple(order[t % len(order)] for t in range(self.max_rounds))
        else:
            if self.seed is None:
                raise MultistableError("random order needs a seed")
            rng = np.random.default_rng(self.seed)
            speakers = tuple(int(v) for v in rng.integers(n, size=self.max_rounds))
        object.__setattr__(self, "speakers", speakers)

    @property
    def n(self) -> int:
        return len(self.policies)

    def speaker(self, t: int) -> int:
        """Agent writing in round ``t`` (1-based)."""
        return self.speakers[t - 1]


@dataclass(frozen=True)
class Round:
    t: int
    speaker: int
    block: tuple[int, ...]
    rect: Hyperrectangle
    belief: np.ndarray
    reward_bits: np.ndarray  # per outcome
    cost_bits: float


@dataclass(frozen=True)
class Transcript:
    stimulus: tuple[int, ...]
    initial: Hyperrectangle
    initial_belief: np.ndarray
    rounds: tuple[Round, ...] = ()
    terminated_by: str | None = None
    seed: int | None = None

    @property
    def final(self) -> Hyperrectangle:
        return self.rounds[-1].rect if self.rounds else self.initial

    @property
    def final_belief(self) -> np.ndarray:
        return self.rounds[-1].belief if self.rounds else self.initial_belief

    def rects(self) -> list[Hyperrectangle]:
        """h^0, h^1, ..., h^T."""
        return [self.initial] + [r.rect for r in self.rounds]

    def beliefs(self) -> list[np.ndarray]:
        return [self.initial_belief] + [r.belief for r in self.rounds]


def log_score_change(q_new: np.ndarray, q_old: np.ndarray) -> np.ndarray:
    """log2 q_new - log2 q_old per outcome; -inf where an outcome is newly ruled out."""
    out = np.zeros(len(q_new))
    for w, (a, b) in enumerate(zip(q_new, q_old)):
        if a > 0 and b > 0:
            out[w] = math.log2(a) - math.log2(b)
        elif a <= 0 < b:
            out[w] = -math.inf
        elif b <= 0 < a:  # cannot happen for refinements
            out[w] = math.inf
    return out


def start(theta: InformationStructure, x: Sequence[int], initial: Hyperrectangle | None = None,
          seed: int | None = None) -> Transcript:
    x = tuple(int(v) for v in x)
    if theta.weights[x] <= 0:
        raise ZeroMassError(f"stimulus {x} has zero weight")
    h0 = theta.full_rect() if initial is None else initial
    if not h0.contains(x):
        raise MultistableError(f"initial history {h0} does not contain {x}")
    return Transcript(x, h0, posterior_global(theta, h0), seed=seed)


def step(theta: InformationStructure, protocol: Protocol, transcript: Transcript,
         x: Sequence[int] | None = None) -> Transcript:
    """Play one round and collect stop votes."""
    if transcript.terminated_by is not None:
        raise MultistableError("transcript already terminated")
    x = transcript.stimulus if x is None else tuple(x)
    h = transcript.final
    if not h.contains(x):
        raise MultistableError(f"stimulus {x} is inconsistent with history {h}")
    t = len(transcript.rounds) + 1
    i = protocol.speaker(t)
    block = protocol.policies[i].message(theta, h, x[i])
    new_h = h.replace(i, block)
    belief = posterior_global(theta, new_h)
    reward = log_score_change(belief, transcript.final_belief)
    cond = rect_cond_prob(theta, new_h, h)
    cost = protocol.beta * -math.log2(cond) if cond < 1 else 0.0
    rnd = Round(t, i, block, new_h, belief, reward, cost)
    done = None
    if all(p.wants_stop(theta, new_h) for p in protocol.policies):
        done = "all-stop"
    elif t >= protocol.max_rounds:
        done = "max_rounds"
    return replace(transcript, rounds=transcript.rounds + (rnd,), terminated_by=done)


def run(theta: InformationStructure, protocol: Protocol, x: Sequence[int]) -> Transcript:
    """Play rounds until every agent votes stop or the round cap is hit."""
    tr = start(theta, x, seed=protocol.seed)
    while tr.terminated_by is None:
        tr = step(theta, protocol, tr)
    return tr


def run_all(theta: InformationStructure, protocol: Protocol) -> dict[tuple[int, ...], Transcript]:
    """Transcripts for every positive-weight stimulus."""
    return {x: run(theta, protocol, x) for x in theta.support()}


def round_reward(transcript: Transcript, t: int, omega: int) -> float:
    """log2 q_{h^t}(omega) - log2 q_{h^{t-1}}(omega)."""
    if not 1 <= t <= len(transcript.rounds):
        raise MultistableError(f"round {t} is outside the transcript")
    return float(transcript.rounds[t - 1].reward_bits[omega])


def round_cost(transcript: Transcript, t: int) -> float:
    """beta * log2 1/Pr[h^t | h^{t-1}]."""
    if not 1 <= t <= len(transcript.rounds):
        raise MultistableError(f"round {t} is outside the transcript")
    return transcript.rounds[t - 1].cost_bits


def settle(theta: InformationStructure, transcript: Transcript, mode: str = "expected",
           seed: int | None = None) -> np.ndarray:
    """Per-round rewards once W is revealed.

    ``expected`` averages over W ~ q_x exactly; ``sampled`` draws W once from
    q_x with the given seed.
    """
    q_x = theta.outcome_probs[transcript.stimulus]
    rewards = np.array([r.reward_bits for r in transcript.rounds]).reshape(-1, theta.n_outcomes)
    if mode == "expected":
        safe = np.where(q_x > 0, rewards, 0.0)
        return safe @ q_x
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        omega = int(rng.choice(theta.n_outcomes, p=q_x))
        return rewards[:, omega]
    raise MultistableError(f"unknown settlement mode {mode!r}")


@dataclass(frozen=True)
class DisagreementReport:
    d: float
    counts: dict[tuple[int, ...], int]
    quantiles: dict[float, int]
    bounds: dict[float, float]

    @property
    def respects_bound(self) -> bool:
        return all(self.quantiles[dl] <= self.bounds[dl] for dl in self.quantiles)


def weighted_quantile(values: Sequence[int], weights: Sequence[float], level: float) -> int:
    """Smallest v with Pr[value <= v] >= level."""
    order = np.argsort(values, kind="stable")
    vals = np.asarray(values)[order]
    cum = np.cumsum(np.asarray(weights, dtype=float)[order])
    cum /= cum[-1]
    idx = int(np.searchsorted(cum, level - 1e-12))
    return int(vals[min(idx, len(vals) - 1)])


def count_disagreements(theta: InformationStructure, protocol: Protocol, d: float,
                        deltas: Sequence[float] = (0.1,)) -> DisagreementReport:
    """Rounds whose belief moves by more than ``d`` in TV, per stimulus."""
    counts = {}
    for x, tr in run_all(theta, protocol).items():
        bs = tr.beliefs()
        counts[x] = sum(tv_distance(a, b) > d for a, b in zip(bs, bs[1:]))
    xs = list(counts)
    w = [theta.weights[x] for x in xs]
    h_w = entropy(theta.outcome_marginal())
    quantiles = {dl: weighted_quantile([counts[x] for x in xs], w, 1 - dl) for dl in deltas}
    bounds = {dl: h_w / (2 * d**2 * dl) for dl in deltas}
    return DisagreementReport(d, counts, quantiles, bounds)
