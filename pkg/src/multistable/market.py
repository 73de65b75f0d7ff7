"""LMSR market maker and strategic trading sessions.

Natural logarithms throughout: prices are softmax(s / alpha) and the cost
potential is C(s) = alpha * ln sum exp(s / alpha).  A net reward of ``r``
nats corresponds to ``r / (alpha * ln 2)`` bits of log-score improvement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import MultistableError
from .infotheory import tv_distance
from .structure import Hyperrectangle, InformationStructure, local_tables


@dataclass(frozen=True)
class MarketState:
    shares: np.ndarray
    alpha: float

    def __post_init__(self):
        s = np.array(self.shares, dtype=float)
        s.flags.writeable = False
        object.__setattr__(self, "shares", s)
        if not self.alpha > 0:
            raise MultistableError("liquidity alpha must be positive")

    @classmethod
    def uniform(cls, n_outcomes: int, alpha: float) -> "MarketState":
        return cls(np.zeros(n_outcomes), alpha)


def price(state: MarketState) -> np.ndarray:
    return softmax(state.shares / state.alpha)


def cost_function(state: MarketState) -> float:
    return float(state.alpha * logsumexp(state.shares / state.alpha))


def nats_to_bits(nats: float, alpha: float) -> float:
    return nats / (alpha * math.log(2))


def shares_for_price(target, alpha: float, reference: np.ndarray, ref: int = -1) -> np.ndarray:
    """Shares with the given price, keeping coordinate ``ref`` at its current value."""
    p = np.asarray(target, dtype=float)
    if np.any(p <= 0) or np.any(p >= 1) or abs(p.sum() - 1) > 1e-9:
        raise MultistableError(f"target price {p.tolist()} must lie strictly inside the simplex")
    s = alpha * np.log(p)
    return s + (reference[ref] - s[ref])


@dataclass(frozen=True)
class TradeRecord:
    trader: int
    s_before: np.ndarray
    s_after: np.ndarray
    cash_cost: float

    @property
    def payout(self) -> np.ndarray:
        """Units paid out per outcome at settlement."""
        return self.s_after - self.s_before


def execute_trade(
    state: MarketState,
    shares=None,
    target_price=None,
    trader: int = 0,
    ref: int = -1,
) -> tuple[MarketState, TradeRecord]:
    """Move the market to new shares, or to the shares realizing a target price."""
    if (shares is None) == (target_price is None):
        raise MultistableError("give exactly one of shares or target_price")
    if target_price is not None:
        shares = shares_for_price(target_price, state.alpha, state.shares, ref)
    new = MarketState(np.asarray(shares, dtype=float), state.alpha)
    if new.shares.shape != state.shares.shape:
        raise MultistableError("share vector has the wrong length")
    rec = TradeRecord(trader, state.shares, new.shares, cost_function(new) - cost_function(state))
    return new, rec


def net_reward(trade: TradeRecord, omega: int) -> float:
    """Payout on outcome ``omega`` minus the cash paid, in nats."""
    return float(trade.payout[omega] - trade.cash_cost)


# ---------------------------------------------------------------------------
# sessions


@dataclass(frozen=True)
class Strategy:
    """``truthful``: trade to own posterior given public knowledge.
    ``reveal``: the same trade, plus announcing the raw signal.
    ``silent``: never trade.  ``delay`` skips that many own turns first.
    """

    kind: str = "truthful"
    delay: int = 0

    def __post_init__(self):
        if self.kind not in ("truthful", "reveal", "silent"):
            raise MultistableError(f"unknown strategy {self.kind!r}")
        if self.delay < 0:
            raise MultistableError("delay must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        """``truthful``, ``delayed:K``, ``reveal``, ``reveal:K`` or ``silent``."""
        name, _, arg = text.strip().partition(":")
        delay = int(arg) if arg else 0
        if name in ("truthful", "truthful-immediate"):
            return cls("truthful", delay)
        if name == "delayed":
            return cls("truthful", delay if arg else 1)
        if name in ("reveal", "reveal-signal"):
            return cls("reveal", delay)
        if name == "silent":
            return cls("silent")
        raise MultistableError(f"cannot parse strategy {text!r}")

    def __str__(self) -> str:
        if self.kind == "silent":
            return "silent"
        if self.kind == "truthful":
            return f"delayed:{self.delay}" if self.delay else "truthful"
        return f"reveal:{self.delay}" if self.delay else "reveal"


@dataclass(frozen=True)
class SessionTrade:
    turn: int
    trader: int
    agent: int
    record: TradeRecord
    price_after: np.ndarray
    reward: float  # expected or realized net reward, nats
    public: Hyperrectangle


@dataclass(frozen=True)
class MarketSession:
    stimulus: tuple[int, ...]
    alpha: float
    trades: tuple[SessionTrade, ...]
    final_price: np.ndarray
    profits: tuple[float, ...]
    public: Hyperrectangle
    settlement: str
    omega: int | None = None
    flags: tuple[str, ...] = field(default=())


def _clip(p: np.ndarray, floor: float) -> np.ndarray:
    p = np.clip(p, floor, None)
    return p / p.sum()


def _move(shares: np.ndarray, target: np.ndarray, alpha: float, cap: float | None) -> np.ndarray:
    goal = shares_for_price(target, alpha, shares)
    delta = goal - shares
    big = np.abs(delta).max()
    if cap is not None and big > cap:
        delta = delta * (cap / big)
    return shares + delta


def run_market_session(
    theta: InformationStructure,
    x: Sequence[int],
    traders: Sequence[tuple[int, Strategy]],
    alpha: float,
    seed: int | None = None,
    settlement: str = "expected",
    rounds: int | None = None,
    share_cap: float | None = None,
    fee: float = 0.0,
    price_floor: float = 1e-12,
) -> MarketSession:
    """Turn-based LMSR session; traders act in list order each round.

    Strategies are common knowledge, so after each trade the public infers
    the set of signals that would have produced the same share vector.
    Target prices are clipped to ``[price_floor, 1]`` before renormalizing
    so that degenerate posteriors stay tradable.
    """
    x = tuple(int(v) for v in x)
    if theta.weights[x] <= 0:
        raise MultistableError(f"stimulus {x} has zero weight")
    if settlement not in ("expected", "sampled"):
        raise MultistableError(f"unknown settlement mode {settlement!r}")
    traders = [(int(a), s if isinstance(s, Strategy) else Strategy.parse(s)) for a, s in traders]
    if rounds is None:
        rounds = max((s.delay for _, s in traders), default=0) + len(traders) + 1
    q_x = theta.outcome_probs[x]
    omega = None
    if settlement == "sampled":
        omega = int(np.random.default_rng(seed).choice(theta.n_outcomes, p=q_x))

    state = MarketState.uniform(theta.n_outcomes, alpha)
    public = theta.full_rect()
    turns_taken = [0] * len(traders)
    log: list[SessionTrade] = []
    flags: list[str] = []
    turn = 0
    for _ in range(rounds):
        changed = False
        for k, (agent, strat) in enumerate(traders):
            turn += 1
            own = turns_taken[k]
            turns_taken[k] += 1
            if strat.kind == "silent" or own < strat.delay:
                continue
            table = local_tables(theta, public, agent)
            outcomes_for = {}
            for pos, v in enumerate(public.subsets[agent]):
                m = table[pos].sum()
                if m > 0:
                    outcomes_for[v] = _move(state.shares, _clip(table[pos] / m, price_floor), alpha, share_cap)
            new_shares = outcomes_for[x[agent]]
            if strat.kind == "reveal":
                consistent = (x[agent],)
            else:
                consistent = tuple(
                    v for v, s in outcomes_for.items() if np.allclose(s, new_shares, rtol=0, atol=1e-9)
                )
            if not consistent:
                flags.append(f"turn {turn}: trader {k} move not identifiable; public knowledge kept")
                consistent = public.subsets[agent]
            new_public = public.replace(agent, consistent)
            new_state, rec = execute_trade(state, shares=new_shares, trader=k)
            if settlement == "expected":
                reward = float(q_x @ rec.payout - rec.cash_cost)
            else:
                reward = net_reward(rec, omega)
            changed |= new_public != public or not np.array_equal(new_state.shares, state.shares)
            state, public = new_state, new_public
            log.append(SessionTrade(turn, k, agent, rec, price(state), reward, public))
        delays_done = all(t > s.delay for t, (_, s) in zip(turns_taken, traders))
        if not changed and delays_done:
            break
    profits = [0.0] * len(traders)
    for tr in log:
        profits[tr.trader] += tr.reward
    for k, (_, strat) in enumerate(traders):
        if strat.kind != "silent":
            profits[k] -= fee
    return MarketSession(x, alpha, tuple(log), price(state), tuple(profits), public, settlement, omega, tuple(flags))


@dataclass(frozen=True)
class TimingRow:
    strategies: tuple[Strategy, ...]
    expected_profit: tuple[float, ...]  # nats

    def bits(self, alpha: float) -> tuple[float, ...]:
        return tuple(nats_to_bits(p, alpha) for p in self.expected_profit)


def evaluate_strategy_timing(
    theta: InformationStructure,
    alpha: float,
    grid: Sequence[Strategy | str],
    **session_kwargs,
) -> list[TimingRow]:
    """Exact expected net reward per trader for every strategy pair.

    Trader k holds agent k's signal; the expectation runs over x ~ theta and
    W ~ q_x.
    """
    if theta.n != 2:
        raise MultistableError("strategy timing is defined for two-trader structures")
    grid = [g if isinstance(g, Strategy) else Strategy.parse(g) for g in grid]
    rows = []
    for s0 in grid:
        for s1 in grid:
            total = np.zeros(2)
            for x in theta.support():
                sess = run_market_session(theta, x, [(0, s0), (1, s1)], alpha, settlement="expected", **session_kwargs)
                total += theta.weights[x] * np.array(sess.profits)
            rows.append(TimingRow((s0, s1), tuple(float(v) for v in total)))
    return rows


def timing_lookup(rows: Sequence[TimingRow], s0, s1) -> tuple[float, ...]:
    s0 = s0 if isinstance(s0, Strategy) else Strategy.parse(s0)
    s1 = s1 if isinstance(s1, Strategy) else Strategy.parse(s1)
    for row in rows:
        if row.strategies == (s0, s1):
            return row.expected_profit
    raise KeyError((str(s0), str(s1)))


@dataclass(frozen=True)
class LiquidityRow:
    alpha: float
    convergence_trade: int | None  # 1-based trade index, None if never within tolerance
    max_tv_jump: float
    final_tv: float


def max_capped_jump(alpha: float, share_cap: float, n_outcomes: int = 2) -> float:
    """TV move from a uniform market when one outcome gains ``share_cap`` shares."""
    before = MarketState.uniform(n_outcomes, alpha)
    after_shares = np.zeros(n_outcomes)
    after_shares[0] = share_cap
    return tv_distance(price(before), price(MarketState(after_shares, alpha)))


def liquidity_sweep(
    theta: InformationStructure,
    x: Sequence[int],
    traders: Sequence[tuple[int, Strategy]],
    alphas: Sequence[float],
    share_cap: float | None = None,
    rounds: int = 200,
    tol: float = 1e-6,
    price_floor: float = 1e-12,
) -> list[LiquidityRow]:
    """Convergence speed and price jumps of a session for each liquidity level."""
    x = tuple(x)
    target = _clip(theta.outcome_probs[x], price_floor)
    out = []
    for a in alphas:
        sess = run_market_session(
            theta, x, traders, a, rounds=rounds, share_cap=share_cap, price_floor=price_floor
        )
        prev = np.full(theta.n_outcomes, 1.0 / theta.n_outcomes)
        jumps, conv = [], None
        for k, tr in enumerate(sess.trades, start=1):
            jumps.append(tv_distance(prev, tr.price_after))
            prev = tr.price_after
            if conv is None and tv_distance(tr.price_after, target) <= tol:
                conv = k
        out.append(LiquidityRow(float(a), conv, max(jumps, default=0.0), tv_distance(sess.final_price, target)))
    return out
