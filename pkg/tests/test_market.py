import math

import numpy as np
import pytest

from multistable.errors import MultistableError
from multistable.market import (
    MarketState,
    Strategy,
    cost_function,
    evaluate_strategy_timing,
    execute_trade,
    liquidity_sweep,
    max_capped_jump,
    nats_to_bits,
    net_reward,
    price,
    run_market_session,
    timing_lookup,
)
from multistable.scenarios import noisy_copies, redundant_copies


def test_price_and_cost():
    assert price(MarketState([0, 0], 1)) == pytest.approx([0.5, 0.5])
    assert price(MarketState([math.log(3), 0], 1)) == pytest.approx([0.75, 0.25], abs=1e-12)
    assert price(MarketState([3.0, 1.0], 2.0)) == pytest.approx(price(MarketState([6.0, 2.0], 4.0)), abs=1e-15)
    assert cost_function(MarketState([0, 0], 1)) == pytest.approx(math.log(2), abs=1e-12)
    assert cost_function(MarketState([math.log(3), 0], 1)) == pytest.approx(math.log(4), abs=1e-12)
    s = MarketState([0.3, -1.2, 2.0], 0.7)
    shifted = MarketState(s.shares + 5.0, 0.7)
    assert cost_function(shifted) == pytest.approx(cost_function(s) + 5.0, abs=1e-12)


def test_price_stable_for_extreme_shares():
    for s in ([1e4, -1e4], [1e4, 1e4 - 1], [-1e4, 0.0, 1e4]):
        p = price(MarketState(s, 1.0))
        assert np.all(np.isfinite(p)) and abs(p.sum() - 1) <= 1e-12
        assert math.isfinite(cost_function(MarketState(s, 1.0)))


def test_worked_trade():
    new, rec = execute_trade(MarketState([0, 0], 1), target_price=[0.75, 0.25])
    assert new.shares == pytest.approx([math.log(3), 0], abs=1e-12)
    assert rec.cash_cost == pytest.approx(math.log(2), abs=1e-12)
    assert net_reward(rec, 0) == pytest.approx(math.log(1.5), abs=1e-12)
    assert net_reward(rec, 1) == pytest.approx(-math.log(2), abs=1e-12)


def test_noop_trade():
    s = MarketState([0.4, -0.1], 2.0)
    new, rec = execute_trade(s, shares=s.shares)
    assert rec.cash_cost == 0 and net_reward(rec, 0) == 0 and net_reward(rec, 1) == 0


def test_boundary_target_rejected():
    with pytest.raises(MultistableError):
        execute_trade(MarketState([0, 0], 1), target_price=[1.0, 0.0])
    with pytest.raises(MultistableError):
        MarketState([0, 0], 0.0)


def test_reward_identity_and_path_independence(rng):
    for _ in range(500):
        k = int(rng.integers(2, 5))
        alpha = float(rng.uniform(0.1, 10))
        state = MarketState(rng.normal(0, 5, k), alpha)
        target = rng.dirichlet(np.ones(k))
        before = price(state)
        mid, rec = execute_trade(state, target_price=np.clip(target, 1e-9, None) / np.clip(target, 1e-9, None).sum())
        after = price(mid)
        for w in range(k):
            assert net_reward(rec, w) == pytest.approx(alpha * (math.log(after[w]) - math.log(before[w])), abs=1e-9)
        back, rec2 = execute_trade(mid, shares=state.shares)
        assert rec.cash_cost + rec2.cash_cost == pytest.approx(0.0, abs=1e-12)


def test_bits_conversion():
    assert nats_to_bits(math.log(2), 1.0) == pytest.approx(1.0)
    assert nats_to_bits(math.log(2), 2.0) == pytest.approx(0.5)


def test_strategy_parsing():
    assert Strategy.parse("delayed:2") == Strategy("truthful", 2)
    assert Strategy.parse("delayed") == Strategy("truthful", 1)
    assert Strategy.parse("reveal") == Strategy("reveal", 0)
    assert str(Strategy.parse("reveal:1")) == "reveal:1"
    with pytest.raises(MultistableError):
        Strategy.parse("bluff")


def test_substitutes_session_reaches_ground_truth(copies):
    for x in copies.support():
        sess = run_market_session(copies, x, [(0, "truthful"), (1, "truthful")], 1.0)
        assert sess.final_price == pytest.approx(copies.outcome_probs[x], abs=1e-12)
        assert sess.trades[1].price_after == pytest.approx(copies.outcome_probs[x], abs=1e-12)
        assert not sess.flags


def test_xor_sessions(xor):
    for x in xor.support():
        sess = run_market_session(xor, x, [(0, "truthful"), (1, "truthful")], 1.0)
        assert sess.final_price == pytest.approx([0.5, 0.5])
        assert sess.profits == (0.0, 0.0)
        sess = run_market_session(xor, x, [(0, "reveal"), (1, "truthful")], 1.0)
        assert sess.final_price == pytest.approx(xor.outcome_probs[x], abs=1e-9)
        assert sess.profits[0] == pytest.approx(0.0, abs=1e-12)
        assert nats_to_bits(sess.profits[1], 1.0) == pytest.approx(1.0, abs=1e-9)


def test_sampled_settlement_seeded(copies):
    a = run_market_session(copies, (0, 0), [(0, "truthful"), (1, "truthful")], 1.0, seed=5, settlement="sampled")
    b = run_market_session(copies, (0, 0), [(0, "truthful"), (1, "truthful")], 1.0, seed=5, settlement="sampled")
    assert a.omega == b.omega and a.profits == b.profits


def test_fee_deducted(copies):
    free = run_market_session(copies, (0, 0), [(0, "truthful"), (1, "silent")], 1.0)
    paid = run_market_session(copies, (0, 0), [(0, "truthful"), (1, "silent")], 1.0, fee=0.1)
    assert paid.profits[0] == pytest.approx(free.profits[0] - 0.1)
    assert paid.profits[1] == 0


def test_expected_profit_of_truthful_solo_trader_is_information(copies):
    # E[alpha (ln p_after - ln p_before)] = alpha ln2 * I(X_1; W)
    from multistable.infotheory import mutual_information

    rows = evaluate_strategy_timing(copies, 1.0, ["truthful", "silent"])
    p0, _ = timing_lookup(rows, "truthful", "silent")
    assert nats_to_bits(p0, 1.0) == pytest.approx(mutual_information(copies.joint.sum(axis=1)), abs=1e-12)


def test_timing_substitutes():
    theta = redundant_copies()
    rows = evaluate_strategy_timing(theta, 1.0, ["truthful", "delayed:1", "silent"])
    first_now, second_now = timing_lookup(rows, "truthful", "truthful")
    first_late, _ = timing_lookup(rows, "delayed:1", "truthful")
    assert first_now >= first_late
    assert second_now == pytest.approx(0.0, abs=1e-12)
    assert timing_lookup(rows, "silent", "silent") == (0.0, 0.0)


def test_timing_complements(xor):
    rows = evaluate_strategy_timing(xor, 1.0, ["reveal", "reveal:1", "silent"])
    p0, p1 = timing_lookup(rows, "reveal", "reveal")
    assert p0 == pytest.approx(0.0, abs=1e-12)
    assert nats_to_bits(p1, 1.0) == pytest.approx(1.0, abs=1e-9)
    q0, q1 = timing_lookup(rows, "reveal:1", "reveal")
    assert nats_to_bits(q0, 1.0) == pytest.approx(1.0, abs=1e-9) and q1 == pytest.approx(0.0, abs=1e-12)


def test_liquidity(copies):
    alphas = [0.1, 1, 10, 100]
    capped = liquidity_sweep(copies, (0, 0), [(0, "truthful"), (1, "truthful")], alphas, share_cap=1.0)
    jumps = [r.max_tv_jump for r in capped]
    assert all(a > b for a, b in zip(jumps, jumps[1:]))
    assert max_capped_jump(0.1, 1.0) > 0.4
    uncapped = liquidity_sweep(copies, (0, 0), [(0, "truthful"), (1, "truthful")], alphas)
    assert all(r.convergence_trade is not None and r.convergence_trade <= 2 for r in uncapped)


def test_mutual_delay_still_trades(copies):
    # both traders sit out one turn; the session must not stop before they act
    now = run_market_session(copies, (1, 1), [(0, "reveal"), (1, "reveal")], 1.0)
    late = run_market_session(copies, (1, 1), [(0, "reveal:1"), (1, "reveal:1")], 1.0)
    assert late.profits == pytest.approx(now.profits, abs=1e-12)
    assert late.trades[0].turn == 3
