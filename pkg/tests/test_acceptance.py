"""Acceptance suite: worked examples reproduced exactly, theorems certified at desk scale.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion plus any detail lines recorded with ``note``.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.special import log_softmax

from multistable import io as mio
from multistable.complexity import (
    certify_stimulus,
    direct_sum,
    direct_sum_rect,
    gestalt_history,
    gestalt_stimulus,
)
from multistable.consensus import b_of_epsilon, enumerate_consensus_rectangles, is_beta_equilibrium, is_epsilon_consensus
from multistable.infotheory import mutual_information, tv_distance
from multistable.market import (
    MarketState,
    evaluate_strategy_timing,
    execute_trade,
    net_reward,
    price,
    timing_lookup,
)
from multistable.optimization import (
    accuracy,
    enumerate_rectangle_partitions,
    expected_regret,
    full_partition,
    global_optimum,
    info_cost,
    is_beta_equilibrium_partition,
    is_local_optimum,
    local_search,
    objective,
    partition_from_protocol,
    round_decomposition,
    trivial_partition,
)
from multistable.protocol import Policy, Protocol, count_disagreements, run
from multistable.scenarios import BUILTIN, random_structure, random_suite
from multistable.structure import iter_rectangles, posterior_global, posterior_ground_truth, rect_prob
from multistable.switching import ell_bound, min_switching_cost

SUITE_SEED = 7


@pytest.fixture(scope="module")
def suite():
    return random_suite(SUITE_SEED, 1000, "substitutes")


@pytest.mark.criterion(1, "Example 1 posteriors and two-round transcript")
def test_example1(duck, note):
    t0 = time.perf_counter()
    for x, p in enumerate((1 / 3, 0.5, 2 / 3)):
        q = posterior_global(duck, duck.rect([[x], [0, 1, 2]]))
        assert abs(q[1] - p) <= 1e-12
    assert abs(posterior_ground_truth(duck, (2, 1))[1] - 1.0) <= 1e-12
    proto = mio.parse_protocol("example1", duck)
    tr = run(duck, proto, (2, 1))
    assert [r.rect for r in tr.rounds] == [duck.rect([[2], [0, 1, 2]]), duck.rect([[2], [1]])]
    assert tr.final == duck.rect([[2], [1]])
    assert abs(tr.final_belief[1] - 1.0) <= 1e-12
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    note(f"transcript {mio.format_rect(duck, tr.rounds[0].rect)} -> {mio.format_rect(duck, tr.final)}, {elapsed:.3f}s")


@pytest.mark.criterion(2, "order effect: two 0-consensus states at TV 0.5")
def test_order_effect(duck, note):
    t0 = time.perf_counter()
    a = run(duck, mio.parse_protocol("order_effect_a", duck), (1, 1))
    b = run(duck, mio.parse_protocol("order_effect_b", duck), (1, 1))
    assert a.final == duck.rect([[1, 2], [1, 2]])
    assert b.final == duck.rect([[0, 1], [0, 1]])
    assert abs(a.final_belief[1] - 0.75) <= 1e-12 and abs(b.final_belief[1] - 0.25) <= 1e-12
    for tr in (a, b):
        assert is_epsilon_consensus(duck, tr.final, 0.0, tol=1e-12).is_consensus
    tv = tv_distance(a.final_belief, b.final_belief)
    assert abs(tv - 0.5) <= 1e-12
    assert time.perf_counter() - t0 < 1.0
    note(f"A ends at q={a.final_belief[1]:.12g}, B at q={b.final_belief[1]:.12g}, TV={tv:.12g}")


@pytest.mark.criterion(3, "substitutes: overlapping perfect consensuses agree with ground truth")
def test_substitutes_monostable(suite, note):
    t0 = time.perf_counter()
    pairs = bad = 0
    for theta in suite:
        rects = [c.rect for c in enumerate_consensus_rectangles(theta, 0.0)]
        for h, h2 in itertools.combinations_with_replacement(rects, 2):
            both = h.intersect(h2)
            if both is None or rect_prob(theta, both) <= 0:
                continue
            pairs += 1
            q, q2 = posterior_global(theta, h), posterior_global(theta, h2)
            for x in theta.support():
                if both.contains(x):
                    qx = posterior_ground_truth(theta, x)
                    if np.abs(q - qx).max() > 1e-9 or np.abs(q2 - qx).max() > 1e-9:
                        bad += 1
    elapsed = time.perf_counter() - t0
    note(f"{len(suite)} structures, {pairs} overlapping pairs, {bad} counterexamples, {elapsed:.1f}s")
    assert bad == 0 and pairs > len(suite)
    assert elapsed < 60


@pytest.mark.criterion(4, "overlap lemma on the substitutes suite")
def test_overlap_lemma(suite, note):
    t0 = time.perf_counter()
    checked = hyp = 0
    violations = []
    for theta in suite:
        for eps in (0.001, 0.01):
            rects = enumerate_consensus_rectangles(theta, eps)
            for x in theta.support():
                for h, h2, v in certify_stimulus(theta, x, eps, (0.1, 0.3, 0.5), rects=rects):
                    checked += 1
                    hyp += v.lemma_hypothesis
                    if v.lemma_violated:
                        violations.append((x, h, h2, eps, v.d, v.tv))
    elapsed = time.perf_counter() - t0
    note(f"{checked} pair checks, {hyp} meet the overlap hypothesis, {len(violations)} violations, {elapsed:.1f}s")
    assert not violations
    assert elapsed < 120


@pytest.mark.criterion(5, "beta-equilibrium implies epsilon-consensus below b(epsilon)")
def test_equilibrium_implies_consensus(suite, note):
    assert b_of_epsilon(1.0) == 0.0625
    grid = random_suite(SUITE_SEED + 1, 200, "grid")
    checked = bad = 0
    for eps in (0.1, 0.5, 1.0):
        beta = b_of_epsilon(eps)
        for theta in suite[:300] + grid:
            for h in iter_rectangles(theta):
                if is_beta_equilibrium(theta, h, beta).is_equilibrium:
                    checked += 1
                    bad += not is_epsilon_consensus(theta, h, eps).is_consensus
    note(f"b(0.1)={b_of_epsilon(0.1):.6g} b(0.5)={b_of_epsilon(0.5):.6g} b(1)={b_of_epsilon(1.0)}")
    note(f"{checked} equilibrium rectangles, {bad} without consensus")
    assert bad == 0 and checked > 0


@pytest.mark.criterion(6, "direct-sum additivity of Gestalt complexity")
def test_direct_sum_additivity(note):
    rng = np.random.default_rng(SUITE_SEED)
    worst = 0.0
    for _ in range(100):
        a = random_structure(rng, sizes=tuple(rng.integers(2, 4, size=2)))
        b = random_structure(rng, sizes=tuple(rng.integers(1, 3, size=2)))
        s = direct_sum(a, b)
        eps = float(rng.choice([0.0, 0.05]))
        xa = a.support()[rng.integers(len(a.support()))]
        xb = b.support()[rng.integers(len(b.support()))]
        total = gestalt_stimulus(s, xa + xb, eps)
        worst = max(worst, abs(total - gestalt_stimulus(a, xa, eps) - gestalt_stimulus(b, xb, eps)))
        ha = [c.rect for c in enumerate_consensus_rectangles(a, eps, xa)]
        hb = [c.rect for c in enumerate_consensus_rectangles(b, eps, xb)]
        for h, h2 in zip(ha, hb[::-1]):
            g = gestalt_history(s, direct_sum_rect(h, h2), eps)
            worst = max(worst, abs(g - gestalt_history(a, h, eps) - gestalt_history(b, h2, eps)))
    note(f"largest additivity gap {worst:.3g} bits")
    assert worst <= 1e-9


@pytest.mark.criterion(7, "duck-rabbit switching cost and the overlap bound")
def test_switching(duck, note):
    rep = min_switching_cost(duck, duck.rect([[1, 2], [1, 2]]), duck.rect([[0, 1], [0, 1]]))
    assert rep.cost_bits == pytest.approx(2 * math.log2(9 / 4), abs=1e-12)
    assert round(rep.cost_bits, 5) == 2.33985
    assert rep.ell_lower_bound_bits == pytest.approx(ell_bound(0.25, 0.25), abs=1e-12)
    assert round(rep.ell_lower_bound_bits, 5) == 1.61471
    assert rep.cost_bits >= rep.ell_lower_bound_bits
    # when ell(x, y) <= 1 it dominates log2 1/x and log2 1/y
    grid = np.arange(1, 1001) / 1000
    xs, ys = np.meshgrid(grid, grid)
    ell = np.vectorize(ell_bound)(xs, ys)
    cheap = ell <= 1
    violations = int(np.sum(ell[cheap] < np.maximum(-np.log2(xs), -np.log2(ys))[cheap] - 1e-12))
    note(f"cost {rep.cost_bits:.5f} >= ell {rep.ell_lower_bound_bits:.5f}; grid {cheap.sum()} cheap points, {violations} violations")
    assert violations == 0


def protocols_under_test(theta):
    pols = lambda kind, **kw: tuple(Policy(i, kind, **kw) for i in range(theta.n))
    out = [
        Protocol(pols("full-reveal"), order=tuple(range(theta.n))),
        Protocol(pols("posterior"), order=tuple(range(theta.n))[::-1]),
        Protocol(pols("silent"), order=tuple(range(theta.n))),
    ]
    for tau in (0.3, 0.5, 0.6, 0.75):
        out.append(Protocol(pols("threshold", tau=tau), order=tuple(range(theta.n))))
        out.append(Protocol(pols("threshold", tau=tau, strict=True), order=None, seed=int(tau * 100)))
    return out


@pytest.mark.criterion(8, "disagreement counts stay under the quantile bound")
def test_disagreement_bound(note):
    worst = 0
    tested = 0
    for name, make in BUILTIN.items():
        theta = make()
        protos = protocols_under_test(theta)
        if name == "duckrabbit3x3":
            protos += [mio.parse_protocol(p, theta) for p in ("example1", "order_effect_a", "order_effect_b")]
        for proto in protos:
            rep = count_disagreements(theta, proto, 0.5, deltas=(0.1,))
            worst = max(worst, rep.quantiles[0.1])
            assert rep.quantiles[0.1] <= 20
            assert rep.respects_bound
            tested += 1
    note(f"{tested} protocols on {len(BUILTIN)} scenarios, largest 0.9-quantile {worst}")


def random_protocol(rng, n, seed):
    pols = []
    for i in range(n):
        kind = str(rng.choice(["threshold", "posterior", "full-reveal", "silent"]))
        pols.append(Policy(i, kind, tau=float(rng.uniform(0.2, 0.8))))
    return Protocol(tuple(pols), order=None, seed=seed, max_rounds=6)


@pytest.mark.criterion(9, "optimization identities, split optimality of equilibria, xor2 trap")
def test_optimization(xor, note):
    rng = np.random.default_rng(SUITE_SEED)
    gap = 0.0
    for k in range(100):
        theta = random_structure(rng, sizes=(3, 3))
        proto = random_protocol(rng, 2, k)
        part = partition_from_protocol(theta, proto)
        v = accuracy(theta, part)
        gap = max(gap, abs(sum(i for i, _ in round_decomposition(theta, proto)) - v))
        total = mutual_information(theta.joint.reshape(-1, theta.n_outcomes))
        gap = max(gap, abs(total - v - expected_regret(theta, part)))
    assert gap <= 1e-9

    eq = split_ok = merge_ok = 0
    for _ in range(20):
        theta = random_structure(rng, sizes=(3, 2))
        beta = float(rng.choice([0.05, 0.2, 0.5, 1.0]))
        for part in enumerate_rectangle_partitions(theta):
            if is_beta_equilibrium_partition(theta, part, beta):
                eq += 1
                split_ok += is_local_optimum(theta, beta, part, moves=("split",))[0]
                merge_ok += is_local_optimum(theta, beta, part)[0]
    note(f"identity gap {gap:.3g}; {eq} equilibrium partitions, {split_ok} split-local optima, "
         f"{merge_ok} also merge-stable")
    assert eq > 0 and split_ok == eq

    trap = local_search(xor, 0.5)
    assert trap.partition == trivial_partition(xor)
    g_val, g_part = global_optimum(xor, 0.5)
    assert objective(xor, full_partition(xor), 0.5) == pytest.approx(1 - 0.5 * 2, abs=1e-12)
    assert trap.objective == pytest.approx(0.0, abs=1e-12) and g_val == pytest.approx(0.0, abs=1e-12)
    note(f"beta=0.5: one-leaf trap {trap.objective:.3g}, full reveal {objective(xor, full_partition(xor), 0.5):.3g} (tie)")
    trap4 = local_search(xor, 0.4)
    g4, p4 = global_optimum(xor, 0.4)
    assert trap4.partition == trivial_partition(xor) and p4 == full_partition(xor)
    assert trap4.objective == pytest.approx(0.0, abs=1e-12) and g4 == pytest.approx(0.2, abs=1e-12)
    assert info_cost(xor, p4) == pytest.approx(2.0, abs=1e-12)
    note(f"beta=0.4: trap {trap4.objective:.3g} < global {g4:.3g}")


@pytest.mark.criterion(10, "LMSR reward identity, path independence and timing")
def test_lmsr(note):
    rng = np.random.default_rng(SUITE_SEED)
    worst = worst_trip = 0.0
    for _ in range(10_000):
        k = int(rng.integers(2, 5))
        alpha = float(rng.uniform(0.1, 10))
        state = MarketState(rng.normal(0, 3, k), alpha)
        mid, rec = execute_trade(state, shares=state.shares + rng.normal(0, 3, k))
        before = log_softmax(state.shares / alpha)
        after = log_softmax(mid.shares / alpha)
        w = int(rng.integers(k))
        worst = max(worst, abs(net_reward(rec, w) - alpha * (after[w] - before[w])))
        _, back = execute_trade(mid, shares=state.shares)
        worst_trip = max(worst_trip, abs(rec.cash_cost + back.cash_cost))
    note(f"reward identity gap {worst:.3g} nats, round-trip cost {worst_trip:.3g}")
    assert worst <= 1e-12 and worst_trip <= 1e-12

    grid = ["reveal", "reveal:1"]
    weak = 0
    for theta in random_suite(SUITE_SEED, 200, "substitutes"):
        rows = evaluate_strategy_timing(theta, 1.0, grid)
        for other in grid:
            early0 = timing_lookup(rows, "reveal", other)[0]
            late0 = timing_lookup(rows, "reveal:1", other)[0]
            early1 = timing_lookup(rows, other, "reveal")[1]
            late1 = timing_lookup(rows, other, "reveal:1")[1]
            weak += early0 >= late0 - 1e-9 and early1 >= late1 - 1e-9
    assert weak == 200 * len(grid)

    xor_rows = evaluate_strategy_timing(BUILTIN["xor2"](), 1.0, grid)
    early, _ = timing_lookup(xor_rows, "reveal", "reveal")
    late, _ = timing_lookup(xor_rows, "reveal:1", "reveal")
    note(f"xor2: trader 0 earns {early / math.log(2):.3g} bits moving first, {late / math.log(2):.3g} moving second")
    assert late > early + 0.5
    assert price(MarketState.uniform(2, 1.0)) == pytest.approx([0.5, 0.5])
