import math

import numpy as np
import pytest

from multistable.infotheory import entropy, mutual_information
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
    make_partition,
    neighbors,
    objective,
    partition_from_protocol,
    protocol_from_partition,
    round_decomposition,
    trivial_partition,
)
from multistable.protocol import Policy, Protocol, run
from multistable.scenarios import random_conditionally_independent, random_structure
from multistable.structure import Hyperrectangle


def rows_of_x(theta):
    return make_partition(theta, [theta.rect([[x], [0, 1, 2]]) for x in range(3)])


def leaf_table(theta, part):
    return np.array([theta.joint[np.ix_(*leaf.subsets)].reshape(-1, theta.n_outcomes).sum(axis=0) for leaf in part.leaves])


def random_protocol(rng, n, seed):
    pols = []
    for i in range(n):
        kind = rng.choice(["threshold", "posterior", "full-reveal", "silent"])
        pols.append(Policy(i, str(kind), tau=float(rng.uniform(0.2, 0.8))))
    return Protocol(tuple(pols), order=None, seed=seed, max_rounds=6, beta=float(rng.uniform(0.1, 2)))


def test_accuracy_cost_objective(duck):
    part = rows_of_x(duck)
    assert accuracy(duck, trivial_partition(duck)) == 0
    assert accuracy(duck, part) == pytest.approx(0.054469, abs=1e-6)
    assert info_cost(duck, part) == pytest.approx(math.log2(3), abs=1e-12)
    assert info_cost(duck, full_partition(duck)) == pytest.approx(math.log2(9), abs=1e-12)
    assert objective(duck, part, 0) == pytest.approx(0.054469, abs=1e-6)
    assert objective(duck, part, 1) == pytest.approx(-1.53049, abs=1e-5)
    assert objective(duck, trivial_partition(duck), 3.0) == 0
    full = full_partition(duck)
    assert accuracy(duck, full) == pytest.approx(mutual_information(duck.joint.reshape(9, 2)), abs=1e-12)


def test_accuracy_matches_definition_route(rng):
    for _ in range(10):
        theta = random_structure(rng, sizes=(3, 3))
        part = local_search(theta, float(rng.uniform(0, 0.3))).partition
        table = leaf_table(theta, part)
        assert accuracy(theta, part) == pytest.approx(mutual_information(table), abs=1e-12)
        assert info_cost(theta, part) == pytest.approx(entropy(table.sum(axis=1)), abs=1e-12)


def test_neighbors(duck):
    one = trivial_partition(duck)
    nb = neighbors(duck, one)
    assert len(nb) == 6 and all(m.kind == "split" for m, _ in nb)
    full = neighbors(duck, full_partition(duck))
    assert full and all(m.kind == "merge" for m, _ in full)
    for _, p in nb:
        assert any(q == one for _, q in neighbors(duck, p))


def test_local_search_examples(duck, xor):
    assert local_search(duck, 1.0).partition == trivial_partition(duck)
    res = local_search(xor, 0.5)
    assert res.partition == trivial_partition(xor) and res.objective == 0
    flag, best = is_local_optimum(xor, 0.5, trivial_partition(xor))
    assert flag and best is None
    assert is_local_optimum(duck, 0.0, full_partition(duck))[0]


def test_beta_zero_reaches_ground_truth(rng):
    for _ in range(10):
        theta = random_conditionally_independent(rng, sizes=(3, 3))
        res = local_search(theta, 0.0)
        total = mutual_information(theta.joint.reshape(-1, theta.n_outcomes))
        assert accuracy(theta, res.partition) == pytest.approx(total, abs=1e-9)


def test_first_strategy_is_seeded(duck):
    a = local_search(duck, 0.05, strategy="first", seed=4)
    b = local_search(duck, 0.05, strategy="first", seed=4)
    assert a.trace == b.trace


def test_trace_is_monotone(duck):
    res = local_search(duck, 0.05)
    objs = [s.objective for s in res.trace]
    assert all(b > a for a, b in zip(objs, objs[1:]))


def test_xor_trap_and_global_optimum(xor):
    val, best = global_optimum(xor, 0.5)
    assert val == pytest.approx(0.0, abs=1e-12)
    val, best = global_optimum(xor, 0.4)
    assert val == pytest.approx(0.2, abs=1e-12)
    assert best == full_partition(xor)
    assert local_search(xor, 0.4).partition == trivial_partition(xor)


def test_rectangle_partition_count(duck, xor):
    assert len(enumerate_rectangle_partitions(duck)) == 763
    # whole, two halvings, four half-plus-two-cells, all cells
    parts = enumerate_rectangle_partitions(xor)
    assert len(parts) == 8
    assert len({p.leaves for p in parts}) == len(parts)


def test_decomposition_and_regret_identities(rng):
    for k in range(30):
        theta = random_structure(rng, sizes=(3, 3))
        proto = random_protocol(rng, 2, k)
        part = partition_from_protocol(theta, proto)
        rounds = round_decomposition(theta, proto)
        assert sum(i for i, _ in rounds) == pytest.approx(accuracy(theta, part), abs=1e-9)
        assert sum(h for _, h in rounds) == pytest.approx(info_cost(theta, part), abs=1e-9)
        total = mutual_information(theta.joint.reshape(-1, 2))
        assert total - accuracy(theta, part) == pytest.approx(expected_regret(theta, part), abs=1e-9)


def test_protocol_round_trip(duck, rng):
    for beta in (0.02, 0.05, 0.1):
        part = local_search(duck, beta, strategy="first", seed=int(beta * 100)).partition
        proto = protocol_from_partition(duck, part, beta)
        assert partition_from_protocol(duck, proto) == part
        for x in duck.support():
            assert part.leaf_of(x) == run(duck, proto, x).final


def test_equilibrium_partitions_are_split_optima(rng):
    checked = 0
    for _ in range(15):
        theta = random_structure(rng, sizes=(3, 2))
        beta = float(rng.choice([0.05, 0.2, 0.5]))
        for part in enumerate_rectangle_partitions(theta):
            if is_beta_equilibrium_partition(theta, part, beta):
                checked += 1
                assert is_local_optimum(theta, beta, part, moves=("split",))[0]
    assert checked > 0


def test_merge_can_beat_equilibrium(duck):
    # leaf-wise equilibria do not rule out profitable merges
    full = full_partition(duck)
    assert is_beta_equilibrium_partition(duck, full, 1.0)
    flag, best = is_local_optimum(duck, 1.0, full)
    assert not flag and best[0].kind == "merge"


def test_make_partition_rejects_overlap(duck):
    with pytest.raises(ValueError):
        make_partition(duck, [duck.full_rect(), Hyperrectangle.point((0, 0))])
