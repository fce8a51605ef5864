import math
import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maritrack.alloc import (AllocWeights, CostMatrix, assignment_cost, build_cost_matrix,
                             info_gain_proxy, separation_penalty, solve_cmcf)
from maritrack.linalg import NotPositiveDefinite
from maritrack.percept import RangeNoiseModel
from oracles import assignment_value, brute_force_cmcf, feasible_assignments, random_spd

UNIT = RangeNoiseModel(sigma0=1.0, k=0.0)     # R(d) = I everywhere


def random_instance(r):
    M, N, K = int(r.integers(1, 4)), int(r.integers(1, 6)), int(r.integers(1, 3))
    cost = r.uniform(-10, 10, (M, N))
    feasible = r.random((M, N)) > 0.3
    return cost, feasible, K


def check_assignment(a, cm, K):
    seen = set()
    for j, ts in a.assigned.items():
        assert len(ts) <= K
        for i in ts:
            assert i not in seen
            seen.add(i)
            assert cm.feasible[cm.uav_ids.index(j), cm.target_ids.index(i)]
        if ts:
            assert a.primary(j) == ts[0]


def test_info_gain_examples():
    assert info_gain_proxy(4 * np.eye(3), 5.0, UNIT) == pytest.approx(3 * math.log(5), abs=1e-12)
    far = RangeNoiseModel(0.1, 0.5)
    assert info_gain_proxy(np.eye(3), 1e7, far) < 1e-9
    gains = [info_gain_proxy(np.eye(3), d, far) for d in np.linspace(0, 200, 50)]
    assert all(a > b for a, b in zip(gains, gains[1:]))
    with pytest.raises(NotPositiveDefinite):
        info_gain_proxy(-np.eye(3), 1.0, UNIT)


@given(st.integers(0, 100_000), st.floats(0, 100))
def test_info_gain_dense_oracle(seed, d):
    P = random_spd(np.random.default_rng(seed))
    noise = RangeNoiseModel(0.2, 0.03)
    s2 = noise.sigma(d) ** 2
    ev = np.linalg.eigvalsh(P)
    # isotropic R: each eigenvalue p shrinks to p s2 / (p + s2)
    expected = float(np.sum(np.log(ev) - np.log(ev * s2 / (ev + s2))))
    assert info_gain_proxy(P, d, noise) == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_separation_examples():
    assert separation_penalty([0, 0, 0], [[5, 0, 0], [0, 9, 0]], 1.0) == 0.0
    assert separation_penalty([0, 0, 0], [[0, 0, 0]], 2.0) == 1.0
    assert separation_penalty([0, 0, 0], [[1, 0, 0]], 2.0) == pytest.approx(0.5)
    assert separation_penalty([0, 0, 0], [[0, 0, 0]], 0.0) == 0.0


def test_assignment_cost_examples():
    w = AllocWeights(eta=1, beta=0.1, rho=0.5, gamma=0)
    c, ok = assignment_cost(4.8283, 10.0, True, 0.0, w)
    assert c == pytest.approx(-4.3283, abs=1e-12) and ok
    assert not assignment_cost(1.0, w.d_max + 1e-9, False, 0.0, w)[1]
    z = AllocWeights(0, 0, 0, 0, 0, d_max=5.0)
    assert assignment_cost(3.0, 4.0, True, 2.0, z) == (0.0, True)
    assert assignment_cost(3.0, 6.0, True, 2.0, z) == (0.0, False)
    with pytest.raises(ValueError):
        AllocWeights(beta=-1)


def test_cmcf_examples():
    a = solve_cmcf(CostMatrix.from_array([[1, 5], [2, 1]]), K=1)
    assert a.assigned == {1: [1], 2: [2]} and a.total_cost == 2
    a = solve_cmcf(CostMatrix.from_array([[3, 4]]), K=2)
    assert a.assigned == {1: [1, 2]} and a.total_cost == 7
    assert a.primary(1) == 1
    a = solve_cmcf(CostMatrix.from_array([[-2, 0], [0, -3]]), K=1)
    assert a.assigned == {1: [1], 2: [2]} and a.total_cost == -5


def test_cmcf_empty_and_infeasible():
    empty = CostMatrix(np.zeros((2, 0)), np.zeros((2, 0), bool), [1, 2], [])
    assert solve_cmcf(empty, 2).assigned == {1: [], 2: []}
    cm = CostMatrix.from_array([[1.0, 2.0]], feasible=[[False, False]])
    a = solve_cmcf(cm, 2)
    assert a.assigned == {1: []} and a.primary(1) is None
    # infeasible pairs carry no edge, however cheap
    cm = CostMatrix.from_array([[-100.0, 1.0], [1.0, 1.0]], feasible=[[False, True], [True, True]])
    a = solve_cmcf(cm, 1)
    assert a.pairs() == [(1, 2), (2, 1)]


def test_cmcf_scarce_targets_leave_uavs_idle():
    a = solve_cmcf(CostMatrix.from_array([[1.0], [0.5], [2.0]]), K=2)
    assert a.assigned == {1: [], 2: [1], 3: []}


@given(st.integers(0, 1_000_000))
def test_cmcf_matches_enumeration(seed):
    r = np.random.default_rng(seed)
    cost, feasible, K = random_instance(r)
    cm = CostMatrix.from_array(cost, feasible)
    a = solve_cmcf(cm, K)
    check_assignment(a, cm, K)
    n, best = brute_force_cmcf(cost, feasible, K)
    assert len(a.pairs()) == n
    assert a.total_cost == pytest.approx(best, abs=1e-9)


def test_cmcf_deterministic():
    r = np.random.default_rng(3)
    cost, feasible, K = random_instance(r)
    cm = CostMatrix.from_array(cost, feasible)
    assert solve_cmcf(cm, K) == solve_cmcf(cm, K)


@given(st.integers(0, 1_000_000), st.floats(0.01, 5.0))
def test_stickiness_keeps_optimal_previous_pair(seed, bump):
    r = np.random.default_rng(seed)
    base, feasible, K = random_instance(r)
    M, N = base.shape
    j, i = int(r.integers(M)), int(r.integers(N))
    feasible[j, i] = True
    rho = float(r.uniform(0, 3))

    def costs(rho):
        c = base.copy()
        c[j, i] -= rho
        return c

    def optimum_keeps_pair(c):
        best = brute_force_cmcf(c, feasible, K)
        for ch in feasible_assignments(feasible, K):
            n, v = assignment_value(c, ch)
            if ch[i] == j and n == best[0] and abs(v - best[1]) <= 1e-9:
                return True
        return False

    if optimum_keeps_pair(costs(rho)):
        assert optimum_keeps_pair(costs(rho + bump))


@given(st.integers(0, 100_000))
def test_primary_maximizes_gain_at_equal_distance(seed):
    r = np.random.default_rng(seed)
    w = AllocWeights(eta=1.0, beta=0.0, rho=0.0, gamma=0.0)
    targets = {i: (np.zeros(3), random_spd(r)) for i in range(1, 5)}
    uavs = {1: np.array([0.0, 0.0, 10.0])}
    cm = build_cost_matrix(uavs, targets, {}, RangeNoiseModel(), w)
    a = solve_cmcf(cm, K=1)
    gains = -cm.cost[0]
    assert gains[cm.target_ids.index(a.primary(1))] == pytest.approx(gains.max(), abs=1e-12)


def test_build_cost_matrix_range_and_stickiness():
    w = AllocWeights(eta=1.0, beta=0.1, rho=0.5, gamma=0.0, d_max=20.0)
    uavs = {1: np.zeros(3), 2: np.array([30.0, 0, 0])}
    targets = {7: (np.array([5.0, 0, 0]), np.eye(3)), 9: (np.array([40.0, 0, 0]), np.eye(3))}
    cm = build_cost_matrix(uavs, targets, {1: 7}, UNIT, w)
    assert cm.uav_ids == [1, 2] and cm.target_ids == [7, 9]
    np.testing.assert_array_equal(cm.feasible, [[True, False], [False, True]])
    assert cm.cost[0, 0] == pytest.approx(-3 * math.log(2) + 0.5 - 0.5)
    a = solve_cmcf(cm, 1)
    assert a.assigned == {1: [7], 2: [9]}


def test_cmcf_oracle_batch_is_fast():
    r = np.random.default_rng(0)
    t0 = time.perf_counter()
    for _ in range(200):
        cost, feasible, K = random_instance(r)
        solve_cmcf(CostMatrix.from_array(cost, feasible), K)
    assert time.perf_counter() - t0 < 1.0
