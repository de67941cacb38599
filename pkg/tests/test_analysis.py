import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealkit.analysis import (
    bimodality,
    copula,
    copula_flatness_bound,
    free_qubits,
    gauge_arith_mean,
    gauge_mean_success,
    hamming_nearest,
    histogram,
    is_bimodal,
    is_unimodal,
    joint_hist,
    mean_excited_hamming,
    normalized_ranks,
    optimal_effort,
    percentile_scaling,
    reduce_single_flip,
    reduced_success,
    repetitions,
    spearman,
    success_record,
)
from annealkit.graph import build_chimera
from annealkit.instance import delta_energies, energy, random_instance, random_state
from oracles import all_states, brute_ground_states, hamming_bruteforce, two_spin


def test_repetitions_examples():
    assert repetitions(0.5) == 7
    assert repetitions(0.99) == 1
    assert repetitions(1.0) == 1
    assert repetitions(0.0) == math.inf
    assert repetitions(0.1) == 44


def test_repetitions_validation():
    with pytest.raises(ValueError):
        repetitions(0.5, p=1.0)
    with pytest.raises(ValueError):
        repetitions(1.5)


@given(a=st.floats(1e-6, 1.0), b=st.floats(1e-6, 1.0), p=st.floats(0.5, 0.999))
def test_repetitions_monotone(a, b, p):
    lo, hi = sorted((a, b))
    assert repetitions(lo, p) >= repetitions(hi, p) >= 1
    # R runs reach the target probability
    assert 1 - (1 - a) ** repetitions(a, p) >= p - 1e-9


def test_gauge_mean_examples():
    assert gauge_mean_success([0.5, 0.5]) == pytest.approx(0.5)
    assert gauge_mean_success([0.0, 0.75]) == pytest.approx(0.5)
    assert gauge_mean_success([1.0, 0.0]) == 1.0
    assert gauge_arith_mean([0.0, 0.75]) == pytest.approx(0.375)
    with pytest.raises(ValueError):
        gauge_mean_success([])


@given(st.lists(st.floats(0, 1), min_size=1, max_size=16))
def test_gauge_mean_bounds(s):
    m = gauge_mean_success(s)
    assert min(s) - 1e-12 <= m <= max(s) + 1e-12
    assert m >= gauge_arith_mean(s) - 1e-12


def test_success_record():
    rec = success_record(3, "sa", {"sweeps": 10}, [-4, -4, -2, -4], -4)
    assert rec.M == 4 and rec.M_GS == 3 and rec.s == 0.75
    with pytest.raises(ValueError):
        success_record(0, "sa", {}, [-5], -4)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=300), st.integers(1, 30))
def test_histogram_normalized(v, bins):
    p, edges = histogram(v, bins)
    assert p.sum() == pytest.approx(1.0)
    assert edges.size == bins + 1


def test_histogram_edge_value():
    p, _ = histogram([1.0, 0.0], 4)
    assert p.tolist() == [0.5, 0, 0, 0.5]


@settings(deadline=None)
@given(seed=st.integers(0, 10**5), n=st.integers(1, 200))
def test_joint_marginalizes(seed, n):
    rng = np.random.default_rng(seed)
    s = rng.random(n)
    d = rng.integers(0, 5, n).astype(float)
    H, _, _ = joint_hist(s, d)
    assert np.allclose(H.sum(axis=1), histogram(s)[0])
    assert H.sum() == pytest.approx(1.0)


def test_copula_diagonal_and_antidiagonal():
    x = np.arange(1000.0)
    assert np.allclose(copula(x, x), 10 * np.eye(10))
    assert np.allclose(copula(x, -x), 10 * np.fliplr(np.eye(10)))


@settings(deadline=None)
@given(seed=st.integers(0, 10**5))
def test_copula_rank_invariant(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.random(300), rng.random(300)
    assert np.array_equal(copula(x, y), copula(np.exp(3 * x), y ** 3 + 1))
    assert spearman(x, y) == pytest.approx(spearman(np.log(x), y))


def test_copula_independent_flat():
    rng = np.random.default_rng(11)
    n = 10_000
    c = copula(rng.random(n), rng.random(n))
    assert c.sum() == pytest.approx(100.0)
    assert np.max(np.abs(c - 1)) < copula_flatness_bound(n)


def test_mid_ranks():
    r = normalized_ranks([3, 1, 1, 2])
    assert r.tolist() == pytest.approx([0.875, 0.25, 0.25, 0.625])


def test_bimodality_metric():
    s = np.r_[np.zeros(30), np.ones(30), np.full(40, 0.5)]
    b = bimodality(s)
    assert b["low"] == 0.3 and b["high"] == 0.3 and b["ends"] == 0.6
    assert is_bimodal(s) and not is_unimodal(s)
    assert is_unimodal(np.random.default_rng(0).normal(0.5, 0.03, 500).clip(0, 1))
    assert not is_bimodal(np.ones(100))


def test_hamming_matches_bruteforce():
    inst = random_instance(build_chimera(1), 2, with_fields=True)
    _, gs = brute_ground_states(inst)
    G = np.array(sorted(gs))
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = random_state(8, rng)
        assert hamming_nearest(x, G) == hamming_bruteforce(x, G)


def test_hamming_truncated_is_upper_bound():
    G = np.array([[1, 1, 1], [-1, -1, -1]])
    x = np.array([-1, -1, 1])
    full = hamming_nearest(x, G)
    part = hamming_nearest(x, G[:1], truncated=True)
    assert part.upper_bound and part.distance >= full == 1


def test_mean_excited_hamming():
    G = np.array([[1, 1, 1]])
    X = np.array([[1, 1, 1], [-1, 1, 1], [-1, -1, 1], [-1, -1, 1]])
    assert mean_excited_hamming(X, G) == pytest.approx(5 / 3)
    assert mean_excited_hamming(X, G, per_distinct=True) == pytest.approx(1.5)


def test_free_qubits_bruteforce():
    inst = random_instance(build_chimera(1), 0)
    for x in all_states(8)[::7]:
        E = energy(inst, x)
        want = 0
        for i in range(8):
            y = x.copy()
            y[i] = -y[i]
            want += energy(inst, y) == E
        assert free_qubits(inst, x) == want


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**5))
def test_reduce_single_flip(seed):
    inst = random_instance(build_chimera(1), seed, with_fields=True)
    rng = np.random.default_rng(seed)
    x = random_state(8, rng)
    y = reduce_single_flip(inst, x)
    assert energy(inst, y) <= energy(inst, x)
    assert np.sum(x != y) <= 1
    if np.all(delta_energies(inst, x) >= 0):
        assert np.array_equal(x, y)


def test_reduce_restores_one_flip_from_ground():
    inst = two_spin(h=(1, 0))
    assert reduced_success(inst, [[1, -1], [-1, 1], [-1, -1]], -2) == pytest.approx(2 / 3)
    assert np.array_equal(reduce_single_flip(inst, [1, -1]), [1, 1])


def test_optimal_effort_interior_and_boundary():
    t = np.array([1.0, 2.0, 4.0, 8.0])
    s = np.array([0.01, 0.3, 0.9, 0.95])
    pt = optimal_effort(t, s)
    assert pt.t_f == 4.0 and pt.R == 2 and not pt.boundary
    pt = optimal_effort(t, [0.99, 0.99, 0.99, 0.99])
    assert pt.t_f == 1.0 and pt.boundary
    pt = optimal_effort(t, [0, 0, 0, 0])
    assert not pt.finite
    with pytest.raises(ValueError):
        optimal_effort([1, 2], [0.1, 0.2])


def test_percentile_scaling():
    rng = np.random.default_rng(0)
    data = {8: rng.exponential(1.0, 50), 32: rng.exponential(10.0, 50), 72: rng.exponential(1.0, 5)}
    rows = percentile_scaling(data)
    assert [r.size for r in rows] == [8, 32, 72]
    for r in rows:
        v = [r.values[q] for q in sorted(r.values)]
        assert v == sorted(v)
    assert rows[0].sufficient and not rows[2].sufficient
    par = percentile_scaling(data, parallel_normalize=True)
    assert par[1].values[0.5] == pytest.approx(rows[1].values[0.5] / 32)
    inf = percentile_scaling({8: np.r_[np.ones(25), np.full(5, np.inf)]})
    assert inf[0].values[0.99] == math.inf and inf[0].values[0.5] == 1.0
