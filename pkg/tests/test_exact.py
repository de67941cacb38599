import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealkit.exact import SolverRefusal, brute_force_solve, dp_memory_estimate, dp_solve
from annealkit.graph import build_chimera
from annealkit.instance import energy, from_couplings, gauge_transform, random_instance
from oracles import brute_ground_states, ferromagnet_cell, single_spin, two_spin


def test_single_spin_field():
    sol = brute_force_solve(single_spin(h=1))
    assert sol.e0 == -1
    assert [list(s) for s in sol.states] == [[1]]


def test_antiferro_pair():
    sol = brute_force_solve(two_spin(J=-1))
    assert sol.e0 == -1 and sol.degeneracy == 2


def test_ferromagnet_cell():
    for solve in (brute_force_solve, dp_solve):
        sol = solve(ferromagnet_cell())
        assert sol.e0 == -16 and sol.degeneracy == 2


def test_brute_force_against_enumeration():
    inst = random_instance(build_chimera(1), 4, with_fields=True)
    e0, gs = brute_ground_states(inst)
    sol = brute_force_solve(inst)
    assert sol.e0 == e0
    assert {tuple(s) for s in sol.states} == gs


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), fields=st.booleans(), data=st.data())
def test_dp_matches_brute_force_masked(seed, fields, data):
    L = data.draw(st.integers(1, 3))
    rng = np.random.default_rng(seed)
    mask = np.zeros(8 * L * L, dtype=bool)
    mask[rng.choice(mask.size, size=min(mask.size, data.draw(st.integers(1, 18))), replace=False)] = True
    inst = random_instance(build_chimera(L, mask), seed, with_fields=fields)
    a, b = dp_solve(inst), brute_force_solve(inst)
    assert a.e0 == b.e0
    assert a.degeneracy == b.degeneracy
    assert a.state_set() == b.state_set()


@pytest.mark.parametrize("seed", range(5))
def test_dp_l2_full(seed):
    inst = random_instance(build_chimera(2), seed)
    sol = dp_solve(inst)
    assert all(energy(inst, s) == sol.e0 for s in sol.states)
    assert len(sol.states) == sol.degeneracy
    assert len(sol.state_set()) == sol.degeneracy


def test_gauge_covariance():
    inst = random_instance(build_chimera(3), 2, with_fields=True)
    a = 2 * np.random.default_rng(0).integers(0, 2, inst.n) - 1
    s1, s2 = dp_solve(inst, enumerate_cap=1), dp_solve(gauge_transform(inst, a), enumerate_cap=1)
    assert s1.e0 == s2.e0
    assert s1.degeneracy == s2.degeneracy


def test_enumeration_cap_truncates():
    inst = random_instance(build_chimera(2), 0)  # h = 0, so degeneracy >= 2
    sol = dp_solve(inst, enumerate_cap=1)
    assert len(sol.states) == 1
    assert sol.truncated == (sol.degeneracy > 1)
    assert energy(inst, sol.states[0]) == sol.e0


def test_real_couplings():
    g = build_chimera(1)
    rng = np.random.default_rng(5)
    J = {tuple(e): float(v) for e, v in zip(g.edges, rng.normal(size=len(g.edges)))}
    inst = from_couplings(g, J)
    a, b = dp_solve(inst), brute_force_solve(inst)
    assert a.e0 == pytest.approx(b.e0)
    assert a.degeneracy == b.degeneracy == 2


def test_refusals():
    with pytest.raises(SolverRefusal):
        brute_force_solve(random_instance(build_chimera(2), 0))
    with pytest.raises(SolverRefusal):
        dp_solve(random_instance(build_chimera(3), 0), memory_budget=1000)
    assert dp_memory_estimate(9) > 3 * 2**30


def test_empty_instance():
    g = build_chimera(1, np.zeros(8, dtype=bool))
    inst = random_instance(g, 0)
    assert dp_solve(inst).e0 == 0
    assert brute_force_solve(inst).degeneracy == 1
