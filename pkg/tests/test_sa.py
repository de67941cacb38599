import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from annealkit.exact import brute_force_solve
from annealkit.graph import ConfigurationError, build_chimera
from annealkit.instance import energy, from_couplings, random_instance
from annealkit.sa import SASchedule, multispin_states, sa_ensemble, sa_multispin_run, sa_run, unpack_replicas
from oracles import boltzmann, chi2_counts, three_spin, two_spin


def test_schedule_validation():
    with pytest.raises(ConfigurationError):
        SASchedule(2.0, 1.0, 10)
    with pytest.raises(ConfigurationError):
        SASchedule(0.1, 3.0, 0)
    assert SASchedule(0.1, 3.0, 1).betas().tolist() == [3.0]
    b = SASchedule(0.1, 3.0, 30).betas()
    assert b[0] == pytest.approx(0.1) and b[-1] == pytest.approx(3.0)


def test_two_spin_ground():
    inst = two_spin()
    sched = SASchedule(0.1, 3.0, 10_000)
    hits = sum(sa_run(inst, sched, s).energy == -1 for s in range(100))
    assert hits >= 99


def test_infinite_temperature_uniform():
    inst = random_instance(build_chimera(1), 0)
    X, _ = sa_ensemble(inst, SASchedule(0.0, 0.0, 3), 1, 10_000)
    m = X.mean(axis=1)
    se = m.std() / np.sqrt(m.size)
    assert abs(m.mean()) < 3 * se


def test_deterministic_and_consistent():
    inst = random_instance(build_chimera(2), 3, with_fields=True)
    sched = SASchedule(sweeps=50)
    a, b = sa_run(inst, sched, 7), sa_run(inst, sched, 7)
    assert np.array_equal(a.state, b.state)
    assert a.energy == energy(inst, a.state)
    c = sa_run(inst, sched, 7, shuffle=True)
    assert c.energy == energy(inst, c.state)


def test_success_grows_with_sweeps():
    g = build_chimera(1)
    s = {}
    for K in (2, 20):
        tot = 0.0
        for k in range(100):
            inst = random_instance(g, 1, instance_id=k)
            e0 = brute_force_solve(inst, enumerate_all=False).e0
            _, E = sa_ensemble(inst, SASchedule(0.1, 3.0, K), 2, 20, instance_id=k)
            tot += np.mean(E == e0)
        s[K] = tot / 100
    assert s[20] >= s[2]


def test_disjoint_seed_blocks_agree():
    inst = random_instance(build_chimera(2), 8)
    sched = SASchedule(0.1, 3.0, 20)
    _, E1 = sa_ensemble(inst, sched, 1, 2000)
    _, E2 = sa_ensemble(inst, sched, 2, 2000)
    e0 = min(E1.min(), E2.min())
    p1, p2 = np.mean(E1 == e0), np.mean(E2 == e0)
    se = np.sqrt(p1 * (1 - p1) / 2000 + p2 * (1 - p2) / 2000)
    assert abs(p1 - p2) < 4 * se + 1e-12


@pytest.mark.parametrize("beta", [0.5, 2.0])
def test_fixed_beta_boltzmann_small(beta):
    inst = three_spin()
    X, _ = sa_ensemble(inst, SASchedule(beta, beta, 10), 3, 20_000)
    codes = ((X < 0) * (1 << np.arange(3))).sum(axis=1)
    assert chi2_counts(np.bincount(codes, minlength=8), boltzmann(inst, beta)) > 1e-3


def test_multispin_requires_pm1():
    inst = from_couplings(build_chimera(1), {(0, 4): 2})
    with pytest.raises(ConfigurationError):
        multispin_states(inst, SASchedule(sweeps=2), 0)
    with pytest.raises(ConfigurationError):
        multispin_states(two_spin(), SASchedule(sweeps=2), 0, replicas=65)


def test_multispin_two_spin():
    outs = sa_multispin_run(two_spin(), SASchedule(0.1, 3.0, 10_000), 0)
    assert len(outs) == 64
    assert np.mean([o.energy == -1 for o in outs]) >= 0.99


def test_unpack():
    bits = np.array([0b101, 0b010], dtype=np.uint64)
    X = unpack_replicas(bits, 3)
    assert X.tolist() == [[-1, 1], [1, -1], [-1, 1]]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), replicas=st.integers(1, 64), fields=st.booleans())
def test_multispin_energies_consistent(seed, replicas, fields):
    inst = random_instance(build_chimera(2), seed, with_fields=fields)
    outs = sa_multispin_run(inst, SASchedule(sweeps=5), seed, replicas)
    assert len(outs) == replicas
    assert all(o.energy == energy(inst, o.state) for o in outs)


def test_multispin_matches_boltzmann():
    # each replica is a valid Metropolis chain at fixed beta
    inst = three_spin(J=(1, -1), h=(1, 0, -1))
    beta = 1.0
    # replicas in one word share uniforms and can coalesce, so take one per word
    X = np.array([multispin_states(inst, SASchedule(beta, beta, 10), s)[s % 64] for s in range(4000)])
    codes = ((X < 0) * (1 << np.arange(3))).sum(axis=1)
    assert chi2_counts(np.bincount(codes, minlength=8), boltzmann(inst, beta)) > 1e-3


def test_multispin_single_replica_matches_scalar():
    inst = random_instance(build_chimera(1), 2)
    sched = SASchedule(0.1, 1.5, 20)
    E_ms = np.array([energy(inst, multispin_states(inst, sched, s, 1)[0]) for s in range(3000)])
    _, E_sc = sa_ensemble(inst, sched, 9, 3000)
    vals = np.union1d(E_ms, E_sc)
    table = np.array([[np.sum(E_ms == v) for v in vals], [np.sum(E_sc == v) for v in vals]])
    assert stats.chi2_contingency(table).pvalue > 1e-3
