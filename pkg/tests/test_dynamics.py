import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annealkit.dynamics import evolve, initial_moments, sd_run
from annealkit.graph import ConfigurationError, build_chimera
from annealkit.instance import energy, from_couplings, gauge_transform, random_instance
from annealkit.rng import make_rng
from oracles import two_spin


def test_initial_moments_near_minus_x():
    M = initial_moments(50, make_rng(0))
    assert np.allclose(np.linalg.norm(M, axis=1), 1.0)
    assert np.all(M[:, 0] < -0.98)
    assert np.all(np.abs(M[:, 1:]) < 0.1)


def test_norm_preserved():
    inst = random_instance(build_chimera(1), 0)
    out = sd_run(inst, t_f=20.0, seed=1)
    assert np.allclose(np.linalg.norm(out.extras["moments"], axis=1), 1.0, atol=1e-9)
    assert out.energy == energy(inst, out.state)


def test_drift_per_unit_time():
    inst = random_instance(build_chimera(1), 4)
    t_f = 10.0
    _, drift = evolve(inst, initial_moments(8, make_rng(0)), t_f)
    assert drift / (t_f / 1000) < 1e-6


def test_step_halving():
    inst = two_spin()
    M0 = initial_moments(2, make_rng(3))
    a, _ = evolve(inst, M0, 20.0, dt=0.02)
    b, _ = evolve(inst, M0, 20.0, dt=0.01)
    assert np.max(np.abs(a.M - b.M)) < 1e-6


def test_free_precession_about_x():
    g = build_chimera(1)
    inst = from_couplings(g, {})
    M0 = initial_moments(8, make_rng(2))
    out, _ = evolve(inst, M0, 10.0)
    assert np.allclose(out.M[:, 0], M0[:, 0], atol=1e-6)


def test_dt_validation():
    with pytest.raises(ConfigurationError):
        sd_run(two_spin(), t_f=10.0, dt=0.5)
    with pytest.raises(ConfigurationError):
        sd_run(two_spin(), t_f=0.0)


def test_ferromagnet_aligns():
    hits = [sd_run(two_spin(), t_f=50.0, seed=s).energy == -1 for s in range(20)]
    assert all(hits)


def test_opposite_sign_antialigns():
    # the other sign drives each moment against its local field
    outs = [sd_run(two_spin(), t_f=50.0, seed=s, sign=+1.0) for s in range(10)]
    assert all(o.energy == 1 for o in outs)


def test_deterministic():
    inst = random_instance(build_chimera(1), 5)
    a, b = sd_run(inst, 10.0, seed=3), sd_run(inst, 10.0, seed=3)
    assert np.array_equal(a.extras["moments"], b.extras["moments"])
    assert a.flags["ties"] == 0


def test_tie_resolves_to_plus():
    # no field in z ever acts on an isolated spin starting on the x axis
    g = build_chimera(1)
    inst = from_couplings(g, {})
    M0 = np.tile([-1.0, 0.0, 0.0], (8, 1))
    out = sd_run(inst, 5.0, M0=M0)
    assert out.flags["ties"] == 8
    assert np.all(out.state == 1)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10**5))
def test_gauge_covariance(seed):
    inst = random_instance(build_chimera(1), seed, with_fields=True)
    rng = np.random.default_rng(seed)
    a = 2 * rng.integers(0, 2, inst.n) - 1
    M0 = initial_moments(inst.n, make_rng(seed))
    # a pi rotation about x maps the equations of the gauged instance onto the original
    M0g = M0 * np.stack([np.ones(inst.n), a, a], axis=1)
    x = sd_run(inst, 10.0, M0=M0).state
    y = sd_run(gauge_transform(inst, a), 10.0, M0=M0g).state
    assert np.array_equal(y, a * x)
