import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from starkzeeman import dynamics as D


def test_potential_examples():
    assert D.make_system("kepler").V(np.array([2.0, 0.0])) == pytest.approx(-0.5, abs=1e-15)
    assert D.make_system("hill").V(np.array([1.0, 0.0])) == pytest.approx(-2.5, abs=1e-15)
    assert D.make_system("frozen_hill_centrifugal").V(np.array([1.0, 0.0])) == pytest.approx(-3.0, abs=1e-15)
    with pytest.raises(D.SingularityError):
        D.make_system("kepler").V(np.zeros(2))


def test_gradient_examples():
    g = lambda cid, q, **kw: D.make_system(cid, **kw).grad_V(np.array(q, float))
    assert np.allclose(g("kepler", [1, 0]), [1, 0], atol=1e-15)
    assert np.allclose(g("stark", [1, 0], E=0.1), [0.9, 0], atol=1e-15)
    assert np.allclose(g("rotating_kepler", [2, 0], omega=1.0), [-1.75, 0], atol=1e-15)


def test_magnetic_field():
    assert D.make_system("rotating_kepler", omega=1.0).magnetic_B() == 2.0
    assert D.make_system("rtbp").magnetic_B() == 2.0
    assert D.make_system("hill").magnetic_B() == 2.0
    assert D.make_system("frozen_hill").magnetic_B() == 0.0
    assert D.make_system("zeeman", B=0.3).magnetic_B() == 0.3


def test_config_errors():
    with pytest.raises(D.ConfigError):
        D.make_system("nope")
    with pytest.raises(D.ConfigError):
        D.make_system("kepler", B=1.0)


def test_json_roundtrip():
    s = D.make_system("rtbp", mu=0.01)
    t = D.SystemSpec.from_json(s.to_json())
    assert t.catalog_id == "rtbp" and t.params == s.params
    assert json.loads(s.to_json())["catalog_id"] == "rtbp"


def test_singular_points():
    for cid in D.CATALOG:
        s = D.make_system(cid)
        assert len(s.singular_points) >= 1
    assert len(D.make_system("euler").singular_points) == 2


@pytest.mark.parametrize("cid", D.CATALOG)
def test_gradient_matches_finite_differences(cid):
    s = D.make_system(cid)
    rng = np.random.default_rng(1)
    L = s.length_scale
    h = 1e-5
    n = 0
    while n < 100:
        q = rng.uniform(-1.5 * L, 1.5 * L, 2)
        if min(np.linalg.norm(q - p) for p in s.singular_points) < 0.1 * L:
            continue
        fd = np.array([(s.V(q + h * e) - s.V(q - h * e)) / (2 * h) for e in np.eye(2)])
        g = s.grad_V(q)
        assert np.linalg.norm(fd - g) <= 1e-6 * max(1.0, np.linalg.norm(g))
        n += 1


def test_kepler_circular_orbit():
    s = D.make_system("kepler")
    tr = D.integrate(s, D.PhaseState.of([1, 0], [0, 1]), 20 * np.pi, n_out=2001)
    assert np.max(np.abs(np.linalg.norm(tr.q, axis=1) - 1)) <= 1e-8
    assert np.linalg.norm(tr.q[-1] - [1, 0]) <= 1e-8


def test_rotating_kepler_equilibrium():
    # q=(1,0) at rest is the a=1 circular orbit seen in the rotating frame
    s = D.make_system("rotating_kepler", omega=1.0)
    s0 = D.PhaseState.of([1, 0], [0, 0])
    assert s.energy(s0.q, s0.qdot) == pytest.approx(-1.5, abs=1e-15)
    tr = D.integrate(s, s0, 10.0)
    assert tr.energy_drift() <= 1e-12
    # retrograde circle of radius 1: speed a(n + omega) = 2, energy 1/2
    s1 = D.PhaseState.of([1, 0], [0, 2])
    assert s.energy(s1.q, s1.qdot) == pytest.approx(0.5, abs=1e-15)
    tr = D.integrate(s, s1, np.pi, n_out=101)
    assert tr.energy_drift() <= 1e-8
    assert np.max(np.abs(np.linalg.norm(tr.q, axis=1) - 1)) <= 1e-8


def test_zero_time():
    s = D.make_system("stark")
    s0 = D.demo_state(s)
    tr = D.integrate(s, s0, 0.0)
    assert len(tr.t) == 1 and np.all(tr.q[0] == s0.q)


@pytest.mark.parametrize("cid", ["kepler", "zeeman", "rotating_kepler"])
def test_angular_momentum_conserved(cid):
    s = D.make_system(cid)
    tr = D.integrate(s, D.demo_state(s), 10 * s.period_scale, r_switch=0)
    L = s.angular_momentum(tr.q, tr.qdot)
    assert np.ptp(L) <= 1e-8
    assert tr.energy_drift() <= 1e-8


@pytest.mark.parametrize("cid", ["zeeman", "rotating_kepler", "hill", "rtbp"])
def test_time_reversal(cid):
    s = D.make_system(cid)
    s0 = D.demo_state(s)
    fw = D.integrate(s, s0, 3.0, r_switch=0)
    back = D.integrate(s.reversed_field(), D.PhaseState.of(fw.q[-1], -fw.qdot[-1]), 3.0, r_switch=0)
    assert np.linalg.norm(back.q[-1] - s0.q) <= 1e-6


def test_close_approach_handoff():
    s = D.make_system("kepler")
    with pytest.raises(D.CloseApproach) as info:
        D.integrate(s, D.PhaseState.of([1, 0], [0, 0.05]), 5.0)
    assert np.linalg.norm(info.value.state.q) == pytest.approx(s.r_switch, rel=1e-6)


def test_hill_membership():
    s = D.make_system("kepler")
    assert D.hill_membership(s, -0.5, [1, 0]) == "inside"
    assert D.hill_membership(s, -0.5, [2, 0]) == "boundary"
    assert D.hill_membership(s, -0.5, [3, 0]) == "outside"


def test_zero_velocity_contours():
    (k,) = D.zero_velocity_contour(D.make_system("kepler"), -0.5)
    assert k.closed
    assert np.allclose(np.linalg.norm(k.vertices, axis=1), 2.0, atol=1e-3)
    (st_,) = D.zero_velocity_contour(D.make_system("stark", E=0.0), -0.5)
    assert np.allclose(np.linalg.norm(st_.vertices, axis=1), 2.0, atol=1e-3)
    hill = D.make_system("hill")
    comp = D.bounded_component(hill, hill.c1 - 0.1)
    assert comp is not None
    assert np.max(np.linalg.norm(comp.vertices, axis=1)) < 1.0


def test_regularity_error_at_critical_value():
    hill = D.make_system("hill")
    with pytest.raises(D.RegularityError):
        D.zero_velocity_contour(hill, hill.c1)


def test_trajectory_csv():
    s = D.make_system("kepler")
    tr = D.integrate(s, D.demo_state(s), 1.0, n_out=5)
    text = tr.to_csv()
    assert text.splitlines()[0] == "t,q1,q2,qdot1,qdot2,E"
    assert len(text.splitlines()) == 6


@given(st.floats(0.3, 3.0), st.floats(0, 2 * np.pi), st.floats(0.7, 1.2))
def test_kepler_energy_drift(r, th, f):
    s = D.make_system("kepler")
    q = r * np.array([np.cos(th), np.sin(th)])
    v = f / np.sqrt(r) * np.array([-np.sin(th), np.cos(th)])
    tr = D.integrate(s, D.PhaseState.of(q, v), 2 * np.pi * r ** 1.5, r_switch=0)
    assert tr.energy_drift() <= 1e-8
