import json

import numpy as np
import pytest

from starkzeeman import dynamics as D, integrability as I


def test_kepler_integral_example():
    spec = I.substitution(D.make_system("kepler"))
    assert I.integral_sep1(spec, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(D.SingularityError):
        I.integral_sep1(spec, np.zeros(2), np.array([0.0, 1.0]))


@pytest.mark.parametrize("cid", I.INTEGRABLE)
def test_reconstruction_matches_catalog(cid):
    assert I.potential_mismatch(D.make_system(cid), n=100) <= 1e-12


def test_stark_reconstruction_formula():
    s = D.make_system("stark", E=0.1)
    spec = I.substitution(s)
    q = np.array([[0.3, -1.2], [2.0, 0.5], [-0.7, 0.9]])
    r = np.hypot(q[:, 0], q[:, 1])
    assert np.allclose(I.potential(spec, q), -1 / r - 0.1 * q[:, 0], atol=1e-14)


def test_lagrange_identity():
    c = 0.5
    q = np.random.default_rng(0).uniform(-2, 2, (100, 2))
    u, v, _, _ = I.elliptic_coordinates(c, q)
    lhs = (u ** 4 - v ** 4) / (u * u - v * v)
    r2 = np.sum(q * q, axis=1)
    # (u^4 - v^4) / (u^2 - v^2) = u^2 + v^2 = r^2 + c^2
    assert np.allclose(lhs, r2 + c * c, rtol=1e-12)


def test_euler_symmetric_state():
    s = D.make_system("euler", R=2.0)
    spec = I.substitution(s)
    assert spec.c == 1.0 and spec.shift == 0.0
    # q=(0,1): r1 = r2 = sqrt 2, u = sqrt 2, v = 0, L = -1
    # I = L^2 + c^2 p1^2 + 2 (0 - 2 g(0)) / 2 = 1 + 1 - 2 g(0) = 2
    assert I.integral_sep2(spec, np.array([0.0, 1.0]), np.array([1.0, 0.0])) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(D.SingularityError):
        I.integral_sep2(spec, np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_spec_validation():
    with pytest.raises(ValueError):
        I.SeparablePotentialSpec("sep2", lambda s: s, lambda s: s, c=0.0)
    with pytest.raises(ValueError):
        I.SeparablePotentialSpec("sep3", lambda s: s, lambda s: s)


@pytest.mark.parametrize("cid", ["rotating_kepler", "zeeman", "hill"])
def test_applicability(cid):
    with pytest.raises(I.ApplicabilityError):
        I.poisson_bracket_residual(D.make_system(cid))
    with pytest.raises(I.ApplicabilityError):
        I.substitution(D.make_system(cid))


@pytest.mark.parametrize("cid", ["stark", "euler"])
def test_bracket_and_drift(cid):
    rep = I.poisson_bracket_residual(D.make_system(cid), n_states=200, n_traj=3, periods=10)
    assert rep.bracket_residual <= 1e-6
    assert rep.value_drift <= 1e-7
    d = json.loads(rep.to_json())
    assert set(d) == {"system", "integral_family", "bracket_residual", "value_drift", "n_samples", "seed"}


def test_bracket_detects_wrong_integral():
    s = D.make_system("stark", E=0.1)
    wrong = I.substitution(D.make_system("stark", E=0.2))
    q, p = np.array([0.7, 0.4]), np.array([0.2, -0.5])
    assert abs(I.poisson_bracket(s, wrong, q, p)) > 1e-3
