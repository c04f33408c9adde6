import json
import math

import numpy as np
import pytest

from starkzeeman import dynamics as D, orbits as O
from starkzeeman.curves import model


@pytest.mark.parametrize("strategy", ["symmetric-shooting", "monodromy-newton"])
def test_kepler_circular(strategy):
    k = D.make_system("kepler")
    sol = O.find_periodic_orbit(k, -0.5, D.PhaseState.of([1.0, 0.0], [0.0, 1.0]), strategy=strategy)
    assert sol.period == pytest.approx(2 * math.pi, rel=1e-9)
    assert sol.residual <= 1e-10
    assert abs(k.energy(sol.initial.q, sol.initial.qdot) + 0.5) <= 1e-10


def test_rotating_kepler_closed_forms():
    s = D.make_system("rotating_kepler", omega=1.0)
    st, c = O.rotating_kepler_circular(s, 1.0, retrograde=False)
    assert c == pytest.approx(-1.5) and np.allclose(st.qdot, 0)
    st, c = O.rotating_kepler_circular(s, 1.0, retrograde=True)
    assert c == pytest.approx(0.5)
    assert s.energy(st.q, st.qdot) == pytest.approx(0.5, abs=1e-14)
    assert O.rotating_kepler_radius(0.5) == pytest.approx(1.0, abs=1e-12)
    # direct circular energies peak at -3/2
    with pytest.raises(ValueError):
        O.rotating_kepler_radius(-1.4, retrograde=False)


def test_rotating_kepler_retrograde_orbit():
    s = D.make_system("rotating_kepler", omega=1.0)
    st, c = O.rotating_kepler_circular(s, 1.0)
    sol = O.find_periodic_orbit(s, c, st)
    # synodic period 2 pi / (n + omega)
    assert sol.period == pytest.approx(math.pi, rel=1e-9)
    curve = O.project_to_curve(sol, samples=800)
    assert model.winding_number(curve, (0, 0)) in (1, -1)
    assert model.double_points(curve) == []


@pytest.mark.parametrize("a", [0.5, 0.7])
def test_rotating_kepler_direct_orbit(a):
    s = D.make_system("rotating_kepler", omega=1.0)
    st, c = O.rotating_kepler_circular(s, a, retrograde=False)
    assert s.energy(st.q, st.qdot) == pytest.approx(c, abs=1e-13)
    sol = O.find_periodic_orbit(s, c, st)
    assert sol.period == pytest.approx(2 * math.pi / (a ** -1.5 - 1), rel=1e-8)


def test_search_failure_reports_best():
    k = D.make_system("kepler")
    with pytest.raises(O.SearchFailure):
        # a bracket on the wrong side of every root
        O.find_symmetric_orbit(k, -0.5, (5.0, 6.0))


@pytest.mark.parametrize("ab,kind", [((0, -1), "loop"), ((1, 0), "no-loop"), ((0, 0), "cusp")])
def test_cusp_discriminant(ab, kind):
    assert O.cusp_discriminant(*ab) == kind


def test_cusp_discriminant_against_local_model():
    # the local model q(t) = (a t + t^2) + i (b t + t^3) has a loop iff the
    # polyline through it is not simple
    import shapely

    rng = np.random.default_rng(0)
    t = np.linspace(-3, 3, 6001)
    for a, b in rng.uniform(-1, 1, (40, 2)):
        if abs(3 * a * a + 4 * b) < 0.05:
            continue
        line = shapely.LineString(np.column_stack([a * t + t ** 2, b * t + t ** 3]))
        assert (O.cusp_discriminant(a, b) == "loop") == (not line.is_simple)


def test_zero_length_range():
    s = D.make_system("rotating_kepler", omega=1.0)
    st, c = O.rotating_kepler_circular(s, O.rotating_kepler_radius(-1.6))
    start = O.find_periodic_orbit(s, c, st)
    rec = O.continue_family(start, c, samples=800)
    assert len(rec.members) == 1 and rec.events == []


@pytest.fixture(scope="module")
def short_family():
    s = D.make_system("rotating_kepler", omega=1.0)
    st, c = O.rotating_kepler_circular(s, O.rotating_kepler_radius(-1.6))
    start = O.find_periodic_orbit(s, c, st)
    return O.continue_family(start, -1.5, n_members=5, samples=800)


def test_short_family_theorem_a(short_family):
    rec = short_family
    assert len(rec.members) == 5
    assert all(m.residual <= 1e-10 and m.period > 0 for m in rec.members)
    rep = O.verify_theorem_A(rec)
    assert rep.j1_constant and rep.j2_constant and rep.tracked_matches
    assert not rep.violations
    assert np.allclose(rec.energies, np.linspace(-1.6, -1.5, 5))


def test_family_archive(short_family, tmp_path):
    O.write_family_archive(short_family, tmp_path, montage_members=3)
    lines = (tmp_path / "family.jsonl").read_text().splitlines()
    assert len(lines) == 5
    row = json.loads(lines[0])
    assert (tmp_path / row["curve_file"]).exists()
    c = model.load_curve(tmp_path / row["curve_file"])
    assert model.winding_number(c, (0, 0)) != 0
    assert (tmp_path / "events.csv").read_text().startswith("kind,")
    assert (tmp_path / "montage.svg").read_text().lstrip().startswith("<?xml")


def test_solution_json():
    k = D.make_system("kepler")
    sol = O.find_periodic_orbit(k, -0.5, D.PhaseState.of([1.0, 0.0], [0.0, 1.0]))
    d = sol.to_dict()
    json.dumps(d)
    assert d["symmetry"] == "reflection"
