from collections import Counter

import numpy as np
import pytest

from starkzeeman.curves import events as E, families as F, model, synthesis as S


def face(state, w):
    arr = model.build_arrangement(state.curve, S.PLANE_TOL)
    return next(f.index for f in arr.faces if f.winding == w and f.bounded)


def test_classify_single_moves():
    k1 = S.standard_curve(1, center=(3.0, 0.0))
    ext = S.add_exterior_loop(k1, 0)
    assert E.compare_curves(k1.curve, ext.curve).kind == "I_inf"
    assert E.compare_curves(ext.curve, k1.curve).kind == "I_inf"
    inner = S.add_loop(k1, face(k1, 1), 0)
    ev = E.compare_curves(k1.curve, inner.curve)
    assert ev.kind == "interior_loop" and ev.dj == -2
    fin = S.ii_move(k1, face(k1, 1), 0)
    ev = E.compare_curves(k1.curve, fin.curve)
    assert ev.kind == "II_plus" and ev.tangency == "inverse"
    two = S.two_satellite(2)
    pulled = S.pull_strands(two, 1)
    ev = E.compare_curves(two.curve, pulled.curve)
    assert ev.kind == "direct_tangency" and ev.dj == 2
    assert E.compare_curves(two.curve, two.curve) is None


def test_classify_collision_loop():
    k1 = S.standard_curve(1, center=(0.3, 0.0))
    moved = S.i0_move(k1)
    ev = E.compare_curves(k1.curve, moved.curve)
    assert ev.kind == "I0"
    assert abs(ev.signature["dw0"]) == 2


def _scripted():
    c0 = 1.3 - 0.12j
    base = lambda t: np.exp(1j * t) + 0.85 * np.exp(-2j * t) - c0
    return F.ScriptedFamily(base, [
        F.Excursion("collision", 0.52, 0.08, 2.0, 1),
        F.Excursion("kink", 2.09, 0.05, 1.6, -1),
        F.Excursion("bump", 2.62, 0.08, 0.5, -1),
        F.Excursion("bump", 3.14, 0.4, 0.6, 1),
    ])


def test_scripted_family_keeps_invariants():
    fam = _scripted()
    rep = F.analyse_family(fam.curve_at, fam.members(8))
    kinds = Counter(e.kind for e in rep.events)
    for k in E.STARK_ZEEMAN:
        assert kinds[k] >= 2, kinds
    assert not rep.violations
    assert rep.j1_constant and rep.j2_constant and rep.tracked_matches
    for e in rep.events:
        assert e.bracket[0] < e.bracket[1]
    row = rep.events[0].to_row()
    assert set(row) >= {"kind", "before", "after", "dn", "dw0", "drot"}


def test_direct_tangency_flagged():
    base = lambda t: np.exp(1j * t) + 0.8 * np.exp(2j * t) + (3.0 + 0.2j)
    fam = F.ScriptedFamily(base, [F.Excursion("bump", np.pi, 0.1, 2.5, -1)], samples=1200)
    rep = F.analyse_family(fam.curve_at, fam.members(8))
    assert [e.kind for e in rep.events] == ["direct_tangency", "direct_tangency"]
    dj1 = np.diff([g.two_j1 for g in rep.geometric])
    assert set(np.abs(dj1[dj1 != 0]) // 2) == {2}
    assert not rep.j1_constant
    assert rep.tracked_matches


def test_unclassifiable_change():
    a = E.CurveState(0, 0, 1, ())
    b = E.CurveState(3, 0, 1, ())
    with pytest.raises(E.EventError):
        E.classify_event(a, b)
