import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import turning
from starkzeeman.curves import model, synthesis as S
from starkzeeman.curves.invariants import invariants, j_plus_geometric


def face(state, w, bounded=True):
    arr = model.build_arrangement(state.curve, S.PLANE_TOL)
    return next(f.index for f in arr.faces if f.winding == w and f.bounded == bounded)


@pytest.mark.parametrize("j,jp", [(1, 0), (0, 0), (3, -4), (-3, -4), (6, -10)])
def test_standard_curve(j, jp):
    r = S.standard_curve(j)
    assert r.j_plus == jp
    assert r.rotation == j
    assert turning(r.curve.vertices) == j


def test_standard_curve_bad_radius():
    with pytest.raises(S.PlacementError):
        S.standard_curve(2, radius=0.0)


def test_add_loop_bounded_and_exterior():
    k1 = S.standard_curve(1)
    r = S.add_loop(k1, face(k1, 1), 0)
    assert r.j_plus == -2 and r.rotation == 2
    assert j_plus_geometric(r.curve) == -2
    r = S.add_exterior_loop(k1, 0)
    assert r.j_plus == 0
    assert j_plus_geometric(r.curve) == 0


@pytest.mark.parametrize("w", [2, 3, 4])
def test_add_loop_innermost_recursion(w):
    prev = S.k_superscript(w - 1)
    r = S.add_loop(prev, face(prev, w - 1), 0)
    assert r.j_plus - prev.j_plus == -2 * (w - 1)
    assert j_plus_geometric(r.curve) == r.j_plus


def test_ii_moves():
    k1 = S.standard_curve(1, center=(3.0, 0.0))
    r = S.ii_move(k1, face(k1, 1), 0, direction="forward")
    assert r.log[-1]["tangencies"] == ["inverse"]
    assert r.n_double == 2 and r.j_plus == 0 == j_plus_geometric(r.curve)
    with pytest.raises(S.PlacementError):
        S.ii_move(k1, face(k1, 1), 0, direction="forward", tangency="direct")
    pulled = S.pull_strands(S.two_satellite(2), 1)
    assert pulled.log[-1]["tangencies"] == ["direct"]
    assert pulled.j_plus - (-10) == 2 == j_plus_geometric(pulled.curve) + 10
    arr = model.build_arrangement(pulled.curve, S.PLANE_TOL)
    back = S.ii_move(pulled, S.bigon_faces(arr)[0], direction="backward")
    assert back.log[-1]["tangency"] == "direct"
    assert back.j_plus - pulled.j_plus == -2
    assert j_plus_geometric(back.curve) == back.j_plus


def test_satellite():
    k2 = S.standard_curve(2)
    assert S.satellite(k2, 1).n_double == 1
    s = S.satellite(k2, 2)
    assert s.n_double == 5
    assert s.j_plus == -10 == j_plus_geometric(s.curve)


def test_connected_sum():
    cs = S.connected_sum(S.standard_curve(2), S.standard_curve(2, center=(0, 3)), (0, 1))
    assert cs.j_plus == -4 == j_plus_geometric(cs.curve)
    k3 = S.standard_curve(3)
    cs = S.connected_sum(k3, S.standard_curve(1), (0, 1))
    assert cs.j_plus == k3.j_plus


@pytest.mark.parametrize("w,jp", [(1, 0), (2, -2), (5, -20)])
def test_k_superscript(w, jp):
    r = S.k_superscript(w)
    assert r.j_plus == jp == j_plus_geometric(r.curve)
    assert r.w0 == w
    with pytest.raises(S.PlacementError):
        S.k_superscript(0)


@pytest.mark.parametrize("jkl,pair", [((1, 0, 0), (0, 0)), ((2, 1, -1), (-8, -6)), ((3, 0, 2), (-12, -4))])
def test_construct_even_pair(jkl, pair):
    inv = invariants(S.construct_even_pair(*jkl).curve)
    assert (inv.two_j1 // 2, inv.j2) == pair
    assert inv.two_j1 % 2 == 0


def test_even_pair_for_target_arithmetic():
    for a in range(-40, 41, 2):
        for b in range(-40, 41, 2):
            j, k, l = S.even_pair_for_target(a, b)
            assert j >= 1 and k >= 0
            assert -8 * (j - 1) + 2 * k + 2 * l == a
            assert -4 * (j - 1) + 2 * l == b
    with pytest.raises(ValueError):
        S.even_pair_for_target(1, 0)


def test_two_satellite_recursion():
    vals = [S.two_satellite(j).j_plus for j in range(1, 5)]
    assert vals == [-2 - 8 * (j - 1) for j in range(1, 5)]
    assert np.all(np.diff(vals) == -8)


def test_move_program_json_roundtrip():
    prog, st_ = S.random_corpus(1, seed=11)[0]
    again = S.MoveProgram.from_json(prog.to_json())
    assert S.evaluate(again).j_plus == st_.j_plus


@given(st.integers(0, 2 ** 31))
def test_random_program_is_consistent(seed):
    prog, state = S.random_program(np.random.default_rng(seed))
    # verify() re-measures n, rotation and w0 against the symbolic log
    state.verify()
    assert state.j_plus % 2 == 0
    assert j_plus_geometric(state.curve) == state.j_plus
    assert -5 <= state.w0 <= 5 and state.n_double <= 20 + 6
