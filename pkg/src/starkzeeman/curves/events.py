"""Classification of the events met by a one-parameter family of curves.

Between two generic members the change of (number of double points, winding
around the origin, rotation number) identifies the event:

    I_inf  exterior loop born or killed at a cusp      (+-1,  0, +-1)
    I0     loop around the origin through a collision  (+-1, +-2, +-1)
    II     self-tangency                               (+-2,  0,  0)
    III    triple point                                (  0,  0,  0), Gauss word changes

A self-tangency is inverse (II_plus, allowed in Stark-Zeeman families) when
the two branches run in opposite directions through the new (or vanishing)
bigon and direct otherwise.  A loop born through a cusp away from the origin
counts as I_inf only when it lies in the unbounded face; a loop in a bounded
face is reported as an interior_loop violation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import model
from .synthesis import gauss_signature

PLANE_TOL = model.Tolerances(check_origin=False)

STARK_ZEEMAN = ("I0", "I_inf", "II_plus", "III")
VIOLATIONS = ("direct_tangency", "interior_loop")


class EventError(RuntimeError):
    pass


@dataclass
class CurveState:
    n: int
    w0: int
    rotation: int
    gauss: tuple
    double_points: list = field(repr=False, default_factory=list)

    def key(self):
        return (self.n, self.w0, self.rotation, self.gauss)


def curve_state(curve, tol=PLANE_TOL):
    dps = model.double_points(curve, tol)
    return CurveState(
        n=len(dps),
        w0=model.winding_number(curve, (0.0, 0.0)),
        rotation=model.rotation_number(curve),
        gauss=gauss_signature(curve),
        double_points=dps,
    )


@dataclass
class EventRecord:
    kind: str
    bracket: tuple
    signature: dict
    index: int = 0  # member after which the event happens
    tangency: str | None = None
    dj: int = 0  # J+ jump of an event that is not a Stark-Zeeman move
    paired: bool = False

    def to_row(self):
        s = self.signature
        return {
            "kind": self.kind,
            "before": self.bracket[0],
            "after": self.bracket[1],
            "dn": s["dn"],
            "dw0": s["dw0"],
            "drot": s["drot"],
            "index": self.index,
            "tangency": self.tangency or "",
            "paired": int(self.paired),
        }


def _circ(a, b, L):
    d = (b - a) % L
    return d - L if d > L / 2 else d


def _new_pair(rich, poor):
    """The two double points of `rich` with no counterpart in `poor`."""
    return [rich.double_points[k] for k in _unmatched(rich, poor, 2)]


def _unmatched(rich, poor, count):
    if len(poor.double_points) == 0:
        idx = list(range(len(rich.double_points)))
    else:
        P = np.array([d.position for d in rich.double_points])
        Q = np.array([d.position for d in poor.double_points])
        dist = np.linalg.norm(P[:, None, :] - Q[None, :, :], axis=2)
        r, _ = linear_sum_assignment(dist)
        idx = sorted(set(range(len(P))) - set(r.tolist()))
    if len(idx) != count:
        raise EventError("could not isolate the new double points")
    return idx


def loop_face_winding(rich, poor, curve):
    """Winding number of the face holding the small loop that rich has extra."""
    if curve is None:
        raise EventError("curve needed to locate a loop")
    (k,) = _unmatched(rich, poor, 1)
    arr = model.build_arrangement(curve, PLANE_TOL)
    return arr.vertex_index(k)


def tangency_kind(rich, length):
    """Direct or inverse, from the two double points bounding the small bigon.

    Follow branch 1 from p to q; branch 2 either also runs from p to q
    (direct tangency) or from q to p (inverse).
    """
    p, q = rich
    s1p, s2p = p.params
    # match q's branch parameters to p's branches by proximity along the curve
    a, b = q.params
    if abs(_circ(s1p, a, length)) + abs(_circ(s2p, b, length)) <= abs(_circ(s1p, b, length)) + abs(_circ(s2p, a, length)):
        s1q, s2q = a, b
    else:
        s1q, s2q = b, a
    same = _circ(s1p, s1q, length) * _circ(s2p, s2q, length) > 0
    return "direct" if same else "inverse"


def classify_event(before, after, curve_before=None, curve_after=None, bracket=(0.0, 1.0),
                   index=0, symmetric=False):
    """Classify the change between two generic members."""
    dn = after.n - before.n
    dw = after.w0 - before.w0
    dr = after.rotation - before.rotation
    sig = {"dn": dn, "dw0": dw, "drot": dr}
    rec = lambda kind, **kw: EventRecord(kind, tuple(bracket), sig, index, **kw)
    if (dn, dw, dr) == (0, 0, 0):
        if before.gauss == after.gauss:
            return None
        return rec("III")
    if abs(dn) == 1 and abs(dr) == 1:
        if dw == 0:
            # the loop sits in a face C whose winding is the index of its
            # double point; only loops in the unbounded face are exterior
            w_c = loop_face_winding(after, before, curve_after) if dn > 0 else \
                loop_face_winding(before, after, curve_before)
            if w_c == 0:
                return rec("I_inf")
            return rec("interior_loop", dj=-2 * w_c * dr)
        if abs(dw) == 2:
            return rec("I0")
    if abs(dn) == 2 and dw == 0 and dr == 0:
        if dn > 0:
            pair, curve = _new_pair(after, before), curve_after
        else:
            pair, curve = _new_pair(before, after), curve_before
        if curve is None:
            raise EventError("curve needed to classify a tangency")
        kind = tangency_kind(pair, curve.length)
        if kind == "inverse":
            return rec("II_plus", tangency="inverse")
        return rec("direct_tangency", tangency="direct", dj=2 if dn > 0 else -2)
    if symmetric and abs(dn) == 2 and abs(dr) == 2:
        # symmetric families may pass two mirror-image cusps at one parameter;
        # |dw0| = 2 is a collision cusp together with an exterior one
        if dw == 0:
            return rec("I_inf", paired=True)
        if abs(dw) in (2, 4):
            return rec("I0", paired=True)
    raise EventError(f"unclassifiable change {sig}")


def compare_curves(a, b, bracket=(0.0, 1.0), index=0, symmetric=False, tol=PLANE_TOL):
    sa, sb = curve_state(a, tol), curve_state(b, tol)
    return classify_event(sa, sb, a, b, bracket, index, symmetric)


def detect_events(curve_at, p0, p1, index=0, tol=1e-6, symmetric=False, max_depth=60, _states=None):
    """Bracket and classify every event of curve_at(p) for p between p0 and p1.

    curve_at must return a PolyCurve or raise model.CurveError for members
    too close to an event; such parameters are nudged.  Returns EventRecords
    sorted by parameter.
    """
    cache = {} if _states is None else _states

    def state(p):
        if p not in cache:
            c = curve_at(p)
            cache[p] = (c, curve_state(c))
        return cache[p]

    out = []

    def rec(a, b, depth):
        ca, sa = state(a)
        cb, sb = state(b)
        if sa.key() == sb.key():
            return
        if abs(b - a) <= tol or depth >= max_depth:
            ev = classify_event(sa, sb, ca, cb, (a, b), index, symmetric)
            if ev is not None:
                out.append(ev)
            return
        m = 0.5 * (a + b)
        for shift in (0.0, 0.1, -0.1, 0.23, -0.23, 0.37, -0.37):
            mm = m + shift * (b - a)
            try:
                state(mm)
                break
            except model.CurveError:
                continue
        else:
            # every probe inside is degenerate: the bracket is as tight as the
            # genericity margins allow
            ev = classify_event(sa, sb, ca, cb, (a, b), index, symmetric)
            if ev is not None:
                out.append(ev)
            return
        rec(a, mm, depth + 1)
        rec(mm, b, depth + 1)

    rec(p0, p1, 0)
    out.sort(key=lambda e: e.bracket[0])
    return out
