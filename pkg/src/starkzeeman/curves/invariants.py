"""Arnold's J+ and the two Stark-Zeeman invariants J1, J2 of plane curves.

J+ is computed from Viro's face formula

    J+(K) = 1 + n - sum_F w_F^2 chi(F) + sum_v ind(v)^2,

with n the number of double points, w_F the winding number of a face, chi
its Euler characteristic (1 for the bounded faces of a connected immersion,
0 for the unbounded one) and ind(v) the mean winding of the four corners at
a double point.  J1 = J+ + w0^2/2 is kept as the integer 2*J1 internally.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from . import model
from .model import PolyCurve, Tolerances

PLANE_TOL = Tolerances(check_origin=False)
# the square root compresses distances where |q| > 1/4, so a crossing that sits
# comfortably off a vertex in the plane can land within 1e-6 of one upstairs
LIFT_TOL = Tolerances(check_origin=False, eps_triple=1e-9)


class TrackingError(RuntimeError):
    pass


@dataclass(frozen=True)
class InvariantSet:
    j_plus: int
    w0: int
    two_j1: int
    j2: int | None
    method: str = "geometric"

    @property
    def j1(self) -> Fraction:
        return Fraction(self.two_j1, 2)

    @property
    def parity(self) -> str:
        return "odd" if self.w0 % 2 else "even"

    def __post_init__(self):
        if self.j_plus % 2:
            raise ValueError("J+ must be even")
        if self.two_j1 != 2 * self.j_plus + self.w0 * self.w0:
            raise ValueError("2*J1 must equal 2*J+ + w0^2")

    def to_json(self):
        d = asdict(self)
        d["j1"] = float(self.j1)
        d["parity"] = self.parity
        return json.dumps(d, sort_keys=True)


def j_plus_geometric(curve: PolyCurve, tol: Tolerances = PLANE_TOL) -> int:
    arr = model.build_arrangement(curve, tol)
    n = len(arr.vertices)
    faces = sum(f.winding ** 2 * f.euler_char for f in arr.faces)
    ind = sum(arr.vertex_index(k) ** 2 for k in range(n))
    jp = 1 + n - faces + ind
    if jp % 2:
        raise model.CurveError("odd J+ value; arrangement is inconsistent")
    return jp


def w0(curve: PolyCurve) -> int:
    return model.winding_number(curve, (0.0, 0.0))


def j1_twice(curve: PolyCurve, tol: Tolerances = PLANE_TOL) -> int:
    w = w0(curve)
    return 2 * j_plus_geometric(curve, tol) + w * w


def j1(curve: PolyCurve, tol: Tolerances = PLANE_TOL) -> Fraction:
    return Fraction(j1_twice(curve, tol), 2)


# -- Levi-Civita lift -----------------------------------------------------------


@dataclass
class LiftResult:
    components: list
    connected: bool
    base: PolyCurve  # refined base curve; squaring the lift reproduces it

    @property
    def curve(self) -> PolyCurve:
        return self.components[0]


def refine_for_lift(curve: PolyCurve, rel=0.1) -> PolyCurve:
    """Subdivide segments so each is shorter than rel * distance to the origin."""
    v = curve.vertices
    w = np.roll(v, -1, axis=0)
    r = np.minimum(np.linalg.norm(v, axis=1), np.linalg.norm(w, axis=1))
    a, b = curve.segments
    dist = model.point_segment_distance(np.zeros(2), a, b)
    seglen = curve.seg_lengths
    m = np.maximum(1, np.ceil(seglen / (rel * np.minimum(r, dist))).astype(int))
    m += 1 - m % 2  # odd counts never put a vertex on a midpoint crossing
    if np.all(m == 1):
        return curve
    out = []
    for k in range(len(v)):
        f = np.arange(m[k])[:, None] / m[k]
        out.append(v[k] + f * (w[k] - v[k]))
    return PolyCurve(np.vstack(out))


def _continuous_sqrt(z):
    s = np.sqrt(z.astype(complex))
    for k in range(1, len(s)):
        if abs(s[k] - s[k - 1]) > abs(s[k] + s[k - 1]):
            s[k] = -s[k]
    return s


def levi_civita_lift_curve(curve: PolyCurve, rel=0.1, eps_origin=1e-6) -> LiftResult:
    """Preimage of the curve under v -> v^2, followed continuously.

    The branch starts at the vertex of largest |q|.  For odd w0 the preimage
    is one closed curve covering the base twice; for even w0 it has two
    components exchanged by v -> -v and the first is returned first.
    """
    a, b = curve.segments
    if model.point_segment_distance(np.zeros(2), a, b).min() <= eps_origin * curve.diameter:
        raise model.ProximityError("curve passes through the origin; lift the regularized orbit instead")
    base = refine_for_lift(curve, rel)
    z = base.as_complex()
    start = int(np.argmax(np.abs(z)))
    z = np.roll(z, -start)
    base = PolyCurve(np.column_stack([z.real, z.imag]))
    s = _continuous_sqrt(z)
    # the closing step decides the monodromy of the square root
    closes = abs(s[-1] - s[0]) > abs(s[-1] + s[0])
    if closes:
        s = np.concatenate([s, -s])
        comps = [PolyCurve.from_points(s)]
    else:
        comps = [PolyCurve.from_points(s), PolyCurve.from_points(-s)]
    return LiftResult(comps, closes, base)


def j2(curve: PolyCurve, tol: Tolerances = LIFT_TOL, seams=4) -> int:
    """J+ of the Levi-Civita lift (of one component if w0 is even)."""
    last = None
    # symmetric subdivisions can drop a vertex exactly onto a crossing of the
    # lift; other seams or densities avoid that
    for rel in (0.1, 0.083, 0.071):
        for k in range(seams):
            c = curve if k == 0 else curve.rolled(k * len(curve) // seams + 1)
            lift = levi_civita_lift_curve(c, rel)
            try:
                return j_plus_geometric(lift.curve, tol)
            except model.GenericityError as e:
                last = e
    raise last


def invariants(curve: PolyCurve, tol: Tolerances = PLANE_TOL, with_j2=True) -> InvariantSet:
    jp = j_plus_geometric(curve, tol)
    w = w0(curve)
    return InvariantSet(jp, w, 2 * jp + w * w, j2(curve) if with_j2 else None, "geometric")


# -- event tracking -----------------------------------------------------------


def apply_event(inv: InvariantSet, event) -> InvariantSet:
    """Update J+ across one classified event.

    Exterior loops (I_inf), inverse tangencies and triple points leave J+
    fixed.  A collision loop (I0) moving w0 from w to w' changes J+ by
    (w^2 - w'^2)/2, which is -2w-2 for w' = w+2.  A direct tangency (+-2) or
    a loop born inside a bounded face (-2 w_C drot) changes J+ and breaks
    the invariance of J1, J2.
    """
    kind = event.kind
    w_new = inv.w0 + event.signature["dw0"]
    jp = inv.j_plus
    if kind in ("I_inf", "II_plus", "III"):
        pass
    elif kind == "I0":
        jp += (inv.w0 ** 2 - w_new ** 2) // 2
    elif kind in ("direct_tangency", "interior_loop"):
        jp += event.dj
    else:
        raise TrackingError(f"unclassified event {kind!r}")
    j2v = inv.j2
    if kind in ("direct_tangency", "interior_loop"):
        j2v = None  # no update rule for the lift
    return InvariantSet(jp, w_new, 2 * jp + w_new * w_new, j2v, "tracked")


def j_plus_tracked(family, initial: InvariantSet, events) -> list:
    """Per-member invariants obtained from the initial member by event updates.

    events: EventRecords whose `index` is the member after which they occur.
    """
    by_gap = {}
    for ev in events:
        by_gap.setdefault(ev.index, []).append(ev)
    out = [InvariantSet(initial.j_plus, initial.w0, initial.two_j1, initial.j2, "tracked")]
    for k in range(1, len(family)):
        inv = out[-1]
        for ev in by_gap.get(k - 1, []):
            inv = apply_event(inv, ev)
        out.append(inv)
    return out
