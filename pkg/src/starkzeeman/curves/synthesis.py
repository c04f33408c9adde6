"""Geometric realizations of named curves and moves with J+ tracked by rule.

Every construction returns an OracleResult whose j_plus comes from the move
rules (loop addition changes J+ by -2 w(K, C); a direct self-tangency
crossing by +-2; inverse tangencies, triple points and exterior loops by 0;
connected sums add).  The realized polyline is checked after every step: the
measured number of double points, rotation number and winding around the
origin must match what the move predicts, otherwise PlacementError is raised
and the symbolic J+ is never applied to a curve that does not realize it.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .model import PolyCurve, Tolerances, point_segment_distance

PLANE_TOL = Tolerances(check_origin=False)


class PlacementError(RuntimeError):
    """A move could not be realized geometrically at the requested place."""


@dataclass
class OracleResult:
    curve: PolyCurve
    j_plus: int | None
    w0: int
    rotation: int
    n_double: int
    log: list = field(default_factory=list)
    tag: dict = field(default_factory=dict)  # provenance used by satellite()

    def verify(self, tol=PLANE_TOL):
        """Re-measure the realized curve; raise PlacementError on disagreement."""
        c = self.curve
        rep = model.validate_genericity(c, tol)
        if not rep.is_generic:
            raise PlacementError(f"realized curve is not generic: {rep.kinds()}")
        n = len(model.double_points(c, check=False))
        rot = model.rotation_number(c)
        w0 = _w0(c)
        if (n, rot, w0) != (self.n_double, self.rotation, self.w0):
            raise PlacementError(
                f"measured (n, rot, w0)={(n, rot, w0)} but expected "
                f"{(self.n_double, self.rotation, self.w0)}"
            )
        return self

    def with_step(self, curve, dj, dn, drot, dw0, entry, tag=None):
        jp = None if self.j_plus is None or dj is None else self.j_plus + dj
        out = OracleResult(
            curve=curve,
            j_plus=jp,
            w0=self.w0 + dw0,
            rotation=self.rotation + drot,
            n_double=self.n_double + dn,
            log=self.log + [dict(entry, dJ=dj)],
            tag={} if tag is None else tag,
        )
        return out.verify()


def _w0(curve):
    try:
        return model.winding_number(curve, (0.0, 0.0), eps=0.0)
    except model.ProximityError:
        raise PlacementError("curve passes through the origin")


def _frame(p, q):
    t = (q - p) / np.linalg.norm(q - p)
    return t, np.array([-t[1], t[0]])


def _local(origin, t, n, uv):
    uv = np.asarray(uv, dtype=float)
    return origin + uv[:, :1] * t + uv[:, 1:] * n


def _replace_on_segment(v, seg, pts):
    """Insert pts (curve order, first/last on segment seg) after vertex seg."""
    return np.vstack([v[: seg + 1], pts, v[seg + 1:]])


def _replace_window(curve, s0, s1, pts):
    """Replace the arc between arclengths s0 < s1 (mod length) with pts."""
    v = curve.vertices
    cum = curve.arclength
    L = curve.length
    after = np.flatnonzero(cum > s1 % L)
    r = int(after[0]) if len(after) else 0
    v2 = np.roll(v, -r, axis=0)
    c2 = PolyCurve(v2)
    cum2 = c2.arclength
    s1p = (s1 - cum[r]) % L
    s0p = s1p - (s1 - s0)
    if s0p <= 0:
        raise PlacementError("window wraps onto itself")
    keep = v2[cum2 < s0p]
    out = np.vstack([keep, c2.point_at(s0p)[None], pts, c2.point_at(s1p)[None]])
    return PolyCurve(_dedupe(out))


def _dedupe(v, eps=1e-14):
    d = np.linalg.norm(np.diff(v, axis=0, append=v[:1]), axis=1)
    return v[d > eps * max(1.0, np.abs(v).max())]


def _other_segments_distance(curve, p, exclude):
    a, b = curve.segments
    d = point_segment_distance(p, a, b)
    d[list(exclude)] = np.inf
    return float(d.min())


def ray_hits(curve, p, d, exclude=()):
    """Intersections of the ray p + lam d (lam > 0) with the polyline.

    Returns (lam, seg) sorted by lam.
    """
    a, b = curve.segments
    e = b - a
    denom = model._cross(d, e)
    pa = a - p
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = model._cross(pa, e) / denom
        mu = model._cross(pa, d) / denom
    ok = (denom != 0) & (lam > 0) & (mu >= 0) & (mu < 1)
    ok[list(exclude)] = False
    idx = np.flatnonzero(ok)
    order = np.argsort(lam[idx])
    return lam[idx][order], idx[order]


# -- seeds ----------------------------------------------------------------------


def _placed(z, center, radius, angle):
    return complex(*center) + radius * np.exp(1j * angle) * z


def adaptive_curve(f, n, dense=64):
    """Sample f on [0, 2pi) with points spread evenly in length plus turning."""
    t = np.linspace(0.0, 2 * math.pi, dense * n, endpoint=False)
    z = np.asarray(f(t), dtype=complex)
    dz = np.roll(z, -1) - z
    ds = np.abs(dz)
    dth = np.abs(np.angle(np.roll(dz, -1) / dz))
    wgt = ds / ds.sum() + dth / dth.sum()
    cum = np.concatenate([[0.0], np.cumsum(wgt)])
    tt = np.append(t, 2 * math.pi)
    targets = (np.arange(n) + 0.5) / n * cum[-1]
    return PolyCurve.from_points(f(np.interp(targets, cum, tt)))


def standard_curve(j, center=(0.0, 0.0), radius=1.0, angle=0.0, samples=96):
    """Realize Arnold's standard curve K_j.

    K_0 is a figure eight; K_j (j != 0) is a circle with |j|-1 interior loops
    and rotation number j.  J+ is 2 - 2|j| (and 0 on K_0).
    """
    if radius <= 0:
        raise PlacementError("radius must be positive")
    k = abs(j)
    if j == 0:
        f = lambda t: _placed(np.sin(t) + 0.5j * np.sin(2 * t), center, radius, angle)
        c = adaptive_curve(f, 2 * samples)
        jp = 0
    elif k == 1:
        f = lambda t: _placed(np.exp(1j * t), center, radius, angle)
        c = PolyCurve.from_function(f, samples)
        jp = 0
    else:
        a = min(0.75, 1.8 / k)
        f = lambda t: _placed((np.exp(1j * t) + a * np.exp(1j * k * t)) / (1 + a), center, radius, angle)
        c = adaptive_curve(f, samples * k)
        jp = 2 - 2 * k
    if j < 0:
        c = c.reversed()
    res = OracleResult(c, jp, _w0(c), j, max(k - 1, 1 if j == 0 else 0),
                       [{"step": "standard_curve", "j": j, "J+": jp}], {"standard": j})
    return res.verify()


def satellite(state, n, delta=None, start=None):
    """n-satellite: a spiral running n times along K, drifting to its left.

    The spiral is closed by a short arc crossing the n-1 inner strands.  J+ is
    only known for the seeds whose values are fixed by their recursions:
    n K_{+-1} = K^n with J+ = -n(n-1), and 2 K_j with J+ = -2 - 8(j-1).
    """
    if n < 1:
        raise PlacementError("n must be >= 1")
    if n == 1:
        return state
    c = state.curve
    v = c.vertices
    N = len(v)
    if delta is None:
        delta = 0.15 * feature_size(c)
    if start is None:
        start = _quiet_vertex(c)
    v = np.roll(v, -start, axis=0)
    # the closing arc crosses the inner strands; keep it steep by refining
    # the few segments it spans
    seg = float(np.linalg.norm(v[1] - v[0]))
    sub = int(math.ceil(seg * math.tan(math.radians(50)) / delta))
    if sub > 1:
        head = _subdivide_open(v[:3], sub)
        tail = _subdivide_open(np.vstack([v[-3:], v[:1]]), sub)[:-1]
        v = np.vstack([head[:-1], v[2:-3], tail])
        N = len(v)
        seg /= sub
    e = np.roll(v, -1, axis=0) - v
    e /= np.linalg.norm(e, axis=1)[:, None]
    nrm = np.column_stack([-e[:, 1], e[:, 0]])
    vn = nrm + np.roll(nrm, 1, axis=0)
    vn /= np.linalg.norm(vn, axis=1)[:, None]
    # miter scaling keeps the offset strands parallel at the polyline corners
    cosh = np.einsum("ij,ij->i", vn, nrm)
    vn /= cosh[:, None]
    h = max(1, int(delta / (seg * math.tan(math.radians(50)))))
    total = n * N - h
    idx = np.arange(total)
    off = delta * idx / (n * N)
    pts = v[idx % N] + off[:, None] * vn[idx % N]
    # start part way along the first segment so the closing arc does not
    # meet the inner strands at their vertices
    pts[0] = v[0] + 0.37 * (v[1] - v[0])
    sat = PolyCurve(pts)
    jp = None
    std = state.tag.get("standard")
    if std is not None and abs(std) == 1:
        jp = -n * (n - 1)
    elif std is not None and n == 2 and std != 0:
        jp = -2 - 8 * (abs(std) - 1)
    res = OracleResult(
        curve=sat,
        j_plus=jp,
        w0=n * state.w0,
        rotation=n * state.rotation,
        n_double=n * n * state.n_double + n - 1,
        log=state.log + [{"step": "satellite", "n": n, "dJ": None, "J+": jp}],
        tag={"satellite_of": std, "n": n},
    )
    return res.verify()


def _subdivide_open(v, m):
    """Split each segment of an open polyline into m pieces (ends kept)."""
    f = np.arange(m) / m
    pts = (v[:-1, None, :] * (1 - f)[None, :, None] + v[1:, None, :] * f[None, :, None]).reshape(-1, 2)
    return np.vstack([pts, v[-1:]])


def _quiet_vertex(curve):
    """Vertex farthest from every double point and from the origin."""
    v = curve.vertices
    dps = model.double_points(curve, PLANE_TOL, check=False)
    d = np.full(len(v), np.inf)
    for dp in dps:
        d = np.minimum(d, np.linalg.norm(v - dp.position, axis=1))
    return int(np.argmax(d))


def feature_size(curve):
    """Closest approach between arcs that do not meet at a double point.

    Vertices near a double point are skipped; the rest are compared with
    segments that are much closer in the plane than along the curve.
    """
    v = curve.vertices
    a, b = curve.segments
    L = curve.length
    cum = curve.arclength
    seglen = curve.seg_lengths
    win = 4.0 * seglen.max()
    dps = model.double_points(curve, PLANE_TOL, check=False)
    near = np.zeros(len(v), dtype=bool)
    for dp in dps:
        near |= np.linalg.norm(v - dp.position, axis=1) < win
    best = np.inf
    for k in np.flatnonzero(~near):
        d = point_segment_distance(v[k], a, b)
        gap = np.abs(cum - cum[k])
        gap = np.minimum(gap, L - gap)
        d[(gap < win) | (d > 0.5 * gap)] = np.inf
        best = min(best, float(d.min()))
    if not np.isfinite(best):
        best = curve.diameter
    # offsets beyond the radius of curvature fold over
    turn = np.abs(model._turning_angles(v))
    with np.errstate(divide="ignore"):
        rad = 0.5 * (seglen + np.roll(seglen, 1)) / turn
    return min(best, 2.0 * float(rad.min()))


def k_superscript(w, radius=1.0):
    """The curve K^w: a w-fold spiral around the origin closed by an arc."""
    if w < 1:
        raise PlacementError("w must be >= 1")
    base = standard_curve(1, radius=radius, samples=max(64, 24 * w))
    if w == 1:
        return base
    out = satellite(base, w, delta=0.6 * radius)
    out.log[-1]["step"] = "k_superscript"
    return out


# -- loop addition --------------------------------------------------------------


LOOP_CAP = 12


def _loop_template(d):
    h = d
    cap = np.linspace(0.0, math.pi, LOOP_CAP)[1:-1]
    uv = [(-2 * d, 0.0), (2 * d, 2 * h)]
    uv += [(2 * d * math.cos(a), 2 * h + 2 * d * math.sin(a)) for a in cap]
    uv += [(-2 * d, 2 * h), (2 * d, 0.0)]
    return np.array(uv)


def _pick_halfedge_point(arr, h, position=0.5):
    p, q, seg, sgn = arr.halfedge_geometry(h)
    return p + position * (q - p), p, q, seg, sgn


def add_loop(state, face, halfedge=0, position=0.5, scale=0.15):
    """Attach a small loop inside `face` to its boundary half-edge.

    face: index into the arrangement's faces; halfedge: index into that
    face's boundary half-edge list.  J+ changes by -2 w(K, C) with K oriented
    so that the arc carries the boundary orientation of C.
    """
    arr = model.build_arrangement(state.curve, PLANE_TOL)
    f = arr.faces[face]
    h = f.halfedges[halfedge % len(f.halfedges)]
    P, p, q, seg, sgn = _pick_halfedge_point(arr, h, position)
    t, nrm = _frame(p, q)
    edge_len = float(np.linalg.norm(q - p))
    clear = _other_segments_distance(state.curve, P, [seg])
    clear = min(clear, float(np.linalg.norm(P)))
    d = min(scale * clear, 0.2 * edge_len * min(position, 1 - position) * 2)
    if d <= 1e-9 * state.curve.diameter:
        raise PlacementError("face too small for a loop here")
    pts = _local(P, t, nrm, _loop_template(d))
    if sgn < 0:
        pts = pts[::-1]
    v = _replace_on_segment(state.curve.vertices, seg, pts)
    wC = f.winding if f.bounded else 0
    dj = -2 * sgn * wC
    entry = {"step": "add_loop" if f.bounded else "add_exterior_loop", "face": face,
             "halfedge": halfedge, "position": position, "w_face": wC, "orient": sgn}
    return state.with_step(PolyCurve(v), dj, 1, sgn, 0, entry)


def add_exterior_loop(state, halfedge=0, position=0.5):
    arr = model.build_arrangement(state.curve, PLANE_TOL)
    return add_loop(state, arr.unbounded.index, halfedge, position)


# -- self-tangency moves ------------------------------------------------------


def finger(state, face, halfedge=0, position=0.5, strands=1, width=None, arr=None):
    """Push a narrow finger from a boundary arc of `face` across `strands` arcs.

    Each strand crossed is one passage through a self-tangency: direct when
    the finger tip and the strand run the same way (J+ += 2), inverse
    otherwise (J+ unchanged).  Double points passed over on the way are
    triple-point crossings and do not change J+.
    """
    c = state.curve
    if arr is None:
        arr = model.build_arrangement(c, PLANE_TOL)
    f = arr.faces[face]
    h = f.halfedges[halfedge % len(f.halfedges)]
    P, p, q, seg, sgn = _pick_halfedge_point(arr, h, position)
    t, nrm = _frame(p, q)
    lam, segs = ray_hits(c, P, nrm, exclude=[seg])
    if len(lam) < strands:
        raise PlacementError("not enough strands along the finger path")
    a, b = c.segments
    tangents = (b - a)[segs] / c.seg_lengths[segs][:, None]
    # reject shallow approaches; the finger sides must cross cleanly
    if np.any(np.abs(tangents[:strands] @ nrm) > math.cos(math.radians(25))):
        raise PlacementError("strand nearly parallel to the finger")
    last = lam[strands - 1]
    nxt = lam[strands] if len(lam) > strands else last + 2.0 * (last if strands else 1.0)
    depth = last + 0.4 * (nxt - last)
    gaps = np.diff(np.concatenate([[0.0], lam[: strands + 1] if len(lam) > strands else np.append(lam[:strands], nxt)]))
    edge_len = float(np.linalg.norm(q - p))
    w = width if width is not None else min(0.2 * gaps.min(), 0.25 * edge_len * min(position, 1 - position) * 2)
    if w <= 1e-9 * c.diameter:
        raise PlacementError("no room for a finger")
    origin_uv = np.array([np.dot(-P, t), np.dot(-P, nrm)])
    if abs(origin_uv[0]) < 2 * w and -w < origin_uv[1] < depth + 2 * w:
        raise PlacementError("finger would sweep the origin")
    uv = np.array([(-w, 0.0), (-w, depth), (0.0, depth + w), (w, depth), (w, 0.0)])
    pts = _local(P, t, nrm, uv)
    tip_dir = sgn * t
    dj = 0
    kinds = []
    for k in range(strands):
        direct = float(np.dot(tip_dir, tangents[k])) > 0
        kinds.append("direct" if direct else "inverse")
        dj += 2 if direct else 0
    if sgn < 0:
        pts = pts[::-1]
    v = _replace_on_segment(c.vertices, seg, pts)
    new = PolyCurve(v)
    _check_finger(new, seg, len(pts), strands)
    entry = {"step": "finger", "face": face, "halfedge": halfedge, "position": position,
             "strands": strands, "tangencies": kinds}
    return state.with_step(new, dj, 2 * strands, 0, 0, entry)


def _check_finger(curve, seg, npts, strands):
    """Each finger side must cross exactly `strands` arcs and the tip none."""
    (i, j, _, _, _), _ = model.segment_crossings(curve)
    side1, tip1, tip2, side2 = seg + 1, seg + 2, seg + 3, seg + 4
    count = {}
    for x, y in zip(i, j):
        for s in (x, y):
            if side1 <= s <= side2:
                count[s] = count.get(s, 0) + 1
    if count.get(tip1, 0) or count.get(tip2, 0):
        raise PlacementError("finger tip hits another arc")
    if count.get(side1, 0) != strands or count.get(side2, 0) != strands:
        raise PlacementError("finger sides do not cross the intended strands")


def ii_move(state, face, halfedge=0, position=0.5, direction="forward", tangency=None):
    """Cross one self-tangency: forward pushes a finger over the facing arc,
    backward collapses a bigon face."""
    if direction == "forward":
        out = finger(state, face, halfedge, position, strands=1)
        kind = out.log[-1]["tangencies"][0]
    elif direction == "backward":
        out = remove_bigon(state, face)
        kind = out.log[-1]["tangency"]
    else:
        raise ValueError(direction)
    if tangency is not None and tangency != kind:
        raise PlacementError(f"requested a {tangency} tangency but the arcs meet {kind}ly")
    return out


def bigon_faces(arr):
    out = []
    for f in arr.faces:
        if not f.bounded or len(f.boundary_arcs) != 2:
            continue
        (a1, _), (a2, _) = f.boundary_arcs
        e1, e2 = arr.edges[a1], arr.edges[a2]
        ends1 = {e1["start"], e1["end"]}
        ends2 = {e2["start"], e2["end"]}
        if a1 != a2 and ends1 == ends2 and len(ends1) == 2:
            out.append(f.index)
    return out


def triangle_faces(arr):
    out = []
    for f in arr.faces:
        if not f.bounded or len(f.boundary_arcs) != 3:
            continue
        nodes = set()
        for a, _ in f.boundary_arcs:
            nodes |= {arr.edges[a]["start"], arr.edges[a]["end"]}
        if len(nodes) == 3:
            out.append(f.index)
    return out


def _arc_points(arr, arc):
    """Polyline points of an arc in curve order, crossing to crossing."""
    pts = []
    for e in arr.edges[arc]["edges"]:
        n0, n1 = arr.edge_nodes[e]
        if not pts:
            pts.append(arr.node_xy[n0])
        pts.append(arr.node_xy[n1])
    return np.array(pts)


def _arc_span(arr, arc):
    """(s_start, s_end) arclength of an arc along the curve, s_end > s_start."""
    c = arr.curve
    cum = c.arclength
    lens = c.seg_lengths
    es = arr.edges[arc]["edges"]
    e0, e1 = es[0], es[-1]
    s0 = cum[arr.edge_seg[e0]] + arr.edge_t[e0, 0] * lens[arr.edge_seg[e0]]
    s1 = cum[arr.edge_seg[e1]] + arr.edge_t[e1, 1] * lens[arr.edge_seg[e1]]
    if s1 <= s0:
        s1 += c.length
    return float(s0), float(s1)


def remove_bigon(state, face=None, which=0):
    """Collapse a bigon face by pulling one of its arcs across the other."""
    c = state.curve
    arr = model.build_arrangement(c, PLANE_TOL)
    bigons = bigon_faces(arr)
    if face is None:
        if not bigons:
            raise PlacementError("no bigon face")
        face = bigons[0]
    if face not in bigons:
        raise PlacementError("face is not a bigon")
    f = arr.faces[face]
    (a_move, _), (a_keep, _) = f.boundary_arcs[which % 2], f.boundary_arcs[(which + 1) % 2]
    em, ek = arr.edges[a_move], arr.edges[a_keep]
    tangency = "direct" if em["start"] == ek["start"] else "inverse"
    keep_pts = _arc_points(arr, a_keep)
    # normal of the kept arc pointing away from the bigon
    mid = len(keep_pts) // 2
    sample = f.sample_point
    seg_dirs = np.diff(keep_pts, axis=0)
    seg_dirs /= np.linalg.norm(seg_dirs, axis=1)[:, None]
    nrm = np.column_stack([-seg_dirs[:, 1], seg_dirs[:, 0]])
    side = np.sign(np.dot(sample - keep_pts[mid], nrm[min(mid, len(nrm) - 1)]))
    far = -side * nrm
    vn = np.vstack([far[:1], far[:-1] + far[1:], far[-1:]])
    vn /= np.linalg.norm(vn, axis=1)[:, None]
    s0, s1 = _arc_span(arr, a_move)
    arc_len = s1 - s0
    a, b = c.segments
    clear = np.inf
    for k in range(len(keep_pts)):
        lam, _ = ray_hits(c, keep_pts[k] + 1e-9 * vn[k], vn[k])
        if len(lam):
            clear = min(clear, lam[0])
    delta = min(0.25 * clear, 0.1 * arc_len)
    eps = 3.0 * delta
    path = keep_pts + delta * vn
    if em["start"] != ek["start"]:
        path = path[::-1]
    new = _replace_window(c, s0 - eps, s1 + eps, path)
    entry = {"step": "remove_bigon", "face": face, "tangency": tangency}
    dj = -2 if tangency == "direct" else 0
    return state.with_step(new, dj, -2, 0, 0, entry)


def iii_move(state, face=None, which=0):
    """Push one side of a triangular face across the opposite double point."""
    c = state.curve
    arr = model.build_arrangement(c, PLANE_TOL)
    tris = triangle_faces(arr)
    if face is None:
        if not tris:
            raise PlacementError("no triangular face")
        face = tris[0]
    if face not in tris:
        raise PlacementError("face is not a triangle")
    f = arr.faces[face]
    arc, _ = f.boundary_arcs[which % 3]
    e = arr.edges[arc]
    nodes = set()
    for a_, _ in f.boundary_arcs:
        nodes |= {arr.edges[a_]["start"], arr.edges[a_]["end"]}
    (x3,) = nodes - {e["start"], e["end"]}
    X1 = arr.vertices[e["start"]].position
    X2 = arr.vertices[e["end"]].position
    X3 = arr.vertices[x3].position
    M = 0.5 * (X1 + X2)
    u = (X3 - M) / np.linalg.norm(X3 - M)
    dp3 = arr.vertices[x3]
    lam, _ = ray_hits(c, X3, u, exclude=list(dp3.segments))
    reach = lam[0] if len(lam) else np.linalg.norm(X3 - M)
    size = min(np.linalg.norm(X3 - X1), np.linalg.norm(X3 - X2), np.linalg.norm(X1 - X2))
    delta = min(0.3 * reach, 0.5 * size)
    s0, s1 = _arc_span(arr, arc)
    eps = 0.3 * min(size, s1 - s0)
    along = (X2 - X1) / np.linalg.norm(X2 - X1)
    # a short flat top beyond X3 avoids a spike at the far end
    Y = X3 + delta * u + np.outer([-0.25, 0.25], delta * along)
    new = _replace_window(c, s0 - eps, s1 + eps, Y)
    entry = {"step": "iii_move", "face": face, "which": which}
    out = state.with_step(new, 0, 0, 0, 0, entry)
    # a triple-point passage moves the two crossings on the pushed arc next
    # to X3 and leaves every other double point where it was
    before = [dp.position for k, dp in enumerate(arr.vertices) if k not in (e["start"], e["end"])]
    after = [dp.position for dp in model.double_points(new, PLANE_TOL, check=False)]
    scale = c.diameter * 1e-9
    moved = [q for q in after if min(np.linalg.norm(q - p) for p in before) > scale]
    kept = len(after) - len(moved)
    if kept != len(before) or len(moved) != 2:
        raise PlacementError("pushed arc changed crossings away from the triangle")
    if any(np.linalg.norm(q - X3) > 2.0 * delta for q in moved):
        raise PlacementError("new crossings are not next to the opposite double point")
    if gauss_signature(out.curve) == gauss_signature(c):
        raise PlacementError("triple-point move left the crossing pattern unchanged")
    return out


# -- connected sum and collision loops ----------------------------------------


def connected_sum(a, b, direction=(0.0, 1.0), gap=0.3, scale=None):
    """Join b to a across their outer boundaries by a narrow band."""
    ca, cb = a.curve, b.curve
    nrm = np.asarray(direction, dtype=float)
    nrm /= np.linalg.norm(nrm)
    if scale is not None:
        cb = cb.transformed(np.eye(2) * scale)
    va = ca.vertices
    i = int(np.argmax(va @ nrm))
    vb = cb.vertices
    jb = int(np.argmin(vb @ nrm))
    shift = va[i] - vb[jb] + gap * ca.diameter * nrm
    vb = vb + shift
    ta = va[(i + 1) % len(va)] - va[i - 1]
    tb = vb[(jb + 1) % len(vb)] - vb[jb - 1]
    if np.dot(ta, tb) > 0:
        vb = vb[::-1]
        jb = len(vb) - 1 - jb
        b_rev = True
    else:
        b_rev = False
    placed_b = PolyCurve(vb)
    w0b = _w0(placed_b)
    rotb = model.rotation_number(placed_b)
    Nb = len(vb)
    b_loop = np.array([vb[(jb + 1 + k) % Nb] for k in range(Nb - 1)])
    v = np.vstack([va[:i], b_loop, va[i + 1:]])
    new = PolyCurve(v)
    sigma = 1 if np.dot(np.array([-ta[1], ta[0]]), nrm) < 0 else -1
    dj = None if b.j_plus is None else b.j_plus
    entry = {"step": "connected_sum", "other": b.log, "direction": list(map(float, nrm)),
             "gap": gap, "scale": scale, "reversed": b_rev}
    res = OracleResult(
        curve=new,
        j_plus=None if a.j_plus is None or dj is None else a.j_plus + dj,
        w0=a.w0 + w0b,
        rotation=a.rotation + rotb - sigma,
        n_double=a.n_double + b.n_double,
        log=a.log + [dict(entry, dJ=dj)],
    )
    return res.verify()


def i0_move(state, window=3.0, scale=0.3):
    """Pass the arc nearest the origin through a collision.

    The arc is pushed across the origin and a small loop around the origin is
    attached, as in the birth of an interior loop through a cusp at the
    origin.  With the origin to the right of the arc, w0 grows by 2 and J+
    changes by -2 w0 - 2; mirrored otherwise.
    """
    c = state.curve
    a, b = c.segments
    d0 = point_segment_distance(np.zeros(2), a, b)
    seg = int(np.argmin(d0))
    sig_abs = float(d0[seg])
    t_c, n_c = _frame(a[seg], b[seg])
    ab = b[seg] - a[seg]
    tpar = float(np.clip(np.dot(-a[seg], ab) / np.dot(ab, ab), 0, 1))
    P = a[seg] + tpar * ab
    sigma = float(np.dot(-P, n_c))
    M = n_c if sigma < 0 else -n_c
    s_P = c.arclength[seg] + tpar * c.seg_lengths[seg]
    # keep the rebuilt stretch clear of the nearest double points
    L = c.length
    W = window * sig_abs
    for dp in model.double_points(c, PLANE_TOL, check=False):
        for sd in dp.params:
            gap = abs(sd - s_P)
            W = min(W, 0.7 * min(gap, L - gap))
    h = d = min(scale * sig_abs, W / 8)
    B0 = -(2 * h) * M
    uv = _loop_template(d)
    pts = B0 + uv[:, :1] * t_c + uv[:, 1:] * M
    new = _replace_window(c, s_P - W, s_P + W, pts)
    w = state.w0
    if sigma < 0:
        dw, dj, drot = 2, -2 * w - 2, 1
    else:
        dw, dj, drot = -2, 2 * w - 2, -1
    entry = {"step": "i0_move", "side": "right" if sigma < 0 else "left"}
    return state.with_step(new, dj, 1, drot, dw, entry)


def gauss_signature(curve):
    """Canonical Gauss word: crossing labels in order along the curve, with
    the sign of each passage, minimized over cyclic shifts and relabeling."""
    dps = model.double_points(curve, PLANE_TOL, check=False)
    events = []
    for k, dp in enumerate(dps):
        events.append((dp.params[0], k, dp.sign))
        events.append((dp.params[1], k, -dp.sign))
    events.sort()
    m = len(events)
    if m == 0:
        return ()
    best = None
    for r in range(m):
        labels = {}
        word = []
        for s in range(m):
            _, k, sg = events[(r + s) % m]
            if k not in labels:
                labels[k] = len(labels)
            word.append((labels[k], sg))
        word = tuple(word)
        if best is None or word < best:
            best = word
    return best


# -- compound constructions ---------------------------------------------------


def two_satellite(j):
    """2K_j for K_j winding once around the origin."""
    return satellite(standard_curve(j), 2)


def _strand_pull_sites(state):
    """Bounded-face half-edges whose finger would meet a parallel strand.

    A site qualifies when the first arc hit by the normal ray runs the same
    way as the half-edge (a direct tangency); sites are ordered by length.
    """
    c = state.curve
    arr = model.build_arrangement(c, PLANE_TOL)
    a, b = c.segments
    sites = []
    for f in arr.faces:
        if not f.bounded:
            continue
        for hk, h in enumerate(f.halfedges):
            p, q, seg, sgn = arr.halfedge_geometry(h)
            t, nrm = _frame(p, q)
            lam, segs = ray_hits(c, 0.5 * (p + q), nrm, exclude=[seg])
            if len(lam) == 0:
                continue
            tan = (b - a)[segs[0]] / c.seg_lengths[segs[0]]
            if np.dot(sgn * t, tan) > 0:
                sites.append((float(np.linalg.norm(q - p)), f.index, hk))
    sites.sort(reverse=True)
    return arr, sites


def pull_strands(state, k):
    """Apply k direct finger moves between parallel strands (J+ += 2 each)."""
    out = state
    for _ in range(k):
        arr, sites = _strand_pull_sites(out)
        for _, fi, hk in sites:
            try:
                cand = finger(out, fi, hk, 0.5, strands=1, arr=arr)
            except (PlacementError, model.CurveError):
                continue
            if cand.log[-1]["tangencies"] == ["direct"]:
                out = cand
                break
        else:
            raise PlacementError("no site for a direct strand pull")
    return out


@functools.lru_cache(maxsize=None)
def _pulled_two_satellite(j, k):
    if k == 0:
        return two_satellite(j)
    return pull_strands(_pulled_two_satellite(j, k - 1), 1)


def curve_with_j_plus(ell, radius=0.35):
    """A curve L with J+(L) = 2*ell, not enclosing the origin (w0(L) = 0).

    ell <= 0: the standard curve K_{1-ell}.  ell > 0: 2K_1 with ell+1 direct
    strand pulls.
    """
    center = (0.0, 0.0)
    if ell <= 0:
        L = standard_curve(1 - ell, center=center, radius=radius)
    else:
        L = _pulled_l(ell, radius)
    # move off the origin
    shift = np.array([0.0, -3.0 * radius])
    moved = OracleResult(L.curve.transformed(offset=shift), L.j_plus, 0, L.rotation, L.n_double, L.log)
    return moved.verify()


@functools.lru_cache(maxsize=None)
def _pulled_l(ell, radius):
    if ell == 0:
        return pull_strands(satellite(standard_curve(1, radius=radius, samples=160), 2), 1)
    return pull_strands(_pulled_l(ell - 1, radius), 1)


def construct_even_pair(j, k, ell):
    """K_{j,k,l}: 2K_j, k direct strand pulls, connected sum with L (J+ = 2l)."""
    if j < 1 or k < 0:
        raise PlacementError("need j >= 1 and k >= 0")
    base = _pulled_two_satellite(j, k)
    if ell == 0:
        return base
    L = curve_with_j_plus(ell)
    return connected_sum(base, L, direction=(0.0, -1.0), gap=0.15, scale=0.6)


def even_pair_for_target(j1, j2):
    """(j, k, l) with -8(j-1)+2k+2l = j1 and -4(j-1)+2l = j2 (j1, j2 even)."""
    if j1 % 2 or j2 % 2:
        raise ValueError("targets must be even")
    jm1 = max(0, -(-(j2 - j1) // 4))
    ell = (j2 + 4 * jm1) // 2
    k = (j1 + 8 * jm1 - 2 * ell) // 2
    return jm1 + 1, k, ell


# -- move programs --------------------------------------------------------------


@dataclass
class MoveProgram:
    seed: dict
    steps: list = field(default_factory=list)

    def to_json(self):
        return json.dumps({"seed": self.seed, "steps": self.steps}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["seed"], d["steps"])


def evaluate_seed(seed):
    kind = seed["kind"]
    if kind == "standard":
        return standard_curve(seed["j"], tuple(seed.get("center", (0.0, 0.0))),
                              seed.get("radius", 1.0), seed.get("angle", 0.0))
    if kind == "k_superscript":
        out = k_superscript(seed["w"])
        if seed.get("reverse"):
            out = OracleResult(out.curve.reversed(), out.j_plus, -out.w0, -out.rotation, out.n_double, out.log)
        return out.verify()
    if kind == "two_satellite":
        return two_satellite(seed["j"])
    raise ValueError(f"unknown seed kind {kind}")


def apply_step(state, step):
    kind = step["kind"]
    if kind == "add_loop":
        return add_loop(state, step["face"], step["halfedge"], step.get("position", 0.5))
    if kind == "add_exterior_loop":
        return add_exterior_loop(state, step["halfedge"], step.get("position", 0.5))
    if kind == "finger":
        return finger(state, step["face"], step["halfedge"], step.get("position", 0.5), step.get("strands", 1))
    if kind == "remove_bigon":
        return remove_bigon(state, step.get("face"), step.get("which", 0))
    if kind == "iii_move":
        return iii_move(state, step.get("face"), step.get("which", 0))
    if kind == "connected_sum":
        other = evaluate(MoveProgram(step["other"]["seed"], step["other"].get("steps", [])))
        return connected_sum(state, other, step.get("direction", (0.0, 1.0)), step.get("gap", 0.3), step.get("scale"))
    if kind == "i0_move":
        return i0_move(state)
    raise ValueError(f"unknown step kind {kind}")


def evaluate(program):
    state = evaluate_seed(program.seed)
    for step in program.steps:
        state = apply_step(state, step)
    return state


def random_program(rng, max_steps=4, max_double=20, w0_range=(-5, 5)):
    """A random valid move program and its evaluation."""
    while True:
        seed = _random_seed(rng)
        try:
            state = evaluate_seed(seed)
        except (PlacementError, model.CurveError):
            continue
        if (state.n_double <= max_double and w0_range[0] <= state.w0 <= w0_range[1]
                and _clear_of_origin(state.curve)):
            break
    steps = []
    for _ in range(int(rng.integers(0, max_steps + 1))):
        for _attempt in range(6):
            step = _random_step(rng, state)
            try:
                cand = apply_step(state, step)
            except (PlacementError, model.CurveError):
                continue
            if cand.n_double > max_double or not (w0_range[0] <= cand.w0 <= w0_range[1]):
                continue
            if not _clear_of_origin(cand.curve):
                continue
            state = cand
            steps.append(step)
            break
    return MoveProgram(seed, steps), state


def _clear_of_origin(curve):
    # w0 and the lift need the origin off the curve at the standard tolerance
    try:
        model.winding_number(curve, (0.0, 0.0))
    except model.ProximityError:
        return False
    return True


def _random_seed(rng):
    r = rng.random()
    if r < 0.55:
        j = int(rng.integers(-4, 5))
        placement = rng.integers(0, 3)
        if placement == 0:
            center = (0.0, 0.0)
        elif placement == 1:
            center = (float(rng.uniform(2.5, 3.5)), float(rng.uniform(-1, 1)))
        else:
            center = (float(rng.uniform(-0.3, 0.3)), float(rng.uniform(-0.3, 0.3)))
        return {"kind": "standard", "j": j, "center": center, "radius": 1.0,
                "angle": float(rng.uniform(0, 2 * math.pi))}
    if r < 0.85:
        return {"kind": "k_superscript", "w": int(rng.integers(1, 6)), "reverse": bool(rng.integers(0, 2))}
    return {"kind": "two_satellite", "j": int(rng.integers(1, 4))}


def _random_step(rng, state):
    arr = model.build_arrangement(state.curve, PLANE_TOL)
    r = rng.random()
    fi = int(rng.integers(0, len(arr.faces)))
    hk = int(rng.integers(0, len(arr.faces[fi].halfedges)))
    pos = float(rng.uniform(0.3, 0.7))
    if r < 0.35:
        return {"kind": "add_loop", "face": fi, "halfedge": hk, "position": pos}
    if r < 0.45:
        n_out = len(arr.unbounded.halfedges)
        return {"kind": "add_exterior_loop", "halfedge": int(rng.integers(0, n_out)), "position": pos}
    if r < 0.7:
        return {"kind": "finger", "face": fi, "halfedge": hk, "position": pos, "strands": int(rng.integers(1, 3))}
    if r < 0.8:
        bg = bigon_faces(arr)
        if bg:
            return {"kind": "remove_bigon", "face": int(rng.choice(bg)), "which": int(rng.integers(0, 2))}
        return {"kind": "add_loop", "face": fi, "halfedge": hk, "position": pos}
    if r < 0.88:
        tr = triangle_faces(arr)
        if tr:
            return {"kind": "iii_move", "face": int(rng.choice(tr)), "which": int(rng.integers(0, 3))}
        return {"kind": "finger", "face": fi, "halfedge": hk, "position": pos, "strands": 2}
    if r < 0.93:
        return {"kind": "i0_move"}
    j = int(rng.integers(-3, 4))
    return {"kind": "connected_sum",
            "other": {"seed": {"kind": "standard", "j": j, "center": (0.0, 0.0), "radius": 1.0}, "steps": []},
            "direction": [float(x) for x in _unit(rng.uniform(0, 2 * math.pi))],
            "gap": 0.3, "scale": 0.5}


def _unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


def random_corpus(size, seed=0, **kw):
    rng = np.random.default_rng(seed)
    return [random_program(rng, **kw) for _ in range(size)]
