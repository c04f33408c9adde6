"""Closed polyline curves in the plane and their planar arrangements.

A curve is a closed polyline; the last vertex connects back to the first.
Double points are found by segment intersection (an STRtree broad phase,
exact parametric narrow phase).  The arrangement is a half-edge structure
on the subdivided polyline, with one face per component of the complement
and an integer winding number per face.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import shapely

TWO_PI = 2.0 * math.pi


class CurveError(ValueError):
    """Base class for curve failures."""


class StructuralError(CurveError):
    """Malformed polyline: open, repeated vertex, too few vertices, cusp."""


class GenericityError(CurveError):
    """Curve is not a generic immersion at the configured tolerances."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ProximityError(CurveError):
    """A query point lies on (or too close to) the curve."""


@dataclass(frozen=True)
class Tolerances:
    theta_min: float = math.radians(10.0)
    eps_origin: float = 1e-6  # relative to diameter
    eps_triple: float = 1e-6  # relative to diameter
    eps_short: float = 1e-9  # relative to diameter
    check_origin: bool = True


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True, eq=False)
class PolyCurve:
    vertices: np.ndarray
    collision_samples: tuple = ()

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise StructuralError(f"vertices must have shape (n, 2), got {v.shape}")
        if len(v) < 8:
            raise StructuralError(f"a curve needs at least 8 vertices, got {len(v)}")
        if not np.all(np.isfinite(v)):
            raise StructuralError("non-finite vertex coordinates")
        step = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        bad = np.flatnonzero(step == 0.0)
        if len(bad):
            raise StructuralError(f"repeated vertex at index {int(bad[0])}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self):
        return len(self.vertices)

    @property
    def segments(self):
        v = self.vertices
        return v, np.roll(v, -1, axis=0)

    @property
    def seg_lengths(self):
        a, b = self.segments
        return np.linalg.norm(b - a, axis=1)

    @property
    def length(self):
        return float(self.seg_lengths.sum())

    @property
    def arclength(self):
        """Arclength at each vertex (starting at 0)."""
        return np.concatenate([[0.0], np.cumsum(self.seg_lengths)[:-1]])

    @property
    def diameter(self):
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.hypot(*(hi - lo)))

    def reversed(self):
        return PolyCurve(self.vertices[::-1].copy())

    def rolled(self, k):
        return PolyCurve(np.roll(self.vertices, -k, axis=0))

    def transformed(self, matrix=None, offset=(0.0, 0.0)):
        v = self.vertices
        if matrix is not None:
            v = v @ np.asarray(matrix, dtype=float).T
        return PolyCurve(v + np.asarray(offset, dtype=float))

    def point_at(self, s):
        """Point at arclength s (mod total length)."""
        L = self.length
        s = s % L
        cum = np.concatenate([[0.0], np.cumsum(self.seg_lengths)])
        i = int(np.searchsorted(cum, s, side="right") - 1)
        i = min(i, len(self) - 1)
        a, b = self.vertices[i], self.vertices[(i + 1) % len(self)]
        t = (s - cum[i]) / (cum[i + 1] - cum[i])
        return a + t * (b - a)

    @classmethod
    def from_function(cls, f, n, t0=0.0, t1=TWO_PI, phase=0.5):
        """Sample a closed parametric curve f(t) -> complex at n points."""
        t = t0 + (np.arange(n) + phase) * (t1 - t0) / n
        z = np.asarray(f(t), dtype=complex)
        return cls(np.column_stack([z.real, z.imag]))

    @classmethod
    def from_points(cls, z):
        z = np.asarray(z, dtype=complex)
        return cls(np.column_stack([z.real, z.imag]))

    def as_complex(self):
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]


@dataclass(frozen=True)
class DoublePoint:
    position: np.ndarray
    params: tuple  # arclength on the two branches, params[0] < params[1]
    crossing_angle: float
    segments: tuple  # polyline segment indices of the two branches
    seg_params: tuple  # local parameters in [0, 1) on those segments
    sign: int  # sign of cross(first branch, second branch)


@dataclass
class GenericityReport:
    is_generic: bool
    violations: list = field(default_factory=list)

    def kinds(self):
        return sorted({v["kind"] for v in self.violations})


# -- segment intersection ---------------------------------------------------


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _candidate_pairs(a, b):
    lines = shapely.linestrings(np.stack([a, b], axis=1))
    tree = shapely.STRtree(lines)
    i, j = tree.query(lines, predicate="intersects")
    n = len(a)
    keep = (i < j) & (j - i != 1) & ~((i == 0) & (j == n - 1))
    return i[keep], j[keep]


def _solve_pairs(a, b, i, j):
    """Intersection parameters of segment pairs (i, j).

    Returns (i, j, t, u, denom) restricted to pairs that actually meet with
    t, u in the half-open interval [0, 1).
    """
    r = b[i] - a[i]
    s = b[j] - a[j]
    qp = a[j] - a[i]
    denom = _cross(r, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = _cross(qp, s) / denom
        u = _cross(qp, r) / denom
    ok = (denom != 0) & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
    par = denom == 0
    return (i[ok], j[ok], t[ok], u[ok], denom[ok]), (i[par], j[par])


def segment_crossings(curve):
    """All proper crossings between non-adjacent segments.

    Returns arrays (i, j, t, u) with i < j, plus pairs of parallel segments
    that touch (these are reported as tangencies by validate_genericity).
    """
    a, b = curve.segments
    i, j = _candidate_pairs(a, b)
    return _solve_pairs(a, b, i, j)


def brute_force_crossings(curve):
    """Reference all-pairs intersection, used to check the broad phase."""
    a, b = curve.segments
    n = len(a)
    ii, jj = np.triu_indices(n, k=2)
    keep = ~((ii == 0) & (jj == n - 1))
    (i, j, t, u, _), _ = _solve_pairs(a, b, ii[keep], jj[keep])
    return i, j, t, u


# -- genericity ---------------------------------------------------------------


def _turning_angles(v):
    e = np.roll(v, -1, axis=0) - v
    e_prev = np.roll(e, 1, axis=0)
    return np.arctan2(_cross(e_prev, e), np.einsum("ij,ij->i", e_prev, e))


def point_segment_distance(p, a, b):
    """Distance from point p to each segment a[k] -> b[k]."""
    ab = b - a
    L2 = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.where(L2 > 0, L2, 1.0), 0.0, 1.0)
    d = a + t[:, None] * ab - p
    return np.hypot(d[:, 0], d[:, 1])


def validate_genericity(curve, tol=DEFAULT_TOL):
    """Check that a polyline is a generic immersion.

    Reports shallow crossings and parallel overlaps (near-tangency), double
    points too close to each other or to a polyline vertex (near-triple),
    passes near the origin (origin-hit), and tiny segments (short-segment).
    """
    diam = curve.diameter
    violations = []
    lengths = curve.seg_lengths
    short = np.flatnonzero(lengths < tol.eps_short * diam)
    for k in short:
        violations.append({"kind": "short-segment", "location": int(k), "measure": float(lengths[k])})

    turn = _turning_angles(curve.vertices)
    spikes = np.flatnonzero(np.abs(turn) > math.pi - tol.theta_min)
    for k in spikes:
        violations.append({"kind": "near-tangency", "location": int(k), "measure": float(abs(turn[k]))})

    (i, j, t, u, denom), (pi_, pj_) = segment_crossings(curve)
    a, b = curve.segments
    for p, q in zip(pi_, pj_):
        d = min(point_segment_distance(a[p], a[q : q + 1], b[q : q + 1])[0],
                point_segment_distance(b[p], a[q : q + 1], b[q : q + 1])[0])
        if d < tol.eps_triple * diam:
            violations.append({"kind": "near-tangency", "location": (int(p), int(q)), "measure": 0.0})

    if len(i):
        r = b[i] - a[i]
        s = b[j] - a[j]
        sin_ang = np.abs(denom) / (np.linalg.norm(r, axis=1) * np.linalg.norm(s, axis=1))
        ang = np.arcsin(np.clip(sin_ang, 0.0, 1.0))
        for k in np.flatnonzero(ang < tol.theta_min):
            violations.append({"kind": "near-tangency", "location": (int(i[k]), int(j[k])), "measure": float(ang[k])})
        eps = tol.eps_triple * diam
        li, lj = lengths[i], lengths[j]
        at_vertex = (np.minimum(t, 1 - t) * li < eps) | (np.minimum(u, 1 - u) * lj < eps)
        for k in np.flatnonzero(at_vertex):
            violations.append({"kind": "near-triple", "location": (int(i[k]), int(j[k])), "measure": 0.0})
        pts = a[i] + t[:, None] * r
        if len(pts) > 1:
            tree = shapely.STRtree(shapely.points(pts))
            pa, pb = tree.query(shapely.points(pts), predicate="dwithin", distance=eps)
            for x, y in zip(pa, pb):
                if x < y:
                    violations.append({"kind": "near-triple", "location": (int(i[x]), int(j[x])),
                                       "measure": float(np.linalg.norm(pts[x] - pts[y]))})

    if tol.check_origin:
        d0 = point_segment_distance(np.zeros(2), a, b)
        k = int(np.argmin(d0))
        if d0[k] < tol.eps_origin * diam:
            violations.append({"kind": "origin-hit", "location": k, "measure": float(d0[k])})

    return GenericityReport(not violations, violations)


def require_generic(curve, tol=DEFAULT_TOL):
    report = validate_genericity(curve, tol)
    if not report.is_generic:
        raise GenericityError(f"curve is not generic: {report.kinds()}", report)
    return report


# -- basic invariants ---------------------------------------------------------


def double_points(curve, tol=DEFAULT_TOL, check=True):
    if check:
        require_generic(curve, tol)
    (i, j, t, u, denom), _ = segment_crossings(curve)
    a, b = curve.segments
    cum = curve.arclength
    lengths = curve.seg_lengths
    out = []
    order = np.lexsort((t, i))
    for k in order:
        r = b[i[k]] - a[i[k]]
        s = b[j[k]] - a[j[k]]
        cosang = float(np.dot(r, s) / (np.linalg.norm(r) * np.linalg.norm(s)))
        out.append(DoublePoint(
            position=a[i[k]] + t[k] * r,
            params=(float(cum[i[k]] + t[k] * lengths[i[k]]), float(cum[j[k]] + u[k] * lengths[j[k]])),
            crossing_angle=math.acos(max(-1.0, min(1.0, cosang))),
            segments=(int(i[k]), int(j[k])),
            seg_params=(float(t[k]), float(u[k])),
            sign=1 if denom[k] > 0 else -1,
        ))
    return out


def rotation_number(curve):
    """Whitney index: total turning of the tangent over 2*pi."""
    turn = _turning_angles(curve.vertices)
    if np.any(np.abs(turn) >= math.pi - 1e-12):
        raise StructuralError("tangent reverses direction (cusp or spike)")
    total = turn.sum() / TWO_PI
    return int(round(total))


_RAY_ANGLES = (0.6180339887 + 2.399963229728653 * np.arange(64)) % TWO_PI


def winding_number(curve, point, eps=None):
    """Signed number of turns of the curve around point (ray crossing count)."""
    p = np.asarray(point, dtype=float)
    a, b = curve.segments
    diam = curve.diameter
    if eps is None:
        eps = DEFAULT_TOL.eps_origin * diam
    if point_segment_distance(p, a, b).min() <= eps:
        raise ProximityError(f"point {tuple(p)} lies on the curve")
    pa = a - p
    pb = b - p
    tie = 1e-12 * max(diam, np.abs(p).max(), 1.0)
    for theta in _RAY_ANGLES:
        d = np.array([math.cos(theta), math.sin(theta)])
        sa = _cross(d, pa)
        sb = _cross(d, pb)
        if np.any((np.abs(sa) < tie) & (pa @ d > 0)):
            continue
        up = (sa < 0) & (sb > 0)
        down = (sa > 0) & (sb < 0)
        hit = up | down
        # the crossing lies on the ray (not behind the point)
        lam = _cross(pa, b - a) / np.where(hit, _cross(d, b - a), 1.0)
        fwd = hit & (lam > 0)
        return int(np.count_nonzero(up & fwd) - np.count_nonzero(down & fwd))
    raise ProximityError("could not find a non-degenerate ray")


def winding_number_angle_sum(curve, point):
    """Winding number by summing subtended angles (independent check)."""
    p = np.asarray(point, dtype=float)
    a, b = curve.segments
    pa, pb = a - p, b - p
    ang = np.arctan2(_cross(pa, pb), np.einsum("ij,ij->i", pa, pb))
    return int(round(ang.sum() / TWO_PI))


# -- arrangement -------------------------------------------------------------


@dataclass
class Face:
    index: int
    winding: int
    bounded: bool
    euler_char: int
    sample_point: np.ndarray
    boundary_arcs: list  # (arc index, +1 if traversed along the curve else -1)
    halfedges: list
    area: float


@dataclass
class CurveArrangement:
    curve: PolyCurve
    vertices: list  # DoublePoint list
    edges: list  # arcs between double points: dict(start, end, nodes)
    faces: list
    node_xy: np.ndarray
    edge_seg: np.ndarray  # polyline segment of each subdivided edge
    edge_t: np.ndarray  # (k, 2) local parameters of edge ends on that segment
    edge_nodes: np.ndarray  # (k, 2) node ids
    he_face: np.ndarray  # face to the left of half-edge h (2k forward, 2k+1 backward)
    edge_arc: np.ndarray
    crossing_nodes: np.ndarray  # node id of each double point

    @property
    def unbounded(self):
        return next(f for f in self.faces if not f.bounded)

    def euler_characteristic(self):
        V = len(self.node_xy)
        E = len(self.edge_nodes)
        F = len(self.faces)
        return V - E + F

    def vertex_index(self, k):
        """Index of double point k: mean winding of its four corner faces."""
        node = self.crossing_nodes[k]
        hs = [2 * e for e in np.flatnonzero(self.edge_nodes[:, 0] == node)]
        hs += [2 * e + 1 for e in np.flatnonzero(self.edge_nodes[:, 1] == node)]
        total = sum(self.faces[self.he_face[h]].winding for h in hs)
        if total % 4:
            raise CurveError("inconsistent corner windings at a double point")
        return total // 4

    def face_of_point(self, p):
        w = winding_number(self.curve, p)
        return [f for f in self.faces if f.winding == w]

    def halfedge_geometry(self, h):
        """(start, end, segment index, curve direction sign) of a half-edge."""
        e, back = divmod(h, 2)
        n0, n1 = self.edge_nodes[e]
        if back:
            n0, n1 = n1, n0
        return self.node_xy[n0], self.node_xy[n1], int(self.edge_seg[e]), -1 if back else 1

    def to_json(self):
        return {
            "n_double_points": len(self.vertices),
            "faces": [
                {
                    "index": f.index,
                    "winding": f.winding,
                    "bounded": f.bounded,
                    "euler_char": f.euler_char,
                    "sample_point": [float(x) for x in f.sample_point],
                    "area": f.area,
                }
                for f in self.faces
            ],
        }


def build_arrangement(curve, tol=DEFAULT_TOL, check=True):
    dps = double_points(curve, tol, check=check)
    v = curve.vertices
    N = len(v)
    n = len(dps)

    # walk the curve, inserting crossing nodes on each segment
    per_seg = [[] for _ in range(N)]
    for k, dp in enumerate(dps):
        for seg, t in zip(dp.segments, dp.seg_params):
            per_seg[seg].append((t, N + k))
    walk_nodes = []
    walk_seg = []
    walk_t = []
    for s in range(N):
        walk_nodes.append(s)
        walk_seg.append(s)
        walk_t.append(0.0)
        for t, node in sorted(per_seg[s]):
            walk_nodes.append(node)
            walk_seg.append(s)
            walk_t.append(t)
    walk_nodes = np.array(walk_nodes)
    K = len(walk_nodes)
    node_xy = np.vstack([v, np.array([dp.position for dp in dps]).reshape(-1, 2)])
    edge_nodes = np.column_stack([walk_nodes, np.roll(walk_nodes, -1)])
    edge_seg = np.array(walk_seg)
    t1 = np.roll(np.array(walk_t), -1)
    t1[t1 == 0.0] = 1.0  # edge ends at the next polyline vertex
    edge_t = np.column_stack([walk_t, t1])

    # half-edge h: 2e forward (along the curve), 2e+1 backward
    he_from = np.empty(2 * K, dtype=int)
    he_to = np.empty(2 * K, dtype=int)
    he_from[0::2], he_to[0::2] = edge_nodes[:, 0], edge_nodes[:, 1]
    he_from[1::2], he_to[1::2] = edge_nodes[:, 1], edge_nodes[:, 0]
    d = node_xy[he_to] - node_xy[he_from]
    he_ang = np.arctan2(d[:, 1], d[:, 0])

    # next(h): at the head of h, the outgoing half-edge just clockwise of twin(h)
    twin = np.arange(2 * K) ^ 1
    nxt = np.empty(2 * K, dtype=int)
    # vertex nodes have degree 2: the only other outgoing half-edge
    out_of = {}
    order = np.argsort(he_from, kind="stable")
    starts = np.searchsorted(he_from[order], np.arange(len(node_xy)))
    ends = np.searchsorted(he_from[order], np.arange(len(node_xy)), side="right")
    for node in range(len(node_xy)):
        hs = order[starts[node]:ends[node]]
        out_of[node] = hs[np.argsort(he_ang[hs])]
    for h in range(2 * K):
        hs = out_of[he_to[h]]
        if len(hs) == 2:
            nxt[h] = hs[0] if hs[1] == twin[h] else hs[1]
        else:
            pos = int(np.flatnonzero(hs == twin[h])[0])
            nxt[h] = hs[pos - 1]

    he_face = -np.ones(2 * K, dtype=int)
    cycles = []
    for h0 in range(2 * K):
        if he_face[h0] >= 0:
            continue
        cyc = []
        h = h0
        while he_face[h] < 0:
            he_face[h] = len(cycles)
            cyc.append(h)
            h = nxt[h]
        cycles.append(cyc)

    seg_a, seg_b = curve.segments
    areas = []
    for cyc in cycles:
        p = node_xy[he_from[cyc]]
        q = node_xy[he_to[cyc]]
        areas.append(0.5 * float(np.sum(_cross(p, q))))
    outer = int(np.argmin(areas))
    if sum(1 for ar in areas if ar < 0) != 1:
        raise CurveError("expected exactly one clockwise (outer) boundary cycle")

    faces = []
    for fi, cyc in enumerate(cycles):
        bounded = fi != outer
        if bounded:
            sample = _face_sample(cyc, he_from, he_to, node_xy, edge_seg, seg_a, seg_b)
            w = winding_number(curve, sample, eps=0.0)
        else:
            sample = _outside_point(curve)
            w = 0
        faces.append(Face(fi, w, bounded, 1 if bounded else 0, sample, [], cyc, abs(areas[fi])))

    # adjacent faces differ by one: left of the curve = right + 1
    wl = np.array([faces[he_face[2 * e]].winding for e in range(K)])
    wr = np.array([faces[he_face[2 * e + 1]].winding for e in range(K)])
    if not np.all(wl - wr == 1):
        raise CurveError("face windings are inconsistent across an edge")

    # arcs between consecutive double points
    is_cross = walk_nodes >= N
    edge_arc = np.zeros(K, dtype=int)
    arcs = []
    if n:
        first = int(np.flatnonzero(is_cross)[0])
        arc = -1
        for step in range(K):
            e = (first + step) % K
            if is_cross[e]:
                arc += 1
                arcs.append({"start": int(walk_nodes[e] - N), "end": None, "edges": []})
            arcs[arc]["edges"].append(e)
            arcs[arc]["end"] = int(walk_nodes[(e + 1) % K] - N) if is_cross[(e + 1) % K] else None
            edge_arc[e] = arc
    else:
        arcs.append({"start": None, "end": None, "edges": list(range(K))})
    for f in faces:
        seen = []
        for h in f.halfedges:
            item = (int(edge_arc[h // 2]), -1 if h % 2 else 1)
            if item not in seen:
                seen.append(item)
        f.boundary_arcs = seen

    return CurveArrangement(
        curve=curve,
        vertices=dps,
        edges=arcs,
        faces=faces,
        node_xy=node_xy,
        edge_seg=edge_seg,
        edge_t=edge_t,
        edge_nodes=edge_nodes,
        he_face=he_face,
        edge_arc=edge_arc,
        crossing_nodes=np.arange(N, N + n),
    )


def _outside_point(curve):
    v = curve.vertices
    hi = v.max(axis=0)
    return hi + 0.25 * max(curve.diameter, 1e-12)


def _face_sample(cyc, he_from, he_to, node_xy, edge_seg, seg_a, seg_b):
    """A point inside the face to the left of its longest boundary half-edge."""
    p = node_xy[he_from[cyc]]
    q = node_xy[he_to[cyc]]
    lens = np.hypot(*(q - p).T)
    k = int(np.argmax(lens))
    m = 0.5 * (p[k] + q[k])
    t = (q[k] - p[k]) / lens[k]
    nrm = np.array([-t[1], t[0]])
    seg = edge_seg[cyc[k] // 2]
    dist = point_segment_distance(m, seg_a, seg_b)
    dist[seg] = np.inf
    delta = 0.5 * min(dist.min(), 0.5 * lens[k])
    return m + delta * nrm


def face_windings_by_propagation(arr):
    """Face windings from the unbounded face by crossing edges (+1 to the left)."""
    K = len(arr.edge_nodes)
    nf = len(arr.faces)
    adj = [[] for _ in range(nf)]
    for e in range(K):
        fl, fr = arr.he_face[2 * e], arr.he_face[2 * e + 1]
        adj[fr].append((fl, 1))
        adj[fl].append((fr, -1))
    w = [None] * nf
    start = arr.unbounded.index
    w[start] = 0
    stack = [start]
    while stack:
        f = stack.pop()
        for g, dw in adj[f]:
            if w[g] is None:
                w[g] = w[f] + dw
                stack.append(g)
    return w


def turning_parity_ok(curve):
    """Whitney parity: rotation number = number of double points + 1 (mod 2)."""
    return (rotation_number(curve) - len(double_points(curve, check=False)) - 1) % 2 == 0


# -- files ------------------------------------------------------------------------


def save_curve(curve, path):
    """CSV with an x,y header; the closing segment is implicit."""
    np.savetxt(path, curve.vertices, delimiter=",", header="x,y", comments="", fmt="%.17g")


def load_curve(path):
    """Read a curve from .npy, .json ({"vertices": [[x, y], ...]}) or CSV."""
    path = str(path)
    if path.endswith(".npy"):
        return PolyCurve(np.load(path))
    if path.endswith(".json"):
        import json

        with open(path) as fh:
            return PolyCurve(np.asarray(json.load(fh)["vertices"], float))
    with open(path) as fh:
        first = fh.readline()
    skip = 0 if first.strip() and first.strip()[0] in "-+.0123456789" else 1
    return PolyCurve(np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2))
