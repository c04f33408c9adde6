"""Planar Stark-Zeeman systems: catalog, Newton's equation, Hill's regions.

Every catalog potential has the form

    V(q) = - sum_i k_i / |q - s_i| + 1/2 (q - c)^T Q (q - c) + l . q

with a constant magnetic field B, so potentials, gradients and Hessians are
evaluated by one routine.  The Coulomb term sitting at the origin (if any)
is V_0 scaled by its coupling k0; everything else is V_1.

States are (q, qdot) and the equation of motion is qddot = B J qdot - grad V.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

J = np.array([[0.0, -1.0], [1.0, 0.0]])

CATALOG = (
    "kepler", "stark", "zeeman", "diamagnetic_kepler", "rotating_kepler", "rtbp",
    "hill", "frozen_hill", "frozen_hill_centrifugal", "euler", "lagrange",
)

DEFAULTS = {
    "kepler": {},
    "stark": {"E": 0.1},
    "zeeman": {"B": 0.3},
    "diamagnetic_kepler": {"B": 0.3},
    "rotating_kepler": {"omega": 1.0},
    "rtbp": {"mu": 0.5, "M": 1.0, "R": 1.0},
    "hill": {"omega": 1.0},
    "frozen_hill": {},
    "frozen_hill_centrifugal": {},
    "euler": {"mu": 0.5, "M": 1.0, "R": 1.0},
    "lagrange": {"mu": 0.5, "M": 1.0, "R": 1.0, "a": 0.1},
}


class ConfigError(ValueError):
    pass


class SingularityError(ValueError):
    pass


class RegularityError(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


class CloseApproach(RuntimeError):
    """Raised when a trajectory enters the handoff disk around a Coulomb centre."""

    def __init__(self, state, center):
        super().__init__(f"close approach to {center} at t={state.t:.6g}")
        self.state = state
        self.center = center


@dataclass(frozen=True)
class PhaseState:
    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    @classmethod
    def of(cls, q, qdot, t=0.0):
        return cls(np.asarray(q, float), np.asarray(qdot, float), float(t))


@dataclass(frozen=True, eq=False)
class SystemSpec:
    catalog_id: str
    params: dict = field(default_factory=dict)
    c1: float | None = None

    # --- structure of the potential -------------------------------------------
    def __post_init__(self):
        if self.catalog_id not in CATALOG:
            raise ConfigError(f"unknown catalog id {self.catalog_id!r}")
        full = dict(DEFAULTS[self.catalog_id])
        unknown = set(self.params) - set(full)
        if unknown:
            raise ConfigError(f"unexpected parameters for {self.catalog_id}: {sorted(unknown)}")
        full.update(self.params)
        object.__setattr__(self, "params", full)
        coul, Q, c, lin, B = _structure(self.catalog_id, full)
        object.__setattr__(self, "_coulomb", coul)
        object.__setattr__(self, "_Q", Q)
        object.__setattr__(self, "_center", c)
        object.__setattr__(self, "_lin", lin)
        object.__setattr__(self, "_B", B)
        if self.c1 is None:
            object.__setattr__(self, "c1", _default_c1(self))

    @property
    def singular_points(self):
        return [s for _, s in self._coulomb]

    @property
    def k0(self) -> float:
        """Coupling of the Coulomb term at the origin (0 if there is none)."""
        for k, s in self._coulomb:
            if not s.any():
                return k
        return 0.0

    @property
    def domain(self) -> str:
        pts = ", ".join(f"({s[0]:g}, {s[1]:g})" for s in self.singular_points)
        return f"R^2 minus {{{pts}}}"

    @property
    def length_scale(self) -> float:
        if self.catalog_id in ("rtbp", "euler", "lagrange"):
            return float(self.params["R"])
        return 1.0

    @property
    def r_switch(self) -> float:
        return 0.05 * self.length_scale

    @property
    def period_scale(self) -> float:
        if self.catalog_id in ("rtbp", "euler", "lagrange"):
            p = self.params
            return 2 * math.pi * math.sqrt(p["R"] ** 3 / p["M"])
        return 2 * math.pi

    def with_params(self, **kw):
        return SystemSpec(self.catalog_id, {**self.params, **kw})

    def reversed_field(self):
        """Same potential, magnetic field B -> -B (for time reversal)."""
        out = SystemSpec(self.catalog_id, self.params, self.c1)
        object.__setattr__(out, "_B", -self._B)
        return out

    def to_json(self):
        return json.dumps({"catalog_id": self.catalog_id, "params": self.params, "c1": self.c1}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else text
        if "catalog_id" not in d:
            raise ConfigError("system config needs a catalog_id")
        return cls(d["catalog_id"], d.get("params", {}), d.get("c1"))

    # --- evaluation -------------------------------------------------------------
    def _check(self, q, eps=0.0):
        for _, s in self._coulomb:
            r = np.linalg.norm(q - s, axis=-1)
            if np.any(r <= eps):
                raise SingularityError(f"q at singular point {tuple(s)}")

    def V(self, q):
        q = np.asarray(q, float)
        self._check(q)
        out = 0.5 * np.einsum("...i,ij,...j->...", q - self._center, self._Q, q - self._center)
        out = out + q @ self._lin
        for k, s in self._coulomb:
            out = out - k / np.linalg.norm(q - s, axis=-1)
        return out

    def V1(self, q):
        """V minus the Coulomb term at the origin."""
        q = np.asarray(q, float)
        out = 0.5 * np.einsum("...i,ij,...j->...", q - self._center, self._Q, q - self._center)
        out = out + q @ self._lin
        for k, s in self._coulomb:
            if s.any():
                out = out - k / np.linalg.norm(q - s, axis=-1)
        return out

    def grad_V(self, q):
        q = np.asarray(q, float)
        self._check(q)
        return self._grad(q, origin=True)

    def grad_V1(self, q):
        return self._grad(np.asarray(q, float), origin=False)

    def _grad(self, q, origin):
        g = (q - self._center) @ self._Q.T + self._lin
        for k, s in self._coulomb:
            if not origin and not s.any():
                continue
            d = q - s
            r = np.linalg.norm(d, axis=-1)[..., None]
            g = g + k * d / r ** 3
        return g

    def hess_V(self, q):
        q = np.asarray(q, float)
        H = np.array(self._Q, dtype=float)
        for k, s in self._coulomb:
            d = q - s
            r = np.linalg.norm(d)
            H = H + k * (np.eye(2) / r ** 3 - 3 * np.outer(d, d) / r ** 5)
        return H

    def magnetic_B(self, q=None) -> float:
        return float(self._B)

    def A(self, q):
        """Symmetric gauge (B/2)(q2, -q1); the sign matches the force B J qdot."""
        q = np.asarray(q, float)
        return 0.5 * self._B * np.stack([q[..., 1], -q[..., 0]], axis=-1)

    def energy(self, q, qdot):
        qdot = np.asarray(qdot, float)
        return 0.5 * np.sum(qdot * qdot, axis=-1) + self.V(q)

    def angular_momentum(self, q, qdot):
        """q x qdot - (B/2)|q|^2, conserved for rotationally symmetric systems."""
        q = np.asarray(q, float)
        qdot = np.asarray(qdot, float)
        return q[..., 0] * qdot[..., 1] - q[..., 1] * qdot[..., 0] - 0.5 * self._B * np.sum(q * q, axis=-1)

    def rhs(self, t, y):
        q, qd = y[:2], y[2:]
        acc = self._B * (J @ qd) - self._grad(q, origin=True)
        return np.concatenate([qd, acc])


def _structure(cid, p):
    Z = np.zeros((2, 2))
    o = np.zeros(2)
    origin = [(1.0, np.zeros(2))]
    if cid == "kepler":
        return origin, Z, o, o, 0.0
    if cid == "stark":
        return origin, Z, o, np.array([-p["E"], 0.0]), 0.0
    if cid == "zeeman":
        return origin, Z, o, o, p["B"]
    if cid == "diamagnetic_kepler":
        # planar reduction at p_theta = 0: no magnetic term left
        return origin, np.diag([p["B"] ** 2 / 4, 0.0]), o, o, 0.0
    if cid == "rotating_kepler":
        w = p["omega"]
        return origin, -w * w * np.eye(2), o, o, 2 * w
    if cid == "rtbp":
        mu, M, R = p["mu"], p["M"], p["R"]
        w = math.sqrt(M / R ** 3)
        coul = [(mu * M, np.zeros(2)), ((1 - mu) * M, np.array([R, 0.0]))]
        return coul, -w * w * np.eye(2), np.array([R * (1 - mu), 0.0]), o, 2 * w
    if cid == "hill":
        w = p["omega"]
        return origin, np.diag([-3 * w * w, 0.0]), o, o, 2 * w
    if cid == "frozen_hill":
        return origin, np.diag([-3.0, 0.0]), o, o, 0.0
    if cid == "frozen_hill_centrifugal":
        return origin, np.diag([-4.0, -1.0]), o, o, 0.0
    if cid == "euler":
        mu, M, R = p["mu"], p["M"], p["R"]
        coul = [(mu * M, np.array([-R * (1 - mu), 0.0])), ((1 - mu) * M, np.array([R * mu, 0.0]))]
        return coul, Z, o, o, 0.0
    if cid == "lagrange":
        mu, M, R, a = p["mu"], p["M"], p["R"], p["a"]
        coul = [(mu * M, np.array([-R / 2, 0.0])), ((1 - mu) * M, np.array([R / 2, 0.0]))]
        return coul, 2 * a * np.eye(2), o, o, 0.0
    raise ConfigError(cid)


def _default_c1(sys):
    """Escape threshold / first critical value where it is known in closed form."""
    cid, p = sys.catalog_id, sys.params
    if cid in ("kepler", "zeeman"):
        return 0.0
    if cid == "stark":
        return -2 * math.sqrt(p["E"]) if p["E"] > 0 else 0.0
    if cid == "diamagnetic_kepler":
        return 0.0
    if cid == "rotating_kepler":
        return -1.5 * p["omega"] ** (2 / 3)
    if cid in ("hill", "frozen_hill"):
        w = p.get("omega", 1.0)
        return -1.5 * 3 ** (1 / 3) * w ** (2 / 3)
    if cid == "frozen_hill_centrifugal":
        return -1.5 * 4 ** (1 / 3)
    if cid == "rtbp":
        return float(sys.V(np.array([lagrange_l1(sys), 0.0])))
    if cid in ("euler", "lagrange"):
        # saddle between the two centres
        (_, a), (_, b) = sys._coulomb
        span = b[0] - a[0]
        f = lambda x: sys.grad_V(np.array([x, 0.0]))[0]
        x = brentq(f, a[0] + 1e-6 * span, b[0] - 1e-6 * span)
        return float(sys.V(np.array([x, 0.0])))
    return None


def lagrange_l1(sys):
    """Collinear critical point between the origin body and the second primary."""
    R = sys.params["R"]
    f = lambda x: sys.grad_V(np.array([x, 0.0]))[0]
    return brentq(f, 1e-6 * R, R * (1 - 1e-6))


def make_system(catalog_id, **params):
    return SystemSpec(catalog_id, params)


def demo_state(sys, r=None):
    """A bounded test start: near-circular Kepler speed around the first Coulomb centre."""
    k, s = sys._coulomb[0]
    if r is None:
        # small enough to start below c1 where c1 is finite
        r = {"frozen_hill": 0.2, "hill": 0.2, "rotating_kepler": 0.25, "stark": 0.25}.get(sys.catalog_id, 0.4)
    rr = r * sys.length_scale
    q = s + np.array([rr, 0.0]) if sys.catalog_id != "euler" else s + np.array([0.0, rr])
    d = q - s
    v = math.sqrt(k / rr) * np.array([-d[1], d[0]]) / rr
    return PhaseState(q, v)


def estimate_critical_values(sys, box, n=401):
    """Grid estimate of critical values of V (sign changes of both gradient components)."""
    (x0, x1), (y0, y1) = box
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    Q = np.stack([X, Y], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = sys._grad(Q, origin=True)
    out = []
    for i in range(n - 1):
        for j in range(n - 1):
            cell = g[i : i + 2, j : j + 2]
            if not np.all(np.isfinite(cell)):
                continue
            if np.ptp(np.sign(cell[..., 0])) > 0 and np.ptp(np.sign(cell[..., 1])) > 0:
                out.append(float(sys.V(Q[i, j])))
    return sorted(set(np.round(out, 6)))


# -- trajectories -----------------------------------------------------------------


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    energy_log: np.ndarray
    sol: object = None  # dense output

    @property
    def samples(self):
        return [PhaseState(self.q[k], self.qdot[k], self.t[k]) for k in range(len(self.t))]

    def energy_drift(self, relative=True):
        e0 = self.energy_log[0]
        d = np.max(np.abs(self.energy_log - e0))
        return d / max(abs(e0), 1e-300) if relative else d

    def to_csv(self, fh=None):
        buf = fh or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "q1", "q2", "qdot1", "qdot2", "E"])
        for k in range(len(self.t)):
            w.writerow([f"{x:.17g}" for x in (self.t[k], *self.q[k], *self.qdot[k], self.energy_log[k])])
        return buf.getvalue() if fh is None else None


def integrate(sys: SystemSpec, s0: PhaseState, T: float, rtol=1e-13, atol=1e-13, n_out=None,
              r_switch=None, max_step=np.inf, events=None) -> Trajectory:
    """Integrate qddot = B J qdot - grad V with DOP853 and dense output.

    Raises CloseApproach (carrying the crossing state) when the orbit comes
    within r_switch of a Coulomb centre; pass r_switch=0 to disable.
    """
    sys._check(s0.q)
    y0 = np.concatenate([s0.q, s0.qdot])
    if T == 0:
        e = np.array([sys.energy(s0.q, s0.qdot)])
        return Trajectory(np.array([s0.t]), s0.q[None], s0.qdot[None], e)
    rs = sys.r_switch if r_switch is None else r_switch
    evs = list(events or [])
    centers = sys.singular_points if rs > 0 else []
    for s in centers:
        def ev(t, y, s=s):
            return np.linalg.norm(y[:2] - s) - rs
        ev.terminal = True
        ev.direction = -1
        evs.append(ev)
    t_eval = None if n_out is None else np.linspace(s0.t, s0.t + T, n_out)
    sol = solve_ivp(sys.rhs, (s0.t, s0.t + T), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, t_eval=t_eval, events=evs or None, max_step=max_step)
    if sol.status == -1:
        raise IntegrationError(sol.message)
    nuser = len(events or [])
    if sol.status == 1:
        for k, s in enumerate(centers):
            if len(sol.t_events[nuser + k]):
                y = sol.y_events[nuser + k][0]
                raise CloseApproach(PhaseState(y[:2], y[2:], sol.t_events[nuser + k][0]), tuple(s))
    q, qd = sol.y[:2].T, sol.y[2:].T
    traj = Trajectory(sol.t, q, qd, sys.energy(q, qd), sol)
    traj.t_events = sol.t_events[:nuser] if nuser else []
    traj.y_events = sol.y_events[:nuser] if nuser else []
    return traj


# -- Hill's region -------------------------------------------------------------------


def hill_membership(sys, c, q, band=1e-12):
    v = float(sys.V(q))
    scale = max(1.0, abs(c))
    if abs(v - c) <= band * scale:
        return "boundary"
    return "inside" if v < c else "outside"


def _default_box(sys, c):
    L = sys.length_scale
    if sys.catalog_id in ("kepler", "stark", "zeeman", "diamagnetic_kepler") and c < 0:
        r = min(4.0 / abs(c), 50.0)
        return (-r, r), (-r, r)
    return (-2 * L, 2 * L), (-2 * L, 2 * L)


def zero_velocity_contour(sys, c, resolution=401, box=None, check=True):
    """Contours of {V = c} by marching squares."""
    from skimage import measure

    (x0, x1), (y0, y1) = box or _default_box(sys, c)
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    X, Y = np.meshgrid(xs, ys)
    Q = np.stack([X, Y], axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = sys.V1(Q) - c
        for k, s in sys._coulomb:
            if not s.any():
                F = F - k / np.linalg.norm(Q - s, axis=-1)
    F = np.where(np.isfinite(F), F, -1e300)
    out = []
    for cont in measure.find_contours(F, 0.0):
        pts = np.column_stack([np.interp(cont[:, 1], np.arange(resolution), xs),
                               np.interp(cont[:, 0], np.arange(resolution), ys)])
        if len(pts) < 4:
            continue
        closed = np.allclose(pts[0], pts[-1])
        if closed:
            pts = pts[:-1]
        if check:
            g = np.linalg.norm(sys.grad_V(pts), axis=-1)
            h = max(xs[1] - xs[0], ys[1] - ys[0])
            # a contour through a saddle has |grad V| ~ |hess V| h at the
            # nearest grid points; typical values are O(median)
            if np.min(g) < 2 * h / sys.length_scale * np.median(g):
                raise RegularityError(f"c={c} is too close to a critical value of V")
        out.append(Contour(pts, closed))
    return out


@dataclass
class Contour:
    vertices: np.ndarray
    closed: bool

    def as_curve(self):
        from .curves.model import PolyCurve

        return PolyCurve(self.vertices)


def bounded_component(sys, c, **kw):
    """The zero-velocity curve bounding the Hill's region component at the origin."""
    from .curves.model import winding_number

    best = None
    for cont in zero_velocity_contour(sys, c, **kw):
        if not cont.closed:
            continue
        curve = cont.as_curve()
        if winding_number(curve, (0.0, 0.0), eps=0.0) != 0:
            if best is None or curve.diameter < best.diameter:
                best = curve
    return best


def plot_orbit_svg(sys, traj, c=None, path=None, title=None):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(traj.q[:, 0], traj.q[:, 1], lw=0.8, color="k")
    if c is not None:
        pad = 0.3 * np.ptp(traj.q, axis=0).max() + 0.5
        lo = traj.q.min(axis=0) - pad
        hi = traj.q.max(axis=0) + pad
        try:
            for cont in zero_velocity_contour(sys, c, box=((lo[0], hi[0]), (lo[1], hi[1])), check=False):
                v = cont.vertices
                ax.plot(v[:, 0], v[:, 1], lw=0.6, color="tab:red")
        except RegularityError:
            pass
    for s in sys.singular_points:
        ax.plot(*s, "o", ms=3, color="tab:blue")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    buf = io.StringIO()
    fig.savefig(path or buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return None if path else buf.getvalue()
