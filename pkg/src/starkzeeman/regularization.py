"""Levi-Civita and Moser regularization of planar Stark-Zeeman systems.

Complex notation throughout: q = v^2, p = u / (2 conj(v)).  With the
magnetic potential A(q) the regularized Hamiltonian is

    H_c(v, u) = 1/2 |u - 2 conj(v) A(v^2)|^2 - 4 c |v|^2 + 4 |v|^2 V_1(v^2) - 4 k0,

which equals 4|v|^2 (H(L(v, u)) - c) off the collision fibre; k0 is the
coupling of the Coulomb term at the origin (1 for the hydrogen-type
systems).  Regularized time tau relates to physical time by dt = 4|v|^2 dtau.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import IntegrationError, SystemSpec


class CollisionError(ValueError):
    pass


class PreconditionError(ValueError):
    pass


def _c(x):
    x = np.asarray(x, float)
    return x[..., 0] + 1j * x[..., 1]


def _r(z):
    z = np.asarray(z, complex)
    return np.stack([z.real, z.imag], axis=-1)


@dataclass(frozen=True)
class RegPhaseState:
    v: np.ndarray
    u: np.ndarray
    tau: float = 0.0

    @classmethod
    def of(cls, v, u, tau=0.0):
        return cls(np.asarray(v, float), np.asarray(u, float), float(tau))


@dataclass(frozen=True)
class GaugeChoice:
    """Symmetric gauge for a constant field, A(q) = (B/2) (q2, -q1).

    With B_ij = dA_j/dq_i - dA_i/dq_j this gives the force B J qdot of
    Newton's equation (positive B points along -q3).
    """

    B: float
    center: tuple = (0.0, 0.0)

    def A(self, q):
        q = np.asarray(q, float) - np.asarray(self.center)
        return 0.5 * self.B * np.stack([q[..., 1], -q[..., 0]], axis=-1)

    def curl(self, q, h=1e-6):
        q = np.asarray(q, float)
        ex, ey = np.array([h, 0.0]), np.array([0.0, h])
        dAy_dx = (self.A(q + ex)[..., 1] - self.A(q - ex)[..., 1]) / (2 * h)
        dAx_dy = (self.A(q + ey)[..., 0] - self.A(q - ey)[..., 0]) / (2 * h)
        return dAx_dy - dAy_dx

    @classmethod
    def symmetric(cls, sys: SystemSpec):
        return cls(sys.magnetic_B())


# -- the Levi-Civita map ----------------------------------------------------------------


def lc_map(v, u):
    """(v, u) -> (q, p) = (v^2, u / 2 conj(v))."""
    vc, uc = _c(v), _c(u)
    if np.any(vc == 0):
        raise CollisionError("v = 0 is the collision fibre")
    return _r(vc * vc), _r(uc / (2 * np.conj(vc)))


def lc_inverse(q, p, ref=None):
    """Branch of the inverse closest to ref (principal root otherwise)."""
    qc, pc = _c(q), _c(p)
    v = np.sqrt(qc)
    if ref is not None:
        flip = np.abs(v - _c(ref)) > np.abs(v + _c(ref))
        v = np.where(flip, -v, v)
    return _r(v), _r(2 * np.conj(v) * pc)


def lc_jacobian(v, u):
    """Real 4x4 Jacobian of (v, u) -> (q, p), by complex differentiation."""
    v1, v2 = v
    vc, uc = _c(v), _c(u)
    # q = v^2: holomorphic
    dq = 2 * vc
    Jq = np.array([[dq.real, -dq.imag], [dq.imag, dq.real]])
    # p = u / (2 conj v): holomorphic in u, antiholomorphic in v
    a = 1 / (2 * np.conj(vc))
    Jpu = np.array([[a.real, -a.imag], [a.imag, a.real]])
    b = -uc / (2 * np.conj(vc) ** 2)  # derivative w.r.t. conj(v)
    Jpv = np.array([[b.real, b.imag], [b.imag, -b.real]])
    out = np.zeros((4, 4))
    out[:2, :2] = Jq
    out[2:, :2] = Jpv
    out[2:, 2:] = Jpu
    return out


def reg_A(gauge: GaugeChoice, v):
    """The regularized vector potential 2 conj(v) A(v^2)."""
    vc = _c(v)
    return _r(2 * np.conj(vc) * _c(gauge.A(_r(vc * vc))))


def reg_potential(sys: SystemSpec, c, v):
    vc = _c(v)
    n2 = np.abs(vc) ** 2
    return -4 * c * n2 + 4 * n2 * sys.V1(_r(vc * vc)) - 4 * sys.k0


def lc_hamiltonian(sys: SystemSpec, gauge: GaugeChoice, c, v, u):
    w = np.asarray(u, float) - reg_A(gauge, v)
    return 0.5 * np.sum(w * w, axis=-1) + reg_potential(sys, c, v)


def physical_times_four(sys, gauge, c, v, u):
    """4|v|^2 (H o L - c) evaluated in physical coordinates (oracle for lc_hamiltonian)."""
    q, p = lc_map(v, u)
    w = p - gauge.A(q)
    H = 0.5 * np.sum(w * w, axis=-1) + sys.V(q)
    return 4 * np.sum(np.asarray(v, float) ** 2, axis=-1) * (H - c)


def reg_hill_membership(sys, c, v):
    return "inside" if reg_potential(sys, c, v) <= 0 else "outside"


# -- regularized flow -------------------------------------------------------------------------


def _reg_rhs(sys, gauge, c):
    if gauge.center != (0.0, 0.0):
        raise NotImplementedError("regularized flow uses the symmetric gauge about the origin")
    B = float(gauge.B)
    (Q11, Q12), (Q21, Q22) = np.asarray(sys._Q, float)
    cx, cy = map(float, sys._center)
    lx, ly = map(float, sys._lin)
    far = [(float(k), float(s[0]), float(s[1])) for k, s in sys._coulomb if s.any()]
    c = float(c)

    # scalar arithmetic: this is called ~10^4 times per orbit
    def rhs(tau, y):
        v1, v2, u1, u2 = y[0], y[1], y[2], y[3]
        n2 = v1 * v1 + v2 * v2
        q1 = v1 * v1 - v2 * v2
        q2 = 2 * v1 * v2
        # V1 and its gradient
        d1, d2 = q1 - cx, q2 - cy
        g1 = Q11 * d1 + Q12 * d2 + lx
        g2 = Q21 * d1 + Q22 * d2 + ly
        V1 = 0.5 * (d1 * (Q11 * d1 + Q12 * d2) + d2 * (Q21 * d1 + Q22 * d2)) + lx * q1 + ly * q2
        for k, sx, sy in far:
            e1, e2 = q1 - sx, q2 - sy
            r = math.sqrt(e1 * e1 + e2 * e2)
            V1 -= k / r
            kr3 = k / (r * r * r)
            g1 += kr3 * e1
            g2 += kr3 * e2
        # symmetric gauge about the origin: 2 conj(v) A(v^2) = -i B |v|^2 v
        w1 = u1 - B * n2 * v2
        w2 = u2 + B * n2 * v1
        # D(Areg)^T w
        a1 = B * (2 * v1 * v2 * w1 - (2 * v1 * v1 + n2) * w2)
        a2 = B * ((2 * v2 * v2 + n2) * w1 - 2 * v1 * v2 * w2)
        # 2 conj(v) (g1 + i g2)
        gv1 = 2 * (v1 * g1 + v2 * g2)
        gv2 = 2 * (v1 * g2 - v2 * g1)
        f = -8 * c + 8 * V1
        return np.array([w1, w2, a1 - f * v1 - 4 * n2 * gv1, a2 - f * v2 - 4 * n2 * gv2, 4 * n2])

    return rhs


@dataclass
class RegTrajectory:
    tau: np.ndarray
    v: np.ndarray
    u: np.ndarray
    t: np.ndarray  # physical time
    hamiltonian: np.ndarray
    sol: object = None

    @property
    def q(self):
        z = _c(self.v)
        return _r(z * z)

    def drift(self):
        return float(np.max(np.abs(self.hamiltonian - self.hamiltonian[0])))

    def to_csv(self, fh=None):
        buf = fh or io.StringIO()
        buf.write("# physical time t with dt = 4|v|^2 dtau\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "v1", "v2", "u1", "u2", "q1", "q2", "t"])
        q = self.q
        for k in range(len(self.tau)):
            w.writerow([f"{x:.17g}" for x in (self.tau[k], *self.v[k], *self.u[k], *q[k], self.t[k])])
        return buf.getvalue() if fh is None else None


def integrate_regularized(sys, gauge, c, s0: RegPhaseState, tau_span, rtol=1e-13, atol=1e-13,
                          n_out=None, shell_tol=1e-8, events=None, t0=0.0) -> RegTrajectory:
    """Energy-zero flow of H_c; passes smoothly through v = 0."""
    h0 = float(lc_hamiltonian(sys, gauge, c, s0.v, s0.u))
    scale = 1.0 + float(np.sum(s0.u ** 2))
    if abs(h0) > shell_tol * scale:
        raise PreconditionError(f"initial state is off the zero level: H_c = {h0:.3e}")
    y0 = np.concatenate([s0.v, s0.u, [t0]])
    a, b = (s0.tau, s0.tau + tau_span) if np.isscalar(tau_span) else tau_span
    t_eval = None if n_out is None else np.linspace(a, b, n_out)
    sol = solve_ivp(_reg_rhs(sys, gauge, c), (a, b), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, t_eval=t_eval, events=events)
    if sol.status == -1:
        raise IntegrationError(sol.message)
    v, u = sol.y[:2].T, sol.y[2:4].T
    traj = RegTrajectory(sol.t, v, u, sol.y[4], lc_hamiltonian(sys, gauge, c, v, u), sol)
    traj.t_events = sol.t_events
    traj.y_events = sol.y_events
    return traj


def regularize_state(sys, gauge, c, q, qdot, ref=None):
    """Physical (q, qdot) -> (v, u) with p = qdot + A(q)."""
    p = np.asarray(qdot, float) + gauge.A(q)
    v, u = lc_inverse(q, p, ref)
    return RegPhaseState(v, u)


def collision_state(sys, gauge, c, angle=0.0):
    """A state on the collision fibre v = 0 of the zero level: |u| = sqrt(8 k0)."""
    r = math.sqrt(8 * sys.k0)
    return RegPhaseState(np.zeros(2), r * np.array([math.cos(angle), math.sin(angle)]))


# -- Moser regularization --------------------------------------------------------------------


@dataclass(frozen=True)
class MoserChart:
    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("sphere radius must be positive")


def moser_stereographic(chart: MoserChart, p):
    p = np.asarray(p, float)
    r = chart.r
    n2 = np.sum(p * p, axis=-1)
    x = 2 * r * r * p / (n2 + r * r)[..., None]
    xn = r * (n2 - r * r) / (n2 + r * r)
    return np.concatenate([x, xn[..., None]], axis=-1)


def moser_transition(chart: MoserChart, p):
    p = np.asarray(p, float)
    n2 = np.sum(p * p, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("p = 0 is outside the transition chart")
    return chart.r ** 2 * p / n2[..., None]


def moser_transition_jacobian(chart, p):
    p = np.asarray(p, float)
    n2 = p @ p
    return chart.r ** 2 / n2 ** 2 * (n2 * np.eye(len(p)) - 2 * np.outer(p, p))


def moser_cotangent_lift(chart: MoserChart, p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    n2 = np.sum(p * p, axis=-1)
    if np.any(n2 == 0):
        raise ValueError("p = 0 is outside the transition chart")
    pt = chart.r ** 2 * p / n2[..., None]
    dot = np.sum(p * q, axis=-1)
    qt = (n2[..., None] * q - 2 * dot[..., None] * p) / chart.r ** 2
    return pt, qt


def stereographic_metric_factor(chart, p):
    return 4 * chart.r ** 4 / (np.sum(np.asarray(p) ** 2) + chart.r ** 2) ** 2


def moser_K_c(sys, gauge, chart, c, p, q):
    """K_c o Psi_r at (p, q): |q~| (H(q~, p~) - c) with (p~, q~) = Psi_r(p, q).

    The point q~ is the physical position and p~ the physical momentum.
    At p = 0 the continuous extension r^2 |q| / 2 - k0 is returned.
    """
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    r = chart.r
    nq = float(np.linalg.norm(q))
    n2 = float(p @ p)
    if n2 == 0.0:
        return r * r * nq / 2 - sys.k0
    pt, qt = moser_cotangent_lift(chart, p, q)
    nqt = n2 * nq / r ** 2
    Aq = gauge.A(qt)
    # |q~| |p~ - A|^2 / 2 with |q~||p~|^2 = r^2 |q| kept exact
    kin = r * r * nq / 2 - nqt * float(pt @ Aq) + nqt * float(Aq @ Aq) / 2
    return kin + nqt * (float(sys.V1(qt)) - c) - sys.k0


def moser_zero_level_radius(sys, gauge, chart, c, p_dir, p_norm, q_dir):
    """|q| on the zero level of K_c o Psi_r along fixed directions of p and q."""
    from scipy.optimize import brentq

    p = p_norm * np.asarray(p_dir, float) / np.linalg.norm(p_dir)
    e = np.asarray(q_dir, float) / np.linalg.norm(q_dir)
    f = lambda s: moser_K_c(sys, gauge, chart, c, p, s * e)
    hi = 4.0 * sys.k0 / chart.r ** 2 + 1.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-15)
