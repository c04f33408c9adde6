"""Periodic orbits by shooting, continuation in energy, and invariance checks along families.

Orbits are integrated in Levi-Civita coordinates (v, u) with q = v^2, so
members that pass through or close to a collision with the origin body need
no special treatment.  Symmetric orbits of systems invariant under
(q1, q2, qdot1, qdot2, t) -> (q1, -q2, -qdot1, qdot2, -t) start perpendicular
to the q1-axis and close after a half period when they hit the axis
perpendicularly again.
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

from . import regularization as reg
from .curves import model
from .curves.events import detect_events
from .curves.families import FamilyReport
from .curves.invariants import invariants, j_plus_tracked
from .dynamics import IntegrationError, PhaseState, SystemSpec, integrate


class SearchFailure(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class NotGeneric(RuntimeError):
    pass


SYMMETRIC = ("kepler", "stark", "zeeman", "diamagnetic_kepler", "rotating_kepler", "rtbp", "hill",
             "frozen_hill", "frozen_hill_centrifugal", "euler", "lagrange")


@dataclass
class OrbitSolution:
    sys: SystemSpec
    energy: float
    initial: PhaseState
    period: float  # physical time
    tau_period: float  # regularized time
    symmetry: str = "reflection"
    residual: float = float("nan")
    crossings: int = 1  # axis hits per half period
    reg_initial: reg.RegPhaseState | None = None
    other_end: tuple | None = None  # (x, direction) of the crossing half a period later
    end_axis: str = "real"  # v-axis met by the lift at the half period

    def to_dict(self):
        return {
            "energy": self.energy,
            "q0": list(map(float, self.initial.q)),
            "qdot0": list(map(float, self.initial.qdot)),
            "period": self.period,
            "tau_period": None if math.isnan(self.tau_period) else self.tau_period,
            "residual": self.residual,
            "crossings": self.crossings,
            "symmetry": self.symmetry,
        }


# -- regularized symmetric shooting ----------------------------------------------------------


def _gauge(sys):
    return reg.GaugeChoice.symmetric(sys)


def perpendicular_start(sys, c, x0, direction=1):
    """(v, u) for q = (x0, 0), qdot = (0, direction * speed) on the energy level c."""
    if x0 == 0:
        raise ValueError("start at the origin")
    q = np.array([x0, 0.0])
    ke = c - float(sys.V(q))
    if ke < 0:
        raise SearchFailure(f"x0={x0} lies outside the Hill's region at c={c}")
    qd = np.array([0.0, direction * math.sqrt(2 * ke)])
    g = _gauge(sys)
    return reg.regularize_state(sys, g, c, q, qd), PhaseState(q, qd)


def _axis_residual(g, y):
    """Velocity along the v-axis being crossed, over |v'|.

    q crosses its q1-axis when v meets the real or the imaginary axis; the
    crossing is perpendicular iff v' is perpendicular to that axis.  Unlike
    qdot1 itself this stays smooth when the crossing moves through v = 0.
    """
    w = y[2:4] - reg.reg_A(g, y[:2])
    along = w[0] if abs(y[0]) >= abs(y[1]) else w[1]
    return along / max(math.hypot(w[0], w[1]), 1e-300)


def _guards(sys, r_escape, r_far):
    """Terminal events: escape from the disc of radius r_escape, approach to
    within r_far of a Coulomb centre other than the origin."""
    evs = []

    def escape(tau, y):
        return y[0] ** 2 + y[1] ** 2 - r_escape

    escape.terminal = True
    evs.append(escape)
    for k, s in sys._coulomb:
        if not s.any():
            continue

        def near(tau, y, s=s):
            q1 = y[0] ** 2 - y[1] ** 2
            q2 = 2 * y[0] * y[1]
            return math.hypot(q1 - s[0], q2 - s[1]) - r_far

        near.terminal = True
        evs.append(near)
    return evs


def half_orbit(sys, c, x0, direction=1, crossings=1, tau_max=40.0, r_escape=None, r_far=1e-3):
    """Flow from the perpendicular start to the crossings-th hit of the q1-axis.

    Returns (tau, y, gauge) at the hit with y = (v, u, t).
    """
    g = _gauge(sys)
    s0, _ = perpendicular_start(sys, c, x0, direction)
    L = sys.length_scale
    guards = _guards(sys, r_escape or 3.0 * L, r_far * L)

    def axis(tau, y):
        return y[0] * y[1]  # Im(v^2) / 2

    rhs = reg._reg_rhs(sys, g, c)
    y = np.concatenate([s0.v, s0.u, [0.0]])
    # leave the axis before looking for hits
    a = 1e-6
    y = solve_ivp(rhs, (0.0, a), y, method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    count = 0
    span = 0.25 * tau_max
    while a < tau_max:
        sol = solve_ivp(rhs, (a, min(a + span, tau_max)), y, method="DOP853", rtol=1e-13, atol=1e-13,
                        events=[axis] + guards, dense_output=True)
        if sol.status == -1:
            raise IntegrationError(sol.message)
        if sol.status == 1:
            raise SearchFailure("orbit escaped or ran into a far primary")
        te = [t for t in sol.t_events[0] if t > a + 1e-12]
        if count + len(te) >= crossings:
            t_hit = te[crossings - count - 1]
            return t_hit, sol.sol(t_hit), g
        count += len(te)
        a = sol.t[-1]
        y = sol.y[:, -1]
    raise SearchFailure(f"no {crossings} axis crossings before tau={tau_max}")


def shooting_residual(sys, c, x0, direction=1, crossings=1):
    t, y, g = half_orbit(sys, c, x0, direction, crossings)
    return _axis_residual(g, y)


def find_symmetric_orbit(sys, c, x_bracket, direction=1, crossings=1, xtol=1e-14, closure_tol=1e-8):
    a, b = x_bracket
    fa = shooting_residual(sys, c, a, direction, crossings)
    fb = shooting_residual(sys, c, b, direction, crossings)
    if fa * fb > 0:
        raise SearchFailure("bracket does not change sign", best=(a, fa) if abs(fa) < abs(fb) else (b, fb))
    x = brentq(lambda x: shooting_residual(sys, c, x, direction, crossings), a, b, xtol=xtol, rtol=1e-15,
               maxiter=200)
    sol = _finish(sys, c, x, direction, crossings)
    # a sign change across a collision or an escape is not a root
    if not sol.residual <= closure_tol * (1.0 + np.linalg.norm(sol.reg_initial.u)):
        raise SearchFailure(f"bracket holds a jump, not an orbit (closure {sol.residual:.2e})", best=sol)
    return sol


def _finish(sys, c, x, direction, crossings, t_half=None, y_half=None):
    g = _gauge(sys)
    if t_half is None:
        t_half, y_half, g = half_orbit(sys, c, x, direction, crossings)
    s0, ps = perpendicular_start(sys, c, x, direction)
    full = reg.integrate_regularized(sys, g, c, s0, 2 * t_half)
    v_end, u_end = full.v[-1], full.u[-1]
    # the lift closes up to v -> -v
    res = min(np.linalg.norm(np.concatenate([v_end - s0.v, u_end - s0.u])),
              np.linalg.norm(np.concatenate([v_end + s0.v, u_end + s0.u])))
    sol = OrbitSolution(sys, c, ps, float(full.t[-1]), 2 * t_half, "reflection", float(res), crossings, s0)
    sol.other_end = _other_end(y_half, g)
    sol.end_axis = "real" if abs(y_half[0]) >= abs(y_half[1]) else "imag"
    return sol


def _end_conditions(sys, c, x, direction, tau, axis, h=None):
    """(v on the axis, v' across it) at tau, scaled by |v'|; also d/dtau."""
    g = _gauge(sys)
    s0, _ = perpendicular_start(sys, c, x, direction)
    rhs = reg._reg_rhs(sys, g, c)
    h = h or 1e-6 * tau
    sol = solve_ivp(rhs, (0.0, tau + h), np.concatenate([s0.v, s0.u, [0.0]]), method="DOP853", rtol=1e-13,
                    atol=1e-13, dense_output=True)
    if sol.status == -1:
        raise IntegrationError(sol.message)

    def F(t):
        y = sol.sol(t)
        w = y[2:4] - reg.reg_A(g, y[:2])
        n = math.hypot(w[0], w[1])
        return (np.array([y[1], w[0]]) if axis == "real" else np.array([y[0], w[1]])) / n, y

    f, y = F(tau)
    dtau = (F(tau + h)[0] - F(tau - h)[0]) / (2 * h)
    return f, dtau, y


def correct_symmetric(sys, c, x, tau, direction, axis, crossings=1, tol=1e-12, maxiter=12):
    """Newton on (start abscissa, half period) for a symmetric orbit whose lift
    ends perpendicular to the given v-axis.

    Needs no crossing count, so it follows members whose half-period point
    moves through the collision.
    """
    z = np.array([x, tau], float)
    for _ in range(maxiter):
        f, dtau, y = _end_conditions(sys, c, z[0], direction, z[1], axis)
        if np.linalg.norm(f) < tol:
            sol = _finish(sys, c, z[0], direction, crossings, z[1], y)
            sol.end_axis = axis
            return sol
        hx = 1e-7 * max(abs(z[0]), 1e-3)
        f2, _, _ = _end_conditions(sys, c, z[0] + hx, direction, z[1], axis)
        J = np.column_stack([(f2 - f) / hx, dtau])
        try:
            step = np.linalg.solve(J, -f)
        except np.linalg.LinAlgError:
            raise SearchFailure("singular Newton matrix") from None
        # keep the start on its side of the origin and tau positive
        lam = 1.0
        while (z[0] + lam * step[0]) * z[0] <= 0 or z[1] + lam * step[1] <= 0:
            lam *= 0.5
            if lam < 1e-6:
                raise SearchFailure("Newton step leaves the domain")
        z = z + lam * step
    raise SearchFailure(f"Newton did not converge (|F| = {np.linalg.norm(f):.2e})")


def _other_end(y, g):
    """(x, direction) of the perpendicular crossing half a period later."""
    v = y[0] + 1j * y[1]
    w = (y[2] + 1j * y[3]) - complex(*reg.reg_A(g, y[:2]))
    q = v * v
    if v == 0:
        return 0.0, 1
    qd = w / (2 * np.conj(v))
    return float(q.real), 1 if qd.imag >= 0 else -1


def far_start(sol: OrbitSolution):
    """The same orbit started from its perpendicular crossing farther from the
    origin; keeps shooting away from collisions at the start point."""
    xh, dh = sol.other_end
    if abs(xh) <= abs(sol.initial.q[0]):
        return sol
    axis = "real" if sol.initial.q[0] > 0 else "imag"
    try:
        out = correct_symmetric(sol.sys, sol.energy, xh, 0.5 * sol.tau_period, dh, axis, sol.crossings)
    except (SearchFailure, IntegrationError):
        return sol
    return out


def _branch(sol):
    return (1 if sol.initial.q[0] > 0 else -1, 1 if sol.initial.qdot[1] >= 0 else -1)


def scan_residual(sys, c, xs, direction=1, crossings=1):
    out = []
    for x in xs:
        try:
            out.append(shooting_residual(sys, c, x, direction, crossings))
        except (SearchFailure, IntegrationError, ValueError):
            out.append(np.nan)
    return np.array(out)


def find_periodic_orbit(sys, c, seed: PhaseState, strategy="symmetric-shooting", crossings=1, width=0.02,
                        tol=1e-10):
    """Refine a seed on the q1-axis (symmetric shooting) or on the section
    {q2 = 0, qdot2 > 0} (monodromy Newton) to a periodic orbit of energy c."""
    if strategy == "symmetric-shooting":
        x = float(seed.q[0])
        direction = 1 if seed.qdot[1] >= 0 else -1
        for w in (width, 2 * width, 4 * width):
            a, b = x - w * max(abs(x), 1e-3), x + w * max(abs(x), 1e-3)
            try:
                sol = find_symmetric_orbit(sys, c, (a, b), direction, crossings)
            except SearchFailure as e:
                last = e
                continue
            if sol.residual <= tol * max(1.0, np.linalg.norm(sol.reg_initial.u)):
                return sol
            last = SearchFailure(f"closure residual {sol.residual:.2e}", best=sol)
        raise last
    if strategy == "monodromy-newton":
        return _monodromy_newton(sys, c, seed, tol)
    raise ValueError(strategy)


def _section_return(sys, c, x, xd):
    """First return to {q2 = 0, qdot2 > 0} from (x, 0) with qdot1 = xd on level c."""
    q = np.array([x, 0.0])
    ke = 2 * (c - float(sys.V(q))) - xd * xd
    if ke <= 0:
        raise SearchFailure("outside the energy level")
    s0 = PhaseState(q, np.array([xd, math.sqrt(ke)]))

    def ev(t, y):
        return y[1]

    ev.direction = 1
    tr = integrate(sys, s0, 200.0, events=[ev], r_switch=0)
    for t, y in zip(tr.t_events[0], tr.y_events[0]):
        if t > 1e-8:
            return np.array([y[0], y[2]]), t, s0
    raise SearchFailure("no return to the section")


def _monodromy_newton(sys, c, seed, tol, maxiter=30):
    z = np.array([seed.q[0], seed.qdot[0]], float)
    for _ in range(maxiter):
        P, T, s0 = _section_return(sys, c, *z)
        F = P - z
        if np.linalg.norm(F) < tol:
            return OrbitSolution(sys, c, s0, T, float("nan"), "none", float(np.linalg.norm(F)))
        Jm = np.zeros((2, 2))
        h = 1e-7
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            Jm[:, k] = (_section_return(sys, c, *(z + e))[0] - _section_return(sys, c, *(z - e))[0]) / (2 * h)
        z = z - np.linalg.solve(Jm - np.eye(2), F)
    raise SearchFailure("Newton did not converge", best=z)


# -- projection ------------------------------------------------------------------------


def orbit_points(orbit: OrbitSolution, samples=4000):
    """q(tau) sampled uniformly in regularized time over one period.

    Uniform tau concentrates samples near the origin and near zero-velocity
    points, where small loops appear.
    """
    g = _gauge(orbit.sys)
    tr = reg.integrate_regularized(orbit.sys, g, orbit.energy, orbit.reg_initial, orbit.tau_period,
                                   n_out=samples + 1)
    z = (tr.v[:, 0] + 1j * tr.v[:, 1]) ** 2
    return z[:-1]


def project_to_curve(orbit: OrbitSolution, samples=4000, tol=None):
    z = orbit_points(orbit, samples)
    curve = model.PolyCurve(np.column_stack([z.real, z.imag]))
    rep = model.validate_genericity(curve, tol or model.Tolerances())
    if not rep.is_generic:
        raise NotGeneric(f"projected orbit is not generic: {rep.kinds()}")
    return curve


def cusp_discriminant(a, b, tol=1e-12):
    """Local model q(t) = (a t + t^2) + i (b t + t^3): loop iff 3a^2 + 4b < 0."""
    d = 3 * a * a + 4 * b
    if abs(d) <= tol:
        return "cusp"
    return "loop" if d < 0 else "no-loop"


# -- continuation ------------------------------------------------------------------------


@dataclass
class FamilyRecord:
    members: list
    curves: list
    invariants: list
    events: list
    parameter: str = "energy"
    diagnostics: list = field(default_factory=list)

    @property
    def energies(self):
        return [m.energy for m in self.members]

    def to_jsonl(self):
        lines = []
        for k, (m, inv) in enumerate(zip(self.members, self.invariants)):
            d = m.to_dict()
            d["index"] = k
            d["invariants"] = json.loads(inv.to_json()) if inv is not None else None
            lines.append(json.dumps(d, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    def events_csv(self):
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["kind", "before", "after", "dn", "dw0", "drot", "index", "tangency",
                                            "paired"], lineterminator="\n")
        w.writeheader()
        for e in self.events:
            w.writerow(e.to_row())
        return buf.getvalue()


def continue_family(start: OrbitSolution, c_end, n_members=30, samples=4000, classify=True, max_halvings=6,
                    symmetric=False):
    """Natural-parameter continuation in energy with step halving.

    Members are re-converged by symmetric shooting in a bracket around the
    linear prediction of the start abscissa.  Each member is restarted from
    its perpendicular crossing farther from the origin, so a family whose
    start point runs into the collision carries on from the other end.
    """
    start = far_start(start)
    members = [start]
    diags = []
    cs = [start.energy] if c_end == start.energy else list(np.linspace(start.energy, c_end, n_members))
    for c in cs[1:]:
        if not _continue_to(members, c, max_halvings, diags):
            diags.append(f"family truncated before c={c}")
            break
    curves = []
    invs = []
    for k in range(len(members)):
        try:
            members[k], cv = _generic_member(members, k, samples)
            curves.append(cv)
            invs.append(invariants(cv))
        except (NotGeneric, model.CurveError) as e:
            curves.append(None)
            invs.append(None)
            diags.append(f"member at c={members[k].energy}: {e}")
    rec = FamilyRecord(members, curves, invs, [], "energy", diags)
    if classify and len(members) > 1:
        rec.events = family_events(rec, samples=samples, symmetric=symmetric)
    return rec


def _generic_member(members, k, samples):
    """Project member k; a member sitting on an event is re-solved slightly
    inside its gap (never past a neighbour)."""
    m = members[k]
    try:
        return m, project_to_curve(m, samples)
    except (NotGeneric, model.CurveError) as e:
        last = e
    lo = members[k - 1].energy if k > 0 else None
    hi = members[k + 1].energy if k + 1 < len(members) else None
    for f in (0.01, -0.01, 0.05, -0.05, 0.15, -0.15, 0.3, -0.3, 0.45, -0.45):
        nb = hi if f > 0 else lo
        if nb is None:
            continue
        c = m.energy + abs(f) * (nb - m.energy)
        sol = _correct(m.sys, c, m.initial.q[0], 0.5 * m.tau_period, m)
        if sol is None:
            continue
        try:
            return sol, project_to_curve(sol, samples)
        except (NotGeneric, model.CurveError) as e:
            last = e
    raise last


def _predict(members, c):
    """Linear prediction of (start abscissa, half period) at energy c."""
    m1 = members[-1]
    x1, t1 = float(m1.initial.q[0]), 0.5 * m1.tau_period
    if len(members) > 1 and _key(members[-2]) == _key(m1):
        m0 = members[-2]
        f = (c - m1.energy) / (m1.energy - m0.energy)
        x0, t0 = float(m0.initial.q[0]), 0.5 * m0.tau_period
        return x1 + f * (x1 - x0), t1 + f * (t1 - t0), abs(x1 - x0)
    return x1, t1, None


def _key(sol):
    return _branch(sol) + (sol.end_axis,)


def _correct(sys, c, x, tau, like: OrbitSolution, dx=None):
    """Newton from a prediction, falling back to bracketed shooting."""
    direction = _branch(like)[1]
    try:
        return far_start(correct_symmetric(sys, c, x, tau, direction, like.end_axis, like.crossings))
    except (SearchFailure, IntegrationError, ValueError):
        pass
    return _shoot_near(sys, c, x, dx or 2e-2 * abs(x), direction, like.crossings)


def _shoot_near(sys, c, x, dx, direction, k):
    for w in (2.0, 5.0, 12.0):
        a, b = x - w * dx, x + w * dx
        if a * b <= 0:  # never bracket the origin
            a, b = (max(a, 1e-3 * abs(x)), b) if x > 0 else (a, min(b, -1e-3 * abs(x)))
        try:
            return far_start(find_symmetric_orbit(sys, c, (a, b), direction, k))
        except (SearchFailure, IntegrationError, ValueError):
            continue
    return None


def _continue_to(members, c, max_halvings, diags):
    """Append members up to energy c; False if step halving gives up."""
    sys = members[0].sys
    target = c
    halvings = 0
    while True:
        x, tau, step = _predict(members, target)
        sol = _correct(sys, target, x, tau, members[-1], step)
        if sol is not None:
            members.append(sol)
            if target == c:
                return True
            target = c
            continue
        halvings += 1
        if halvings > max_halvings:
            return False
        target = 0.5 * (members[-1].energy + target)
        diags.append(f"step halved towards c={c}")


def orbit_curve_at(sys, left: OrbitSolution, right: OrbitSolution, samples=4000):
    """curve_at(c) between two consecutive members, for event bracketing."""
    cache = {}
    same = _key(left) == _key(right)

    def curve_at(c):
        if c in cache:
            return cache[c]
        if same:
            f = (c - left.energy) / (right.energy - left.energy)
            x = (1 - f) * left.initial.q[0] + f * right.initial.q[0]
            tau = 0.5 * ((1 - f) * left.tau_period + f * right.tau_period)
            like = left
        else:
            like = left if abs(c - left.energy) <= abs(c - right.energy) else right
            x, tau = like.initial.q[0], 0.5 * like.tau_period
        sol = _correct(sys, c, x, tau, like)
        if sol is None:
            raise model.CurveError(f"no orbit near x={x} at c={c}")
        try:
            cv = project_to_curve(sol, samples)
        except NotGeneric as e:
            raise model.GenericityError(str(e), None) from e
        cache[c] = cv
        return cv

    return curve_at


def family_events(rec: FamilyRecord, samples=4000, tol=1e-6, symmetric=False):
    events = []
    m = rec.members
    for k in range(len(m) - 1):
        if rec.curves[k] is None or rec.curves[k + 1] is None:
            continue
        curve_at = orbit_curve_at(m[0].sys, m[k], m[k + 1], samples)
        a, b = m[k].energy, m[k + 1].energy
        events.extend(detect_events(curve_at, a, b, index=k, tol=tol * max(1.0, abs(b - a)), symmetric=symmetric))
    return events


def verify_theorem_A(rec: FamilyRecord):
    """Constant J1, J2 along the family; tracked J+ against geometric J+."""
    geo = [g for g in rec.invariants if g is not None]
    if len(geo) != len(rec.invariants):
        raise SearchFailure("family has non-generic members; bracket them first")
    tracked = j_plus_tracked(rec.curves, geo[0], rec.events)
    report = FamilyReport([m.energy for m in rec.members], geo, tracked, rec.events,
                          [e for e in rec.events if e.kind in ("direct_tangency", "interior_loop")])
    return report


# -- the mu = 0.99 family with I_inf, I0 and III events ---------------------------------------

# Primaries of masses 0.99 and 0.01; the light one sits at the origin and is
# the one regularized (catalog rtbp with mu = 0.01, whose origin body has mass
# mu M).  Energies are H = -c for the Jacobi constant c.
FIGURE_SYSTEM = {"mu": 0.01}
FIGURE_SEED = {"energy": -1.575, "bracket": (-0.0011, -0.0005), "direction": 1, "crossings": 1}
FIGURE_WINDOW = (-1.58, -1.55)


def figure_family(n_members=31, samples=4000, window=FIGURE_WINDOW):
    """Continue the seed orbit over the window; events in order I_inf, I0, III."""
    from .dynamics import make_system

    s = make_system("rtbp", **FIGURE_SYSTEM)
    seed = find_symmetric_orbit(s, FIGURE_SEED["energy"], FIGURE_SEED["bracket"], FIGURE_SEED["direction"],
                                FIGURE_SEED["crossings"])
    lo, hi = window
    first = continue_family(seed, lo, n_members=6, classify=False, samples=500).members[-1]
    return continue_family(first, hi, n_members=n_members, samples=samples, symmetric=True)


def event_order(rec: FamilyRecord):
    """Event kinds in order of the family parameter."""
    return [e.kind for e in sorted(rec.events, key=lambda e: e.bracket[0] * np.sign(rec.members[-1].energy
                                                                                   - rec.members[0].energy))]


# -- closed-form starts --------------------------------------------------------------------


def rotating_kepler_circular(sys, a, retrograde=True):
    """Circular Kepler orbit of radius a seen in the rotating frame."""
    w = sys.params["omega"]
    n = a ** -1.5
    speed = a * (n + w) if retrograde else a * (n - w)
    # with B = 2 omega > 0 the frame turns clockwise, so retrograde is qdot2 > 0
    qd = np.array([0.0, speed if retrograde else -speed])
    c = -0.5 / a + (1 if retrograde else -1) * w * math.sqrt(a)
    return PhaseState(np.array([a, 0.0]), qd), c


def rotating_kepler_radius(c, omega=1.0, retrograde=True):
    """Radius of the circular orbit with rotating-frame energy c."""
    s = 1 if retrograde else -1
    f = lambda a: -0.5 / a + s * omega * math.sqrt(a) - c
    return brentq(f, 1e-6, 1e3)


# -- archives ------------------------------------------------------------------------


def curves_svg(curves, path, titles=None, ncols=None, mark_origin=True):
    """Montage of plane curves, one panel each."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves = [c for c in curves if c is not None]
    n = max(len(curves), 1)
    ncols = ncols or min(n, 4)
    nrows = -(-n // ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(3 * ncols, 3 * nrows), squeeze=False)
    for ax in axes.flat:
        ax.set_axis_off()
    for k, cv in enumerate(curves):
        ax = axes.flat[k]
        v = np.vstack([cv.vertices, cv.vertices[:1]])
        ax.plot(v[:, 0], v[:, 1], lw=0.8, color="k")
        if mark_origin:
            ax.plot([0], [0], "o", ms=3, color="tab:red")
        ax.set_aspect("equal")
        if titles is not None:
            ax.set_title(titles[k], fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def write_family_archive(rec: FamilyRecord, outdir, montage_members=6):
    """family.jsonl, events.csv, curve CSVs and montage.svg in outdir."""
    import os

    os.makedirs(outdir, exist_ok=True)
    lines = rec.to_jsonl().splitlines()
    out = []
    for k, line in enumerate(lines):
        d = json.loads(line)
        if rec.curves[k] is not None:
            name = f"member_{k:03d}.csv"
            model.save_curve(rec.curves[k], os.path.join(outdir, name))
            d["curve_file"] = name
        else:
            d["curve_file"] = None
        out.append(json.dumps(d, sort_keys=True))
    with open(os.path.join(outdir, "family.jsonl"), "w") as fh:
        fh.write("\n".join(out) + ("\n" if out else ""))
    with open(os.path.join(outdir, "events.csv"), "w") as fh:
        fh.write(rec.events_csv())
    idx = np.unique(np.linspace(0, len(rec.members) - 1, min(montage_members, len(rec.members))).round().astype(int))
    curves_svg([rec.curves[i] for i in idx], os.path.join(outdir, "montage.svg"),
               titles=[f"{i + 1}: c = {rec.members[i].energy:.4f}" for i in idx])
