"""Quadratic first integrals of separable planar potentials.

Parabolic separation (family "sep1"):

    V = (f(r + q1) + g(r - q1)) / r,
    I = L p2 + ((r + q1) g(r - q1) - (r - q1) f(r + q1)) / r,   L = q1 p2 - q2 p1.

Elliptic separation with foci (+-c, 0) (family "sep2"):

    V = (f(u) - g(v)) / (u^2 - v^2),   u, v = (r1 +- r2) / 2,
    I = L^2 + c^2 p1^2 + 2 (v^2 f(u) - u^2 g(v)) / (u^2 - v^2).
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .dynamics import PhaseState, SingularityError, SystemSpec, integrate, make_system


class ApplicabilityError(ValueError):
    pass


@dataclass(frozen=True)
class SeparablePotentialSpec:
    family: str  # sep1 | sep2
    f: Callable
    g: Callable
    c: float = 0.0
    shift: float = 0.0  # catalog frame q1 = separable frame q1 + shift

    def __post_init__(self):
        if self.family not in ("sep1", "sep2"):
            raise ValueError(self.family)
        if self.family == "sep2" and not self.c > 0:
            raise ValueError("elliptic separation needs c > 0")

    def to_local(self, q):
        q = np.array(q, float)
        q[..., 0] -= self.shift
        return q


def elliptic_coordinates(c, q):
    q = np.asarray(q, float)
    r1 = np.hypot(q[..., 0] + c, q[..., 1])
    r2 = np.hypot(q[..., 0] - c, q[..., 1])
    return 0.5 * (r1 + r2), 0.5 * (r1 - r2), r1, r2


def potential(spec: SeparablePotentialSpec, q):
    """V reconstructed from (f, g); q in the catalog frame."""
    x = spec.to_local(q)
    if spec.family == "sep1":
        r = np.hypot(x[..., 0], x[..., 1])
        if np.any(r == 0):
            raise SingularityError("origin")
        return (spec.f(r + x[..., 0]) + spec.g(r - x[..., 0])) / r
    u, v, r1, r2 = elliptic_coordinates(spec.c, x)
    den = u * u - v * v
    if np.any(den == 0):
        raise SingularityError("focus")
    return (spec.f(u) - spec.g(v)) / den


def integral_sep1(spec: SeparablePotentialSpec, q, p):
    x = spec.to_local(q)
    p = np.asarray(p, float)
    q1, q2 = x[..., 0], x[..., 1]
    r = np.hypot(q1, q2)
    if np.any(r == 0):
        raise SingularityError("origin")
    L = q1 * p[..., 1] - q2 * p[..., 0]
    return L * p[..., 1] + ((r + q1) * spec.g(r - q1) - (r - q1) * spec.f(r + q1)) / r


def integral_sep2(spec: SeparablePotentialSpec, q, p):
    x = spec.to_local(q)
    p = np.asarray(p, float)
    c = spec.c
    u, v, r1, r2 = elliptic_coordinates(c, x)
    den = u * u - v * v
    if np.any(r1 == 0) or np.any(r2 == 0) or np.any(den == 0):
        raise SingularityError("focus")
    L = x[..., 0] * p[..., 1] - x[..., 1] * p[..., 0]
    return L * L + c * c * p[..., 0] ** 2 + 2 * (v * v * spec.f(u) - u * u * spec.g(v)) / den


def integral(spec, q, p):
    return integral_sep1(spec, q, p) if spec.family == "sep1" else integral_sep2(spec, q, p)


# -- catalog substitutions -------------------------------------------------------------


def substitution(sys: SystemSpec) -> SeparablePotentialSpec:
    """The (f, g) data reproducing a catalog potential."""
    if sys.magnetic_B() != 0:
        raise ApplicabilityError(f"{sys.catalog_id} has a magnetic field; no quadratic integral here")
    p = sys.params
    cid = sys.catalog_id
    if cid == "stark":
        E = p["E"]
        return SeparablePotentialSpec("sep1", lambda s: -0.5 - E / 4 * s ** 2, lambda s: -0.5 + E / 4 * s ** 2)
    if cid == "kepler":
        return SeparablePotentialSpec("sep1", lambda s: -0.5 + 0 * s, lambda s: -0.5 + 0 * s)
    if cid == "frozen_hill_centrifugal":
        # both cubic terms need the coefficient -1/4 for the q1 r^2 and q1^3
        # parts to cancel
        return SeparablePotentialSpec("sep1", lambda s: -0.5 - s ** 3 / 4, lambda s: -0.5 - s ** 3 / 4)
    if cid == "euler":
        mu, M, R = p["mu"], p["M"], p["R"]
        # foci at -+R/2 in the separable frame; the catalog puts the masses at
        # -R(1-mu) and R mu, i.e. shifted by R(mu - 1/2)
        return SeparablePotentialSpec("sep2", lambda s: -M * s, lambda s: (1 - 2 * mu) * M * s,
                                      c=R / 2, shift=R * (mu - 0.5))
    if cid == "lagrange":
        mu, M, R, a = p["mu"], p["M"], p["R"], p["a"]
        c = R / 2
        # u^2 + v^2 = r^2 + c^2, so a r^2 = (a(u^4 - v^4) - a c^2 (u^2 - v^2)) / (u^2 - v^2)
        return SeparablePotentialSpec(
            "sep2",
            lambda s: -M * s + a * s ** 4 - a * c * c * s ** 2,
            lambda s: (1 - 2 * mu) * M * s + a * s ** 4 - a * c * c * s ** 2,
            c=c,
        )
    raise ApplicabilityError(f"no separable substitution for {cid}")


INTEGRABLE = ("stark", "frozen_hill_centrifugal", "euler", "lagrange")


def _sample_q(sys, rng, n, rmin=0.05):
    pts = []
    L = sys.length_scale
    while len(pts) < n:
        q = rng.uniform(-1.5 * L, 1.5 * L, 2)
        if all(np.linalg.norm(q - s) > rmin * L for s in sys.singular_points) and abs(q[1]) > 1e-3 * L:
            pts.append(q)
    return np.array(pts)


def potential_mismatch(sys, n=100, seed=0):
    """max relative |V_sep - V_catalog| at random points."""
    spec = substitution(sys)
    q = _sample_q(sys, np.random.default_rng(seed), n)
    a = potential(spec, q)
    b = sys.V(q)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def poisson_bracket(sys, spec, q, p, h=1e-5):
    """{H, I} by central differences of I and analytic grad H."""
    q = np.asarray(q, float)
    p = np.asarray(p, float)
    dIq = np.zeros(2)
    dIp = np.zeros(2)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        dIq[k] = (integral(spec, q + e, p) - integral(spec, q - e, p)) / (2 * h)
        dIp[k] = (integral(spec, q, p + e) - integral(spec, q, p - e)) / (2 * h)
    dHq = sys.grad_V(q)
    dHp = p
    return float(dHq @ dIp - dHp @ dIq)


@dataclass
class IntegralReport:
    system: str
    integral_family: str
    bracket_residual: float
    value_drift: float
    n_samples: int
    seed: int

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _bounded_starts(sys, rng, count):
    """Near-circular starts and their Kepler periods.

    One-centre systems: orbits around the origin with energy below c1.  Two
    centres: wide orbits around both, which keep clear of the collisions
    that satellite orbits of a single centre run into.
    """
    out = []
    L = sys.length_scale
    two = len(sys._coulomb) == 2
    M = sum(k for k, _ in sys._coulomb)
    mid = sum(s for _, s in sys._coulomb) / len(sys._coulomb)
    while len(out) < count:
        r = rng.uniform(1.4, 1.8) * L if two else rng.uniform(0.15, 0.3) * L
        th = rng.uniform(0, 2 * np.pi)
        d = np.array([np.cos(th), np.sin(th)])
        q = mid + r * d
        fr = float(sys.grad_V(q) @ d)  # attraction towards the centre
        speed = np.sqrt(max(fr, 1e-12) * r) * rng.uniform(0.95, 1.05)
        vdir = np.array([-d[1], d[0]]) * rng.choice([-1, 1])
        v = speed * (vdir + 0.1 * rng.uniform(-1, 1) * d)
        E = float(sys.energy(q, v))
        if not two and sys.c1 is not None and E >= sys.c1:
            continue
        out.append((PhaseState(q, v), 2 * np.pi * np.sqrt(r ** 3 / M)))
    return out


def poisson_bracket_residual(sys: SystemSpec, n_states=1000, n_traj=10, periods=10, seed=0, h=1e-5):
    if sys.catalog_id not in INTEGRABLE:
        raise ApplicabilityError(f"{sys.catalog_id} is not among {INTEGRABLE}")
    spec = substitution(sys)
    rng = np.random.default_rng(seed)
    qs = _sample_q(sys, rng, n_states, rmin=0.2)
    ps = rng.normal(size=(n_states, 2))
    res = 0.0
    for q, p in zip(qs, ps):
        res = max(res, abs(poisson_bracket(sys, spec, q, p, h)))
    drift = 0.0
    for s0, period in _bounded_starts(sys, rng, n_traj):
        tr = integrate(sys, s0, periods * period, r_switch=0)
        I = integral(spec, tr.q, tr.qdot)
        drift = max(drift, float(np.max(np.abs(I - I[0]))))
    return IntegralReport(sys.catalog_id, spec.family, res, drift, n_states, seed)


def catalog_systems():
    return [make_system(cid) for cid in INTEGRABLE]
