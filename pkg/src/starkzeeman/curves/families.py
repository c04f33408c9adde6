"""Scripted one-parameter families of plane curves.

A family is a smooth base curve C(theta) sampled on a fixed grid, deformed by
a sequence of excursions.  Each excursion switches a localized displacement
field on and off again (lambda: 0 -> 1 -> 0), so the family returns to the
base curve after every excursion and the event it triggers happens twice.

Excursion fields:

* bump:  push an arc along a normal (self-tangencies, triple points)
* kink:  fold an arc until it develops a cusp and then a small loop
* collision: push an arc across the origin in the Levi-Civita plane,
  v -> v + lambda * bump, and square back; the arc passes through a cusp at
  the origin and w0 changes by two
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model
from .events import VIOLATIONS, detect_events
from .invariants import invariants, j_plus_tracked
from .model import PolyCurve


@dataclass
class Excursion:
    kind: str  # bump | kink | collision
    theta0: float
    width: float  # in arclength units
    amplitude: float
    side: int = 1  # +1 left normal, -1 right normal
    label: str = ""


@dataclass
class ScriptedFamily:
    base: callable  # theta -> complex
    excursions: list
    samples: int = 2400
    refine: int = 16
    origin_eps: float = 1e-5
    theta: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        theta = (np.arange(self.samples) + 0.5) * (2 * math.pi / self.samples)
        dth = 2 * math.pi / self.samples
        # collisions are resolved in the Levi-Civita plane, where the squared
        # arc needs a much finer grid near the origin
        extra = []
        for ex in self.excursions:
            if ex.kind != "collision":
                continue
            sp = abs(self.base(np.array([ex.theta0 + 1e-6])) - self.base(np.array([ex.theta0 - 1e-6])))[0] / 2e-6
            half = 4 * ex.width / sp
            extra.append(ex.theta0 + np.arange(-half, half, dth / self.refine))
        if extra:
            e = np.mod(np.concatenate(extra), 2 * math.pi)
            theta = np.union1d(theta[~_covered(theta, self.excursions, self.base)], e)
        self.theta = theta
        self.z0 = np.asarray(self.base(self.theta), dtype=complex)
        dz = np.gradient(self.z0, self.theta)
        self.speed = np.abs(dz)
        self.tangent = dz / self.speed

    @property
    def span(self):
        """Family parameter range: one unit per excursion."""
        return 0.0, float(len(self.excursions))

    def _window(self, ex):
        k = int(np.argmin(np.abs(np.angle(np.exp(1j * (self.theta - ex.theta0))))))
        dth = np.angle(np.exp(1j * (self.theta - self.theta[k])))
        t = dth * self.speed[k]  # local arclength coordinate
        return k, t

    def displacement(self, ex, lam):
        k, t = self._window(ex)
        s = ex.width
        g = np.exp(-0.5 * (t / s) ** 2)
        g[np.abs(t) > 8 * s] = 0.0
        T = self.tangent[k]
        N = 1j * T * ex.side
        z = self.z0
        if ex.kind == "bump":
            return z + lam * ex.amplitude * g * N
        if ex.kind == "kink":
            # the local velocity vanishes at lam * amplitude = 1; beyond it a
            # loop opens on the side opposite to N
            u = t * g
            w = (t * t / s) * g
            return z - lam * ex.amplitude * u * T + lam * w * N
        if ex.kind == "collision":
            out = z.copy()
            idx = np.flatnonzero(g > 0)
            idx = idx[np.argsort(t[idx])]  # along the curve, across the seam
            v = _branch(z[idx])
            c = int(np.argmin(np.abs(t[idx])))
            vk = v[c]
            tv = np.gradient(v)[c]
            nv = 1j * tv / abs(tv)
            if np.real(np.conj(nv) * (-vk)) < 0:
                nv = -nv
            m = idx
            out[m] = (v + lam * ex.amplitude * abs(vk) * g[m] * nv) ** 2
            return out
        raise ValueError(ex.kind)

    def points(self, p):
        """Vertices of the member at family parameter p."""
        p = float(np.clip(p, *self.span))
        j = min(int(p), len(self.excursions) - 1)
        frac = p - j
        lam = 1.0 - abs(1.0 - 2.0 * frac)  # 0 -> 1 -> 0
        if len(self.excursions) == 0:
            return self.z0
        return self.displacement(self.excursions[j], lam)

    def curve_at(self, p):
        z = self.points(p)
        c = PolyCurve(np.column_stack([z.real, z.imag]))
        model.require_generic(c, model.Tolerances(eps_origin=self.origin_eps))
        return c

    def members(self, per_excursion=8):
        a, b = self.span
        ps = np.linspace(a, b, int(per_excursion * (b - a)) + 1)
        return ps


def _covered(theta, excursions, base):
    out = np.zeros(len(theta), dtype=bool)
    for ex in excursions:
        if ex.kind != "collision":
            continue
        sp = abs(base(np.array([ex.theta0 + 1e-6])) - base(np.array([ex.theta0 - 1e-6])))[0] / 2e-6
        half = 4 * ex.width / sp
        out |= np.abs(np.angle(np.exp(1j * (theta - ex.theta0)))) < half
    return out


def _branch(z):
    v = np.sqrt(z)
    for k in range(1, len(v)):
        if abs(v[k] - v[k - 1]) > abs(v[k] + v[k - 1]):
            v[k] = -v[k]
    return v


@dataclass
class FamilyReport:
    params: list
    geometric: list
    tracked: list
    events: list
    violations: list

    @property
    def j1_constant(self):
        return len({g.two_j1 for g in self.geometric}) == 1

    @property
    def j2_constant(self):
        return len({g.j2 for g in self.geometric}) == 1

    @property
    def tracked_matches(self):
        return all(g.j_plus == t.j_plus and g.w0 == t.w0 for g, t in zip(self.geometric, self.tracked))


def _generic_member(curve_at, p, params, k):
    # members landing exactly on an event are moved slightly inside their gap
    lo = params[k - 1] if k > 0 else p
    hi = params[k + 1] if k + 1 < len(params) else p
    for f in (0.0, 0.01, -0.01, 0.03, -0.03, 0.07, -0.07):
        q = p + f * ((hi - p) if f > 0 else (p - lo))
        try:
            return curve_at(q), q
        except model.CurveError:
            continue
    raise model.CurveError(f"no generic member near p={p}")


def analyse_family(curve_at, params, symmetric=False, tol=1e-6, with_j2=True):
    """Invariants of each member, events between members, tracked J+."""
    geo = []
    curves = []
    params = list(params)
    for k, p in enumerate(params):
        c, params[k] = _generic_member(curve_at, p, params, k)
        curves.append(c)
        geo.append(invariants(c, with_j2=with_j2))
    events = []
    for k in range(len(params) - 1):
        evs = detect_events(curve_at, params[k], params[k + 1], index=k, tol=tol, symmetric=symmetric)
        events.extend(evs)
    tracked = j_plus_tracked(curves, geo[0], events)
    violations = [e for e in events if e.kind in VIOLATIONS]
    return FamilyReport(list(params), geo, tracked, events, violations)
