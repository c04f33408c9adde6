"""Command-line entry point: starkzeeman <command> [options].

Exit codes: 0 ok, 1 numerical failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import tempfile

import numpy as np

from . import dynamics as dyn
from . import integrability as integ
from . import orbits
from .curves import model
from .curves import synthesis as syn
from .curves.invariants import invariants, j_plus_geometric, levi_civita_lift_curve

log = logging.getLogger("starkzeeman")

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2


class UsageError(Exception):
    pass


def _atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _parse_params(items):
    out = {}
    for it in items or []:
        if "=" not in it:
            raise UsageError(f"parameter {it!r} is not of the form name=value")
        k, v = it.split("=", 1)
        try:
            out[k] = float(v)
        except ValueError:
            raise UsageError(f"parameter {k} needs a number, got {v!r}") from None
    return out


def _merge_config(args, keys):
    """Flags mirror config keys; the config file wins with a warning."""
    if not getattr(args, "config", None):
        return
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {args.config}: {e}") from None
    for k in keys:
        if k in cfg:
            cur = getattr(args, k, None)
            default = args._defaults.get(k)
            if cur is not None and cur != default and cur != cfg[k]:
                log.warning("config file overrides --%s=%s with %s", k, cur, cfg[k])
            setattr(args, k, cfg[k])


def _system(args):
    params = args.param if isinstance(args.param, dict) else _parse_params(args.param)
    return dyn.SystemSpec(args.system, params, getattr(args, "c1", None))


# -- commands -----------------------------------------------------------------------


def cmd_simulate(args):
    _merge_config(args, ("system", "param", "T", "r", "out", "c1"))
    s = _system(args)
    s0 = dyn.demo_state(s, args.r)
    T = args.T if args.T is not None else 10 * s.period_scale
    tr = dyn.integrate(s, s0, T, n_out=args.samples, r_switch=0)
    c = float(s.energy(s0.q, s0.qdot))
    os.makedirs(args.out, exist_ok=True)
    buf = tr.to_csv()
    _atomic_write(os.path.join(args.out, "trajectory.csv"), buf)
    dyn.plot_orbit_svg(s, tr, c=c, path=os.path.join(args.out, "orbit.svg"), title=f"{s.catalog_id}, c = {c:.6g}")
    print(json.dumps({"system": s.catalog_id, "energy": c, "drift": tr.energy_drift(), "samples": len(tr.t)},
                     sort_keys=True))
    return EXIT_OK


def _orbit_from_args(args):
    s = _system(args)
    if args.x0 is None:
        raise UsageError("--x0 is required")
    seed = dyn.PhaseState(np.array([args.x0, 0.0]), np.array([0.0, float(args.direction)]))
    if args.strategy == "monodromy-newton":
        q = np.array([args.x0, 0.0])
        ke = 2 * (args.energy - float(s.V(q)))
        if ke <= 0:
            raise UsageError("x0 lies outside the Hill's region")
        seed = dyn.PhaseState(q, np.array([0.0, math.sqrt(ke)]))
    return s, orbits.find_periodic_orbit(s, args.energy, seed, args.strategy, crossings=args.crossings,
                                         width=args.width)


def cmd_orbit(args):
    _merge_config(args, ("system", "param", "energy", "x0", "direction", "crossings", "strategy"))
    s, sol = _orbit_from_args(args)
    d = sol.to_dict()
    d["system"] = json.loads(s.to_json())
    text = json.dumps(d, sort_keys=True)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    return EXIT_OK


def cmd_family(args):
    _merge_config(args, ("system", "param", "energy", "end", "members", "x0", "direction", "crossings", "out"))
    args.strategy = "symmetric-shooting"
    s, sol = _orbit_from_args(args)
    rec = orbits.continue_family(sol, args.end, n_members=args.members, samples=args.samples,
                                 symmetric=args.symmetric)
    orbits.write_family_archive(rec, args.out)
    summary = {"members": len(rec.members), "events": [e.kind for e in rec.events], "diagnostics": rec.diagnostics}
    if all(g is not None for g in rec.invariants):
        rep = orbits.verify_theorem_A(rec)
        summary.update(j1_constant=rep.j1_constant, j2_constant=rep.j2_constant, tracked_matches=rep.tracked_matches)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _invariant_row(path):
    try:
        cv = model.load_curve(path)
    except (OSError, ValueError) as e:
        return {"file": path, "status": f"unreadable: {e}"}
    plane = model.Tolerances(check_origin=False)
    try:
        row = {"file": path, "n": len(model.double_points(cv, plane)), "rotation": model.rotation_number(cv),
               "j_plus": j_plus_geometric(cv, plane)}
    except model.CurveError as e:
        return {"file": path, "status": f"not generic: {e}"}
    try:
        inv = invariants(cv)
    except model.ProximityError:
        # J+ is a plane invariant; w0, J1 and J2 need the origin off the curve
        return dict(row, status="passes through the origin: w0 undefined")
    except model.CurveError as e:
        return dict(row, status=f"lift not generic: {e}")
    return dict(row, w0=inv.w0, j1=str(inv.j1), j2=inv.j2, status="ok")


def cmd_invariants(args):
    fields = ["file", "n", "rotation", "w0", "j_plus", "j1", "j2", "status"]
    rows = [_invariant_row(p) for p in args.curves]
    for r in rows:
        if r["status"] != "ok":
            log.warning("%s: %s", r["file"], r["status"])
    buf = _csv(rows, fields)
    if args.out:
        _atomic_write(args.out, buf)
    else:
        sys.stdout.write(buf)
    return EXIT_OK


def _csv(rows, fields):
    import io

    out = io.StringIO()
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: r.get(k, "") for k in fields})
    return out.getvalue()


def cmd_lift(args):
    cv = model.load_curve(args.curve)
    lift = levi_civita_lift_curve(cv)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    model.save_curve(lift.curve, args.out)
    print(json.dumps({"components": len(lift.components), "connected": bool(lift.connected),
                      "j_plus_lift": j_plus_geometric(lift.curve, model.Tolerances(check_origin=False))},
                     sort_keys=True))
    return EXIT_OK


def cmd_render(args):
    curves = [model.load_curve(p) for p in args.curves]
    orbits.curves_svg(curves, args.out, titles=[os.path.basename(p) for p in args.curves])
    return EXIT_OK


# -- validate ------------------------------------------------------------------------


MUTATIONS = ("oracle_corpus", "odd_theorem_b", "k_superscript", "integrability")


def validate(size=100, seed=0, mutate=None, integrability=True):
    """The oracle-vs-geometric corpus, odd-parity sweeps and integrability checks."""
    off = lambda name: 2 if mutate == name else 0
    checks = {}
    warnings = []
    if size == 0:
        warnings.append("empty corpus: corpus checks pass vacuously")
    corpus = syn.random_corpus(size, seed=seed) if size else []
    bad = [k for k, (_, st) in enumerate(corpus) if j_plus_geometric(st.curve) + off("oracle_corpus") != st.j_plus]
    checks["oracle_corpus"] = {"pass": not bad, "curves": len(corpus), "mismatches": bad}
    odd = 0
    bad = []
    for k, (_, st) in enumerate(corpus):
        if st.w0 % 2:
            odd += 1
            inv = invariants(st.curve)
            if inv.j2 + off("odd_theorem_b") != inv.two_j1 - 1:
                bad.append(k)
    checks["odd_theorem_b"] = {"pass": not bad, "curves": odd, "mismatches": bad}
    bad = []
    for w in (1, 3, 5, 7):
        inv = invariants(syn.k_superscript(w).curve)
        if inv.j_plus + off("k_superscript") != -w * (w - 1) or inv.j2 != -(w - 1) ** 2:
            bad.append(w)
    checks["k_superscript"] = {"pass": not bad, "failing_w": bad}
    if integrability:
        rows = {}
        for s in integ.catalog_systems():
            mm = integ.potential_mismatch(s) + off("integrability")
            rep = integ.poisson_bracket_residual(s, n_states=200, n_traj=2, periods=10, seed=seed)
            rows[s.catalog_id] = {"mismatch": mm, "bracket": rep.bracket_residual, "drift": rep.value_drift,
                                  "pass": mm <= 1e-12 and rep.bracket_residual <= 1e-6 and rep.value_drift <= 1e-7}
        checks["integrability"] = {"pass": all(r["pass"] for r in rows.values()), "systems": rows}
    return {"pass": all(c["pass"] for c in checks.values()), "seed": seed, "size": size, "checks": checks,
            "warnings": warnings}


def cmd_validate(args):
    if args.mutate and args.mutate not in MUTATIONS:
        raise UsageError(f"--mutate must be one of {MUTATIONS}")
    verdict = validate(args.size, args.seed, args.mutate, not args.skip_integrability)
    for w in verdict["warnings"]:
        log.warning(w)
    text = json.dumps(verdict, sort_keys=True, default=float)
    if args.out:
        _atomic_write(args.out, text + "\n")
    print(text)
    for name, c in verdict["checks"].items():
        if not c["pass"]:
            print(f"FAILED check: {name}", file=sys.stderr)
    return EXIT_OK if verdict["pass"] else EXIT_NUMERIC


# -- parser ------------------------------------------------------------------------


def _system_flags(p):
    p.add_argument("--system", "-s", default="kepler", help="catalog id")
    p.add_argument("--param", "-p", action="append", default=[], help="name=value, repeatable")
    p.add_argument("--c1", type=float, default=None)
    p.add_argument("--config", help="JSON file with the same keys as the flags")


def _orbit_flags(p):
    p.add_argument("--energy", "-c", type=float, required=False, default=-0.5)
    p.add_argument("--x0", type=float, default=None, help="start on the q1-axis")
    p.add_argument("--direction", type=int, choices=(-1, 1), default=1, help="sign of qdot2 at the start")
    p.add_argument("--crossings", type=int, default=1, help="axis hits per half period")
    p.add_argument("--width", type=float, default=0.02, help="relative bracket half-width")


def build_parser():
    ap = argparse.ArgumentParser(prog="starkzeeman", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate a demo orbit; CSV and SVG with the Hill boundary")
    _system_flags(p)
    p.add_argument("--T", type=float, default=None, help="integration time (default 10 periods)")
    p.add_argument("--r", type=float, default=None, help="demo orbit radius")
    p.add_argument("--samples", type=int, default=2001)
    p.add_argument("--out", "-o", default="simulate_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("orbit", help="find a periodic orbit")
    _system_flags(p)
    _orbit_flags(p)
    p.add_argument("--strategy", choices=("symmetric-shooting", "monodromy-newton"), default="symmetric-shooting")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("family", help="continue a symmetric orbit in energy")
    _system_flags(p)
    _orbit_flags(p)
    p.add_argument("--end", type=float, required=True)
    p.add_argument("--members", type=int, default=30)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--symmetric", action="store_true", help="accept paired events of reflection-symmetric families")
    p.add_argument("--out", "-o", default="family_out")
    p.set_defaults(func=cmd_family)

    p = sub.add_parser("invariants", help="CSV table of n, rotation, w0, J+, J1, J2")
    p.add_argument("curves", nargs="*")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_invariants)

    p = sub.add_parser("lift", help="Levi-Civita lift of a curve")
    p.add_argument("curve")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("validate", help="corpus, J1/J2 parity and integrability checks; JSON verdict")
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mutate", default=None, help=f"corrupt one check on purpose: {', '.join(MUTATIONS)}")
    p.add_argument("--skip-integrability", action="store_true")
    p.add_argument("--out", "-o", default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="SVG montage of curve files")
    p.add_argument("curves", nargs="+")
    p.add_argument("--out", "-o", required=True)
    p.set_defaults(func=cmd_render)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    args._defaults = {a.dest: a.default for a in ap._subparsers._group_actions[0].choices[args.command]._actions}
    try:
        return args.func(args)
    except (UsageError, dyn.ConfigError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (model.CurveError, orbits.SearchFailure, dyn.IntegrationError, dyn.SingularityError,
            ArithmeticError, orbits.NotGeneric) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
