"""Scenario-driven command line entry point.

Subcommands: analyze-potential | solve-front | simulate | fit-terrace | verify.
Exit codes: 0 success, 1 failure (criterion or runtime error, with a
structured JSON error report on stderr), 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import diagnostics as dg
from . import terrace as terrace_mod
from .errors import FrontlabError, ScenarioError
from .frontsolver import (
    find_bistable_speed_scalar,
    load_profile,
    save_profile,
)
from .pdesim import (
    run,
    read_snapshots_ndjson,
    sup_norm_hook as pdesim_sup_norm_hook,
    write_snapshots_ndjson,
)
from .potential import Potential, analyze_potential
from .scenario import load_scenario
from .verify import run_all


def _fail(module, operation, exc, code=1):
    report = {
        "module": module,
        "operation": operation,
        "error": type(exc).__name__,
        "message": str(exc),
    }
    print(json.dumps(report), file=sys.stderr)
    return code


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(obj, path):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2)


def cmd_analyze_potential(args):
    try:
        if args.scenario:
            sc = load_scenario(args.scenario)
            pot = sc.potential
        elif args.potential:
            pot = Potential.load(args.potential)
        else:
            raise ScenarioError("need --scenario or --potential")
    except (ScenarioError, OSError, KeyError, ValueError) as exc:
        return _fail("potential", "analyze-potential", exc, 2)
    try:
        analysis = analyze_potential(pot)
        out = _ensure_out(args.out)
        _write_json(analysis.to_dict(), os.path.join(out, "analysis.json"))
        print(f"analysis written to {out}/analysis.json "
              f"({len(analysis.minima)} minima, d_esc={analysis.d_esc!r})")
        return 0
    except FrontlabError as exc:
        return _fail("potential", "analyze-potential", exc)


def cmd_solve_front(args):
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        return _fail("scenario", "solve-front", exc, 2)
    try:
        pot = sc.potential
        if pot.n != 1:
            raise ScenarioError("solve-front shooting path is scalar-only")
        analysis = analyze_potential(pot)
        out = _ensure_out(args.out)
        minima = sorted(analysis.minima, key=lambda m: float(m.location[0]))
        index = []
        for lo, hi in zip(minima[:-1], minima[1:]):
            # the lower well invades the higher one
            if lo.value <= hi.value:
                m_minus, m_plus = lo, hi
            else:
                m_minus, m_plus = hi, lo
            c, prof = find_bistable_speed_scalar(
                pot, float(m_minus.location[0]), float(m_plus.location[0]),
                (0.0, args.c_max), d_esc=analysis.d_esc, alpha=sc.alpha)
            name = (f"front_{m_minus.location[0]:+.3f}"
                    f"_to_{m_plus.location[0]:+.3f}.csv")
            save_profile(prof, os.path.join(out, name))
            index.append({"file": name, "c": c,
                          "s": prof.s,
                          "m_minus": float(m_minus.location[0]),
                          "m_plus": float(m_plus.location[0])})
            print(f"{name}: c={c!r} s={prof.s!r}")
        _write_json(index, os.path.join(out, "fronts.json"))
        return 0
    except FrontlabError as exc:
        return _fail("frontsolver", "solve-front", exc)


def _escape_hooks(sc, analysis, constants, pot):
    m = np.atleast_1d(np.asarray(
        sc.track_minimum if sc.track_minimum is not None
        else analysis.minima[0].location, dtype=float))
    x_hom = sc.domain[1] - sc.x_hom_offset
    d_esc = analysis.d_esc

    def x_esc_hook(view):
        try:
            _, xe = dg.escape_points(view, m, x_hom, constants, pot)
            return xe
        except FrontlabError:
            return math.nan

    def x_esc_big_hook(view):
        amp = np.linalg.norm(view.u - m[None, :], axis=1)
        mask = (view.x <= x_hom) & (amp >= d_esc)
        return float(view.x[mask][-1]) if np.any(mask) else -math.inf

    hooks = {"x_Esc": x_esc_big_hook}
    if sc.alpha > 0 and math.isfinite(constants.L):
        hooks["x_esc"] = x_esc_hook
    return hooks, m, x_hom


def cmd_simulate(args):
    try:
        sc = load_scenario(args.scenario)
    except (ScenarioError, OSError) as exc:
        return _fail("scenario", "simulate", exc, 2)
    try:
        pot = sc.potential
        analysis = analyze_potential(pot)
        dt = sc.validate(lam_max=analysis.lam_max, minima=analysis.minima)
        constants = dg.compute_constants(analysis, sc.alpha)
        out = _ensure_out(args.out)
        state = sc.build_state()
        hooks, m, x_hom = _escape_hooks(sc, analysis, constants, pot)
        hooks["E"] = lambda v: dg.global_energy(v, pot)
        hooks["D"] = dg.dissipation_rate
        hooks["sup_u"] = pdesim_sup_norm_hook
        times = sc.snapshot_times
        if sc.snapshot_triples:
            times = sorted({round(b + k * dt, 9) for b in times
                            for k in (-1, 0, 1) if b + k * dt >= 0})
        record = run(state, pot, dt, sc.t_final, snapshot_times=times,
                     hooks=hooks, hook_interval=sc.hook_interval)

        write_snapshots_ndjson(record.snapshots,
                               os.path.join(out, "snapshots.ndjson"))
        _write_series_csv(record, os.path.join(out, "series.csv"))
        _write_diagnostics_csv(record, analysis, constants, pot, m, x_hom,
                               os.path.join(out, "diagnostics.csv"))
        if sc.frames:
            _write_frame_reports(record, sc, constants, pot, m,
                                 os.path.join(out, "frames.json"))
        _write_json({
            "scenario": os.path.abspath(args.scenario),
            "dt": dt,
            "aborted": record.aborted,
            "snapshots": len(record.snapshots),
            "sup_u_max": float(np.max(record.series["sup_u"]))
            if len(record.series.get("sup_u", [])) else math.nan,
            "r_att_inf": analysis.r_att_inf,
        }, os.path.join(out, "run.json"))
        print(f"run complete: {len(record.snapshots)} snapshots -> {out}")
        return 0
    except FrontlabError as exc:
        return _fail("pdesim", "simulate", exc)


def _write_series_csv(record, path):
    names = [k for k in record.series if k != "t"]
    t = record.series["t"]
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t"] + names)
        for i in range(len(t)):
            w.writerow([repr(float(t[i]))]
                       + [repr(float(record.series[k][i])) for k in names])


def _write_diagnostics_csv(record, analysis, constants, pot, m, x_hom, path):
    rows = []
    xe_track = []
    for snap in record.snapshots:
        E = dg.global_energy(snap, pot)
        D = dg.dissipation_rate(snap)
        try:
            xE, xe = dg.escape_points(snap, m, x_hom, constants, pot)
        except FrontlabError:
            xE, xe = math.nan, math.nan
        if math.isfinite(xe):
            Q0, F0 = dg.firewall_Q0_F0(snap, m, pot, constants)
            k = int(round((xe - snap.x0) / snap.dx))
            f0_at, q0_at = float(F0[k]), float(Q0[k])
        else:
            f0_at, q0_at = math.nan, math.nan
        xe_track.append((snap.t, xe))
        good = [(tt, xx) for tt, xx in xe_track if math.isfinite(xx)]
        if len(good) >= 10:
            tt = np.asarray([g[0] for g in good])
            xx = np.asarray([g[1] for g in good])
            s_fit = float(np.polyfit(tt, xx, 1)[0])
        else:
            s_fit = math.nan
        try:
            s_ref = s_fit if math.isfinite(s_fit) else 0.0
            delta = dg.dissipation_delta(record.snapshots, snap.t, xe, s_ref)
        except FrontlabError:
            delta = math.nan
        rows.append([snap.t, E, D, f0_at, q0_at, xE, xe, s_fit, delta])
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t", "E", "D", "F0_at_xesc", "Q0_at_xesc", "x_Esc",
                    "x_esc", "s_fit", "delta_dissip"])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def _write_frame_reports(record, sc, constants, pot, m, path):
    out = {}
    for fr in sc.frames:
        frame = dg.FrameSpec(c=float(fr["c"]), alpha=sc.alpha,
                             t_init=float(fr.get("t_init", 0.0)),
                             x_init=float(fr.get("x_init", 0.0)),
                             z_init=float(fr.get("z_init", 0.0)),
                             c_cut=float(fr.get("c_cut", constants.c_cut)))
        reports = dg.frame_series(record, frame, constants, pot, m)
        key = f"c={frame.c!r},t_init={frame.t_init!r}"
        out[key] = [{
            "s": r.s, "E": r.E, "dE_ds": r.dE_ds, "D": r.D, "F": r.F,
            "Q": r.Q, "G": r.G, "norm_log": r.norm_log,
        } for r in reports]
    _write_json(out, path)


def cmd_fit_terrace(args):
    try:
        sc = load_scenario(args.scenario)
        snaps_path = args.snapshots or os.path.join(args.out, "snapshots.ndjson")
        library_dir = args.library or os.path.join(args.out, "fronts")
        snapshots = read_snapshots_ndjson(snaps_path)
        with open(os.path.join(library_dir, "fronts.json")) as f:
            index = json.load(f)
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        return _fail("terrace", "fit-terrace", exc, 2)
    try:
        pot = sc.potential
        analysis = analyze_potential(pot)
        library = [load_profile(os.path.join(library_dir, e["file"]))
                   for e in index]
        out = _ensure_out(args.out)
        # the fit consumes the last third of the recorded run
        t_max = max(s.t for s in snapshots)
        t_min = min(s.t for s in snapshots)
        snapshots = [s for s in snapshots
                     if s.t >= t_max - (t_max - t_min) / 3.0 - 1e-9]
        eps = sc.eps_grid[0] if sc.eps_grid else None
        behind = None
        for side in ("right", "left"):
            try:
                fit = terrace_mod.fit_terrace(snapshots, analysis, library,
                                              side, eps=None, alpha=sc.alpha)
            except FrontlabError as exc:
                fit = None
                _write_json({"error": str(exc)},
                            os.path.join(out, f"terrace_{side}.json"))
                continue
            _write_json(fit.to_dict(), os.path.join(out, f"terrace_{side}.json"))
            if side == "right" and fit.terrace is not None:
                behind = fit.terrace.minima[-1]
            print(f"{side}: q={fit.terrace.q if fit.terrace else '?'} "
                  f"passed={fit.passed} residual={fit.global_residual:.3e}")
        if behind is None:
            behind = analysis.minima[0].location
        h = float(pot.value(np.atleast_1d(behind)))
        # eps sensitivity over the configured grid
        center = {}
        for e in (sc.eps_grid or [0.05]):
            cr = terrace_mod.center_report(snapshots, e, h, pot)
            center[repr(float(e))] = {
                "dissipation_tail": cr.dissipation_tail,
                "residual_tail": cr.residual_tail,
            }
        _write_json({"h": h, "eps": center}, os.path.join(out, "center.json"))
        print(f"center report -> {out}/center.json (eps={eps})")
        return 0
    except FrontlabError as exc:
        return _fail("terrace", "fit-terrace", exc)


def cmd_verify(args):
    results, ok = run_all(threads=args.threads, strict=args.strict)
    width = max(len(r.name) for r in results)
    print(f"{'#':>2} {'criterion':<{width}} {'status':<6} measured | expected")
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.cid:>2} {r.name:<{width}} {status:<6} "
              f"{r.measured} | {r.expected} [{r.runtime:.1f}s]")
    if args.out:
        out = _ensure_out(args.out)
        _write_json([r.__dict__ for r in results],
                    os.path.join(out, "verify.json"))
    print("ALL PASS" if ok else "FAILURES PRESENT")
    return 0 if ok else 1


def build_parser():
    p = argparse.ArgumentParser(
        prog="frontlab",
        description="Numerical laboratory for damped hyperbolic gradient "
                    "systems: fronts, energy diagnostics, terraces.")
    sub = p.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze-potential",
                        help="critical points and scalar constants")
    pa.add_argument("--scenario", help="scenario file providing the potential")
    pa.add_argument("--potential", help="potential JSON file")
    pa.add_argument("--out", default="out", help="output directory")
    pa.set_defaults(fn=cmd_analyze_potential)

    pf = sub.add_parser("solve-front",
                        help="bistable fronts for all adjacent minima pairs")
    pf.add_argument("--scenario", required=True)
    pf.add_argument("--out", default="out")
    pf.add_argument("--c-max", type=float, default=3.0,
                    help="upper end of the speed bracket")
    pf.set_defaults(fn=cmd_solve_front)

    ps = sub.add_parser("simulate", help="time-integrate a scenario")
    ps.add_argument("--scenario", required=True)
    ps.add_argument("--out", default="out")
    ps.set_defaults(fn=cmd_simulate)

    pt = sub.add_parser("fit-terrace",
                        help="fit terraces to a recorded run")
    pt.add_argument("--scenario", required=True)
    pt.add_argument("--out", default="out")
    pt.add_argument("--snapshots", help="NDJSON snapshot archive "
                                        "(default <out>/snapshots.ndjson)")
    pt.add_argument("--library", help="front archive directory "
                                      "(default <out>/fronts)")
    pt.set_defaults(fn=cmd_fit_terrace)

    pv = sub.add_parser("verify", help="run the acceptance suite")
    pv.add_argument("--out", default=None)
    pv.add_argument("--threads", type=int, default=1)
    pv.add_argument("--strict", action="store_true",
                    help="drop the discretization slack from lemma checks")
    pv.set_defaults(fn=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on bad usage already
        raise exc
    try:
        return args.fn(args)
    except ScenarioError as exc:
        return _fail("scenario", args.command, exc, 2)
    except FrontlabError as exc:
        return _fail("frontlab", args.command, exc, 1)


if __name__ == "__main__":
    sys.exit(main())
