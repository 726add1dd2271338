"""The bundled acceptance scenarios and their pass/fail evaluation.

Each criterion function takes the shared VerifyContext (which lazily builds
and caches the solved fronts and simulation runs) and returns a
CriterionResult. `run_all` executes everything and is what the CLI `verify`
subcommand prints.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from . import diagnostics as dg
from . import terrace
from .frontsolver import (
    find_bistable_speed_scalar,
    normalize_profile,
    solve_profile_system,
    speed_convert,
    tail_decay_rate,
)
from .pdesim import FieldState, InitialCondition, Snapshot, init_state, run
from .potential import analyze_potential, builtin_potential

__all__ = ["CriterionResult", "VerifyContext", "run_all", "CRITERIA"]

# additive discretization slack for the lemma inequalities: the continuum
# statements hold exactly; on the grid we allow C (dt^2 + dx^2) with C frozen
# from a one-time refinement study on the Nagumo scenario
SLACK_C = 5.0


@dataclass
class CriterionResult:
    cid: int
    name: str
    passed: bool
    measured: str
    expected: str
    runtime: float = 0.0
    detail: str = ""


def _result(cid, name, passed, measured, expected, t0, detail=""):
    return CriterionResult(cid, name, bool(passed), measured, expected,
                           runtime=time.time() - t0, detail=detail)


class VerifyContext:
    """Lazily built shared assets: analyses, constants, fronts, runs."""

    def __init__(self, slack_c=SLACK_C):
        self._cache = {}
        self.slack_c = slack_c
        # the runtime bounds are single-threaded statements; when the base
        # runs are prebuilt concurrently their wall clocks include contention
        # and the bounds are not comparable
        self.timing_reliable = True

    def _get(self, key, builder):
        if key not in self._cache:
            self._cache[key] = builder()
        return self._cache[key]

    # -- potentials ---------------------------------------------------------

    def nagumo(self):
        return self._get("nagumo", lambda: builtin_potential("nagumo", a=0.25))

    def allen_cahn(self):
        return self._get("allen_cahn", lambda: builtin_potential("allen_cahn"))

    def triple_well(self):
        return self._get("triple_well",
                         lambda: builtin_potential("triple_well", h1=0.12, h2=0.18))

    def analysis(self, name):
        return self._get(f"analysis:{name}",
                         lambda: analyze_potential(getattr(self, name)()))

    def constants(self, name, alpha):
        return self._get(f"constants:{name}:{alpha}",
                         lambda: dg.compute_constants(self.analysis(name), alpha))

    # -- fronts -------------------------------------------------------------

    def nagumo_front(self):
        def build():
            an = self.analysis("nagumo")
            c, prof = find_bistable_speed_scalar(
                self.nagumo(), 1.0, 0.0, (0.0, 2.0), d_esc=an.d_esc, alpha=1.0)
            return c, prof
        return self._get("front:nagumo", build)

    def ac_wall(self):
        def build():
            an = self.analysis("allen_cahn")
            prof = solve_profile_system(self.allen_cahn(), [-1.0], [1.0],
                                        c=0.0, num_nodes=4001, alpha=1.0)
            return normalize_profile(prof, an.d_esc)
        return self._get("front:ac_wall", build)

    def tw_fronts(self):
        def build():
            an = self.analysis("triple_well")
            tw = self.triple_well()
            c1, p1 = find_bistable_speed_scalar(tw, 0.0, 1.0, (0.0, 3.0),
                                                d_esc=an.d_esc, alpha=1.0)
            c2, p2 = find_bistable_speed_scalar(tw, -1.0, 0.0, (0.0, 3.0),
                                                d_esc=an.d_esc, alpha=1.0)
            return (c1, p1), (c2, p2)
        return self._get("front:tw", build)

    # -- runs ---------------------------------------------------------------

    def run_c1(self):
        """Nagumo, alpha=1, dx=0.05, dt=0.01, [-100,100], T=50; per-step
        energy/dissipation hooks and snapshot triples every 5 time units."""
        def build():
            ng = self.nagumo()
            ic = InitialCondition(plateaus=[[1.0], [0.0]], interfaces=[0.0],
                                  width=1.0)
            st = init_state(-100, 100, 0.05, ic, 1.0)
            dt = 0.01
            bases = np.arange(5.0, 50.0 + 0.1, 5.0)
            times = sorted({round(b + k * dt, 6) for b in bases
                            for k in (-1, 0, 1)})
            hooks = {"E": lambda v: dg.global_energy(v, ng),
                     "D": dg.dissipation_rate}
            t0 = time.time()
            rec = run(st, ng, dt, 50.0, snapshot_times=times, hooks=hooks,
                      hook_interval=1)
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:c1", build)

    def run_nagumo_hyp(self):
        """Nagumo, alpha=1, T=150, escape tracking and late snapshots."""
        def build():
            ng = self.nagumo()
            an = self.analysis("nagumo")
            cst = self.constants("nagumo", 1.0)
            ic = InitialCondition(plateaus=[[1.0], [0.0]], interfaces=[0.0],
                                  width=1.0)
            st = init_state(-100, 100, 0.05, ic, 1.0)

            def esc_hook(view):
                xE, xe = dg.escape_points(view, [0.0], 92.0, cst, ng)
                return xe

            def esc_big_hook(view):
                amp = np.abs(view.u[:, 0])
                mask = (view.x <= 92.0) & (amp >= an.d_esc)
                return float(view.x[mask][-1]) if np.any(mask) else -math.inf

            times = list(np.arange(100.0, 150.0 + 0.1, 2.0))
            t0 = time.time()
            rec = run(st, ng, 0.01, 150.0, snapshot_times=times,
                      hooks={"x_esc": esc_hook, "x_Esc": esc_big_hook},
                      hook_interval=10)
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:nagumo_hyp", build)

    def run_nagumo_par(self):
        """Nagumo, alpha=0 (parabolic), T=120, escape-distance tracking."""
        def build():
            ng = self.nagumo()
            an = self.analysis("nagumo")
            ic = InitialCondition(plateaus=[[1.0], [0.0]], interfaces=[0.0],
                                  width=1.0)
            st = init_state(-100, 100, 0.05, ic, 0.0)

            def esc_big_hook(view):
                amp = np.abs(view.u[:, 0])
                mask = (view.x <= 92.0) & (amp >= an.d_esc)
                return float(view.x[mask][-1]) if np.any(mask) else -math.inf

            times = list(np.arange(80.0, 120.0 + 0.1, 4.0))
            t0 = time.time()
            rec = run(st, ng, 0.001, 120.0, snapshot_times=times,
                      hooks={"x_Esc": esc_big_hook}, hook_interval=100)
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:nagumo_par", build)

    def run_tw(self):
        """Two-front triple-well scenario, T=130."""
        def build():
            tw = self.triple_well()
            ic = InitialCondition(plateaus=[[-1.0], [0.0], [1.0]],
                                  interfaces=[-10.0, 10.0], width=1.0)
            st = init_state(-70, 100, 0.05, ic, 1.0)
            dt = 0.01
            fit_times = list(np.arange(87.0, 130.0 + 0.1, 2.0))
            bases = [40.0, 80.0, 120.0]
            triples = sorted({round(b + k * dt, 6) for b in bases
                              for k in (-1, 0, 1)})
            t0 = time.time()
            rec = run(st, tw, dt, 130.0,
                      snapshot_times=sorted(set(fit_times + triples)))
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:tw", build)

    def run_wall(self):
        """Allen-Cahn double wall at +-5, T=300."""
        def build():
            ac = self.allen_cahn()
            ic = InitialCondition(plateaus=[[-1.0], [1.0], [-1.0]],
                                  interfaces=[-5.0, 5.0], width=1.0)
            st = init_state(-60, 60, 0.05, ic, 1.0)
            dt = 0.01
            bases = np.arange(5.0, 300.0 + 0.1, 5.0)
            times = sorted({round(b + k * dt, 6) for b in bases
                            for k in (-1, 0, 1)} | {0.0})
            t0 = time.time()
            rec = run(st, ac, dt, 300.0, snapshot_times=times)
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:wall", build)

    def run_perturbed(self):
        """Co-moving Nagumo front plus a 0.05 bump, T=20, dense snapshots."""
        def build():
            ng = self.nagumo()
            c_star, prof = self.nagumo_front()
            gamma = math.sqrt(1 + c_star ** 2)
            dx = 0.05
            x = np.arange(-100.0, 100.0 + dx / 2, dx)
            sp = CubicSpline(prof.xi, prof.phi[:, 0])
            spd = CubicSpline(prof.xi, prof.dphi[:, 0])
            z = np.clip(gamma * x, prof.xi[0], prof.xi[-1])
            u = np.where(gamma * x < prof.xi[0], 1.0,
                         np.where(gamma * x > prof.xi[-1], 0.0, sp(z)))
            du = np.where((gamma * x >= prof.xi[0]) & (gamma * x <= prof.xi[-1]),
                          spd(z), 0.0)
            u = u + 0.05 * np.exp(-0.25 * x ** 2)
            st = FieldState(
                x0=x[0], dx=dx, u=u[:, None], t=0.0, alpha=1.0,
                u_t0=(-c_star * du)[:, None],
                m_left=np.array([1.0]), m_right=np.array([0.0]))
            times = list(np.arange(0.0, 20.0 + 0.1, 1.0))
            t0 = time.time()
            rec = run(st, ng, 0.01, 20.0, snapshot_times=times)
            rec.wall_time = time.time() - t0
            return rec
        return self._get("run:perturbed", build)


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------

def criterion_1(ctx):
    """Energy dissipation identity along the Nagumo run."""
    t0 = time.time()
    rec = ctx.run_c1()
    E, D = rec.series["E"], rec.series["D"]
    dt = rec.dt
    dEdt = (E[2:] - E[:-2]) / (2 * dt)
    resid = np.abs(dEdt + D[1:-1])
    tol = 1e-3 * np.maximum(1.0, D[1:-1])
    frac = float(np.mean(resid <= tol))
    ok = frac >= 0.99 and (rec.wall_time < 60.0 or not ctx.timing_reliable)
    return _result(1, "energy dissipation identity", ok,
                   f"{100 * frac:.2f}% of steps, {rec.wall_time:.1f}s",
                   ">=99% within 1e-3*max(1,D), <60s", t0)


def criterion_2(ctx):
    """Front speed measurement and the parabolic/physical conversion."""
    t0 = time.time()
    rec_h = ctx.run_nagumo_hyp()
    rec_p = ctx.run_nagumo_par()
    est_h = dg.estimate_invasion_speed(rec_h.series["t"], rec_h.series["x_esc"])
    est_p = dg.estimate_invasion_speed(rec_p.series["t"], rec_p.series["x_Esc"])
    s_fit, c_fit = est_h.s_fit, est_p.s_fit
    c_exact = 0.25 * math.sqrt(2.0)
    ok_s = abs(s_fit - 1.0 / 3.0) <= 0.01 / 3.0
    ok_c = abs(c_fit - c_exact) <= 0.01 * c_exact
    ok_conv = abs(s_fit - speed_convert(c_fit, 1.0)) <= 1e-2
    wall = rec_h.wall_time + rec_p.wall_time
    ok = ok_s and ok_c and ok_conv and (wall < 180.0
                                        or not ctx.timing_reliable)
    return _result(2, "front speed and conversion", ok,
                   f"s_fit={s_fit:.5f}, c_fit={c_fit:.5f}, "
                   f"|s-conv(c)|={abs(s_fit - speed_convert(c_fit, 1.0)):.1e}, "
                   f"{wall:.0f}s",
                   "1/3 +-1%, 0.35355 +-1%, <=1e-2, <180s", t0)


def criterion_3(ctx):
    """Stationary wall energy against the closed-form value."""
    t0 = time.time()
    prof = ctx.ac_wall()
    snap = Snapshot(t=0.0, x0=float(prof.xi[0]), dx=prof.dxi,
                    u=prof.phi.copy(), ut=np.zeros_like(prof.phi), alpha=1.0)
    E = dg.global_energy(snap, ctx.allen_cahn())
    target = 2.0 * math.sqrt(2.0) / 3.0
    ok = abs(E - target) <= 0.005 * target
    return _result(3, "stationary wall energy", ok,
                   f"E={E:.6f}", f"{target:.6f} +-0.5%", t0)


def _q0_counterexamples(snapshots, m, potential, constants):
    bad = 0
    for snap in snapshots:
        Q0, _ = dg.firewall_Q0_F0(snap, m, potential, constants)
        amp = np.linalg.norm(snap.u - np.atleast_1d(m)[None, :], axis=1)
        bad += int(np.sum((Q0 <= constants.d_esc_q0 ** 2)
                          & (amp > constants.d_esc + 1e-12)))
    return bad


def criterion_4(ctx):
    """Q0 controls u: no counterexamples on the criterion-1/2 snapshots."""
    t0 = time.time()
    ng = ctx.nagumo()
    bad = _q0_counterexamples(ctx.run_c1().snapshots, [0.0], ng,
                              ctx.constants("nagumo", 1.0))
    bad += _q0_counterexamples(ctx.run_nagumo_hyp().snapshots, [0.0], ng,
                               ctx.constants("nagumo", 1.0))
    bad += _q0_counterexamples(ctx.run_nagumo_par().snapshots, [0.0], ng,
                               ctx.constants("nagumo", 0.0))
    return _result(4, "Q0 controls u", bad == 0,
                   f"{bad} counterexamples", "0 counterexamples", t0)


def criterion_5(ctx):
    """Subsonic cap on every measured invasion speed."""
    t0 = time.time()
    checks = []
    rec_h = ctx.run_nagumo_hyp()
    s_h = dg.estimate_invasion_speed(rec_h.series["t"],
                                     rec_h.series["x_esc"]).s_fit
    checks.append(("nagumo_hyp", s_h, ctx.constants("nagumo", 1.0).s_max))
    rec_p = ctx.run_nagumo_par()
    s_p = dg.estimate_invasion_speed(rec_p.series["t"],
                                     rec_p.series["x_Esc"]).s_fit
    checks.append(("nagumo_par", s_p, ctx.constants("nagumo", 0.0).s_max))
    fit = _tw_fit(ctx)
    cst_tw = ctx.constants("triple_well", 1.0)
    for i, s in enumerate(fit.measured_speeds):
        checks.append((f"tw_front{i + 1}", s, cst_tw.s_max))
    rep = _wall_report(ctx)
    cst_ac = ctx.constants("allen_cahn", 1.0)
    checks.append(("wall_plus", abs(rep.esc_speed_plus), cst_ac.s_max))
    checks.append(("wall_minus", abs(rep.esc_speed_minus), cst_ac.s_max))
    ok = all(s <= cap + 0.01 for _, s, cap in checks)
    worst = max(checks, key=lambda c: c[1] - c[2])
    return _result(5, "invasion speed subsonic cap", ok,
                   f"worst {worst[0]}: {worst[1]:.4f} vs cap {worst[2]:.4f}",
                   "every speed <= s_max + 0.01", t0)


def _exact_front_snapshots(ctx, dx, ts):
    ng = ctx.nagumo()
    c_star, prof = ctx.nagumo_front()
    gamma = math.sqrt(1 + c_star ** 2)
    x = np.arange(-80.0, 80.0 + dx / 2, dx)
    sp = CubicSpline(prof.xi, prof.phi[:, 0])
    spd = CubicSpline(prof.xi, prof.dphi[:, 0])
    out = []
    for t in ts:
        zz = gamma * x - c_star * t
        zc = np.clip(zz, prof.xi[0], prof.xi[-1])
        u = np.where(zz < prof.xi[0], 1.0,
                     np.where(zz > prof.xi[-1], 0.0, sp(zc)))
        du = np.where((zz >= prof.xi[0]) & (zz <= prof.xi[-1]), spd(zc), 0.0)
        out.append(Snapshot(t=t, x0=x[0], dx=dx, u=u[:, None],
                            ut=(-c_star * du)[:, None], alpha=1.0))
    return out


def criterion_6(ctx):
    """Travelling-frame energy decay: exact co-moving front and a perturbed one."""
    t0 = time.time()
    ng = ctx.nagumo()
    cst = ctx.constants("nagumo", 1.0)
    c_star, _ = ctx.nagumo_front()
    frame = dg.FrameSpec(c=c_star, alpha=1.0, t_init=0.0, x_init=0.0,
                         z_init=15.0, c_cut=cst.c_cut)
    # refinement halving dx = 0.05 -> 0.025
    vals = {}
    for dx in (0.05, 0.025):
        s1, s2 = _exact_front_snapshots(ctx, dx, [0.0, 0.5])
        rep = dg.traveling_frame_report(s1, s2, frame, cst, ng, [0.0])
        vals[dx] = (abs(rep.dE_ds), rep.D)
    ok_exact = vals[0.025][0] <= 1e-4 and vals[0.025][1] <= 1e-6

    rec = ctx.run_perturbed()
    reports = dg.frame_series(rec, frame, cst, ng, [0.0])
    D_int = float(np.trapezoid([r.D for r in reports],
                               [r.s for r in reports]))
    E = np.asarray([reports[0].E_prev] + [r.E for r in reports])
    slack = ctx.slack_c * (rec.dt ** 2 + rec.dx ** 2)
    mono = bool(np.all(np.diff(E) <= slack))
    ok = ok_exact and D_int > 0 and mono
    return _result(6, "travelling-frame energy decay", ok,
                   f"|dE/ds|={vals[0.025][0]:.2e}, D={vals[0.025][1]:.2e}, "
                   f"int D={D_int:.3e}, E monotone={mono}",
                   "<=1e-4, <=1e-6, >0, decreasing within slack", t0)


def _nagumo_fit(ctx):
    def build():
        rec = ctx.run_nagumo_hyp()
        an = ctx.analysis("nagumo")
        _, prof = ctx.nagumo_front()
        return terrace.fit_terrace(rec.snapshots, an, [prof], "right",
                                   eps=None, alpha=1.0)
    return ctx._get("fit:nagumo", build)


def criterion_7(ctx):
    """Single-front terrace fit plus the center dissipation limit."""
    t0 = time.time()
    fit = _nagumo_fit(ctx)
    rec = ctx.run_nagumo_hyp()
    ng = ctx.nagumo()
    h = float(ng.value(np.array([1.0])))
    eps = 0.05 * min(fit.measured_speeds) if fit.measured_speeds else 0.05
    cr = terrace.center_report(rec.snapshots, eps, h, ng)
    ok = (fit.passed and fit.terrace is not None and fit.terrace.q == 1
          and fit.global_residual < 0.02
          and cr.sup_window_dissipation[-1] < 1e-4)
    return _result(7, "theorem-1 single front", ok,
                   f"q={fit.terrace.q if fit.terrace else '?'}, "
                   f"resid={fit.global_residual:.2e}, "
                   f"center D={cr.sup_window_dissipation[-1]:.2e}",
                   "PASS q=1, resid<0.02, center<1e-4", t0)


def _tw_fit(ctx):
    def build():
        rec = ctx.run_tw()
        an = ctx.analysis("triple_well")
        (c1, p1), (c2, p2) = ctx.tw_fronts()
        snaps = [s for s in rec.snapshots if s.t >= 87.0 - 1e-9]
        return terrace.fit_terrace(snaps, an, [p1, p2], "right", eps=None,
                                   alpha=1.0)
    return ctx._get("fit:tw", build)


def criterion_8(ctx):
    """Two-front terrace: ordering and growing separation."""
    t0 = time.time()
    rec = ctx.run_tw()
    fit = _tw_fit(ctx)
    ok = fit.passed and fit.terrace is not None and fit.terrace.q == 2
    detail = ""
    if ok:
        c1, c2 = fit.terrace.c
        ok = ok and c1 >= c2 > 0
        gaps = [g[0] for _, g in fit.separation_series]
        half = len(gaps) // 2
        grow = all(b > a for a, b in zip(gaps[half:], gaps[half + 1:]))
        ok = ok and grow
        detail = f"c=({c1:.4f},{c2:.4f}), gap {gaps[0]:.1f}->{gaps[-1]:.1f}"
        # nothing invades leftward here: the left terrace is the constant one,
        # and the two terraces leave equal potential values behind
        an = ctx.analysis("triple_well")
        (c1f, p1), (c2f, p2) = ctx.tw_fronts()
        snaps = [s for s in rec.snapshots if s.t >= 87.0 - 1e-9]
        fit_left = terrace.fit_terrace(snaps, an, [p1, p2], "left", eps=0.008,
                                       alpha=1.0)
        ok = ok and fit_left.passed and fit_left.terrace.q == 0
        tw = ctx.triple_well()
        v_left_behind = float(tw.value(np.atleast_1d(
            fit_left.terrace.minima[-1])))
        v_right_behind = float(tw.value(np.atleast_1d(
            fit.terrace.minima[-1])))
        ok = ok and abs(v_left_behind - v_right_behind) <= 1e-8
        detail += f", left q={fit_left.terrace.q}"
    ok = ok and (rec.wall_time < 600.0 or not ctx.timing_reliable)
    return _result(8, "theorem-1 two fronts", ok,
                   f"q={fit.terrace.q if fit.terrace else '?'}, "
                   f"resid={fit.global_residual:.2e}, {detail}, "
                   f"{rec.wall_time:.0f}s",
                   "PASS q=2, c1>=c2, gaps grow, left q=0, <600s", t0)


def _wall_report(ctx):
    def build():
        rec = ctx.run_wall()
        cst = ctx.constants("allen_cahn", 1.0)
        return dg.standing_relaxation_report(
            rec.snapshots, [-1.0], [-1.0], cst, ctx.allen_cahn())
    return ctx._get("report:wall", build)


def criterion_9(ctx):
    """Nonnegative residual asymptotic energy of the double wall."""
    t0 = time.time()
    rec = ctx.run_wall()
    ac = ctx.allen_cahn()
    cr = terrace.center_report(rec.snapshots, 0.05, 0.0, ac)
    target = 4.0 * math.sqrt(2.0) / 3.0
    ok = (abs(cr.residual_tail - target) <= 0.02 * target
          and float(cr.residual_energy.min()) >= -5e-3)
    return _result(9, "residual asymptotic energy", ok,
                   f"tail={cr.residual_tail:.5f}, min={cr.residual_energy.min():.1e}",
                   f"{target:.5f} +-2%, >=-5e-3", t0)


def _firewall_fractions(snapshots, m, potential, constants, dt, dx,
                        slack_c=SLACK_C):
    """Violation fractions for coercivity/decrease/Q0-growth on snapshot
    triples (consecutive records spaced dt around the checked time)."""
    slack = slack_c * (dt ** 2 + dx ** 2)
    tot = viol_c = viol_d = viol_q = 0
    i = 0
    while i + 2 < len(snapshots):
        trio = snapshots[i:i + 3]
        if abs(trio[1].t - trio[0].t - dt) > 1e-9 \
                or abs(trio[2].t - trio[1].t - dt) > 1e-9:
            i += 1
            continue
        sm1, s0, sp1 = trio
        Q0m, F0m = dg.firewall_Q0_F0(sm1, m, potential, constants)
        Q0, F0 = dg.firewall_Q0_F0(s0, m, potential, constants)
        Q0p, F0p = dg.firewall_Q0_F0(sp1, m, potential, constants)
        pol = dg.escape_region_mass(s0, m, constants)
        tot += len(Q0)
        viol_c += int(np.sum(
            F0 < constants.eps_f0_coerc * Q0 - constants.K_f0_coerc * pol
            - slack))
        dF = (F0p - F0m) / (2 * dt)
        viol_d += int(np.sum(
            dF > -constants.eps_f0_decr * F0 + constants.K_f0_decr * pol
            + slack))
        dQ = (Q0p - Q0m) / (2 * dt)
        viol_q += int(np.sum(dQ > constants.K_q0_growth + slack))
        i += 3
    if tot == 0:
        return 1.0, 1.0, 1.0
    return viol_c / tot, viol_d / tot, viol_q / tot


def criterion_10(ctx):
    """Firewall lemma suite with calibrated slack."""
    t0 = time.time()
    fracs = []
    ng = ctx.nagumo()
    rec = ctx.run_c1()
    fracs += list(_firewall_fractions(rec.snapshots, [0.0], ng,
                                      ctx.constants("nagumo", 1.0),
                                      rec.dt, rec.dx, ctx.slack_c))
    tw = ctx.triple_well()
    rec_tw = ctx.run_tw()
    trios = [s for s in rec_tw.snapshots
             if any(abs(s.t - b - k * rec_tw.dt) < 1e-9
                    for b in (40.0, 80.0, 120.0) for k in (-1, 0, 1))]
    fracs += list(_firewall_fractions(trios, [1.0], tw,
                                      ctx.constants("triple_well", 1.0),
                                      rec_tw.dt, rec_tw.dx, ctx.slack_c))
    rec_w = ctx.run_wall()
    trios_w = [s for s in rec_w.snapshots if s.t > 0.0]
    fracs += list(_firewall_fractions(trios_w, [-1.0], ctx.allen_cahn(),
                                      ctx.constants("allen_cahn", 1.0),
                                      rec_w.dt, rec_w.dx, ctx.slack_c))
    worst = max(fracs)

    rep = _wall_report(ctx)
    slack_w = ctx.slack_c * (rec_w.dt ** 2 + rec_w.dx ** 2)
    env_ok = bool(np.all(rep.F_plus <= rep.envelope + slack_w)
                  and np.all(rep.F_minus <= rep.envelope + slack_w))

    # travelling-frame relaxation inequality on the perturbed-front run
    cst = ctx.constants("nagumo", 1.0)
    c_star, _ = ctx.nagumo_front()
    frame = dg.FrameSpec(c=c_star, alpha=1.0, t_init=0.0, x_init=0.0,
                         z_init=15.0, c_cut=cst.c_cut)
    rec_p = ctx.run_perturbed()
    reports = dg.frame_series(rec_p, frame, cst, ng, [0.0])
    E = np.asarray([reports[0].E_prev] + [r.E for r in reports])
    D_int = float(np.trapezoid([r.D for r in reports], [r.s for r in reports]))
    F_int = float(np.trapezoid([r.F for r in reports], [r.s for r in reports]))
    G_int = float(np.trapezoid([r.G for r in reports], [r.s for r in reports]))
    lhs = E[-1] - E[0] + (1 + c_star ** 2) * D_int
    rhs = cst.K_ef * F_int + cst.K_eesc * G_int \
        + ctx.slack_c * (rec_p.dt ** 2 + rec_p.dx ** 2)
    relax_ok = lhs <= rhs

    ok = worst <= 0.01 and env_ok and relax_ok
    return _result(10, "firewall lemma suite", ok,
                   f"worst violation {100 * worst:.2f}%, envelope={env_ok}, "
                   f"relax lhs={lhs:.3g} <= rhs={rhs:.3g}",
                   "<=1% violations, envelope and relax hold", t0)


def criterion_11(ctx):
    """Tail asymptotics of every solved front."""
    t0 = time.time()
    rows = []
    ng = ctx.nagumo()
    c_n, prof_n = ctx.nagumo_front()
    rows.append(("nagumo", prof_n, ng))
    rows.append(("ac_wall", ctx.ac_wall(), ctx.allen_cahn()))
    (c1, p1), (c2, p2) = ctx.tw_fronts()
    rows.append(("tw_lead", p1, ctx.triple_well()))
    rows.append(("tw_trail", p2, ctx.triple_well()))
    ok = True
    parts = []
    for name, prof, pot in rows:
        fit = tail_decay_rate(prof, "plus", pot)
        lin = float(np.min(fit.linearized_rates))
        good = fit.rate >= prof.c - 1e-3 and abs(fit.rate - lin) <= 0.01 * lin
        ok = ok and good
        parts.append(f"{name}: {fit.rate:.4f} vs {lin:.4f}")
    return _result(11, "front tail asymptotics", ok, "; ".join(parts),
                   "rate >= c-1e-3 and within 1% of linearization", t0)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10,
            criterion_11]


def run_all(threads=1, strict=False, criteria=None):
    """Execute the acceptance suite; returns (results, all_passed).

    strict drops the additive discretization slack from every lemma check."""
    ctx = VerifyContext(slack_c=0.0 if strict else SLACK_C)
    if threads > 1:
        # fan the expensive independent base runs out first
        ctx.timing_reliable = False
        builders = [ctx.run_c1, ctx.run_nagumo_hyp, ctx.run_nagumo_par,
                    ctx.run_tw, ctx.run_wall, ctx.run_perturbed]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda b: b(), builders))
    results = []
    selected = CRITERIA if criteria is None else \
        [CRITERIA[i - 1] for i in criteria]
    for fn in selected:
        try:
            results.append(fn(ctx))
        except Exception as exc:  # a crashed criterion is a failed criterion
            cid = int(fn.__name__.split("_")[1])
            results.append(CriterionResult(
                cid, fn.__doc__.splitlines()[0] if fn.__doc__ else fn.__name__,
                False, f"error: {type(exc).__name__}: {exc}", "no error"))
    ok = all(r.passed for r in results)
    return results, ok
