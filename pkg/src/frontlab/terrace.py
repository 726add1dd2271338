"""Propagating terraces: evaluation, fitting against run data, center-region
residual quantities, and the Hamiltonian diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    CenterContaminated,
    NoLibraryFront,
    UnknownPlateau,
)
from .frontsolver import speed_convert, speed_convert_inverse

__all__ = [
    "Terrace",
    "TerraceFit",
    "eval_terrace",
    "fit_terrace",
    "center_report",
    "hamiltonian_profile",
]


@dataclass
class Terrace:
    """Stacked bistable fronts travelling one way.

    Fronts are indexed from the invaded end: front 1 connects m_1 to m_0 and
    leads spatially; front i connects m_i to m_{i-1}. Position tracks are
    affine, x_i(t) = x0_i + s_i t. For direction "left" the same data is
    mirrored through x -> -x.
    """

    direction: str            # "left" | "right"
    minima: list              # m_0 .. m_q as arrays, m_0 = invaded end
    c: list                   # parabolic speeds c_1 >= ... >= c_q > 0
    alpha: float
    profiles: list            # FrontProfile_i in Phi_{c_i}(m_i, m_{i-1})
    x0: list                  # intercepts of the position tracks

    @property
    def q(self):
        return len(self.c)

    @property
    def s(self):
        return [speed_convert(ci, self.alpha) for ci in self.c]

    def positions(self, t):
        sign = 1.0 if self.direction == "right" else -1.0
        return [x0 + sign * si * t for x0, si in zip(self.x0, self.s)]

    def separations(self, t):
        """Gaps between consecutive fronts, leader minus follower."""
        pos = self.positions(t)
        sign = 1.0 if self.direction == "right" else -1.0
        return [sign * (pos[i] - pos[i + 1]) for i in range(self.q - 1)]

    def validate(self, potential):
        vals = [float(potential.value(np.atleast_1d(m))) for m in self.minima]
        for a, b in zip(vals[:-1], vals[1:]):
            if not a > b:
                raise ValueError(f"minima values not strictly ordered: {vals}")
        for a, b in zip(self.c[:-1], self.c[1:]):
            if a < b - 1e-12:
                raise ValueError(f"speeds not ordered: {self.c}")
        if any(ci <= 0 for ci in self.c):
            raise ValueError("terrace speeds must be positive")
        return self

    def to_dict(self):
        return {
            "direction": self.direction,
            "q": self.q,
            "minima": [[float(v) for v in np.atleast_1d(m)] for m in self.minima],
            "c": [float(v) for v in self.c],
            "s": [float(v) for v in self.s],
            "x0": [float(v) for v in self.x0],
            "profiles": [
                {"m_minus": [float(v) for v in p.m_minus],
                 "m_plus": [float(v) for v in p.m_plus],
                 "c": float(p.c)}
                for p in self.profiles
            ],
        }


def eval_terrace(terrace, x, t):
    """The superposition formula:
    m_0 + sum_i (phi_i[sqrt(1+alpha c_i^2)(x - x_i(t))] - m_{i-1}),
    mirrored for left terraces. q = 0 gives the constant m_0."""
    x = np.asarray(x, dtype=float)
    m0 = np.atleast_1d(np.asarray(terrace.minima[0], dtype=float))
    out = np.tile(m0, (x.size, 1))
    sign = 1.0 if terrace.direction == "right" else -1.0
    pos = terrace.positions(t)
    for i in range(terrace.q):
        prof = terrace.profiles[i]
        gamma = math.sqrt(1.0 + terrace.alpha * terrace.c[i] ** 2)
        xi = gamma * sign * (x - pos[i])
        spl = CubicSpline(prof.xi, prof.phi, axis=0)
        vals = np.empty((x.size, m0.size))
        below = xi < prof.xi[0]
        above = xi > prof.xi[-1]
        mid = ~(below | above)
        vals[below] = prof.m_minus
        vals[above] = prof.m_plus
        if np.any(mid):
            vals[mid] = spl(xi[mid])
        m_prev = np.atleast_1d(np.asarray(terrace.minima[i], dtype=float))
        out += vals - m_prev[None, :]
    return out


@dataclass
class TerraceFit:
    terrace: Terrace | None
    passed: bool
    global_residual: float
    front_residuals: list
    speed_residuals: list
    measured_speeds: list
    separation_series: list    # (t, gaps) tuples over the fit window
    detail: str = ""

    def to_dict(self):
        return {
            "passed": self.passed,
            "global_residual": self.global_residual,
            "front_residuals": self.front_residuals,
            "speed_residuals": self.speed_residuals,
            "measured_speeds": self.measured_speeds,
            "residuals": {
                "global": self.global_residual,
                "per_front": self.front_residuals,
                "speed": self.speed_residuals,
            },
            "terrace": self.terrace.to_dict() if self.terrace else None,
            "detail": self.detail,
        }


def _detect_plateaus(x, u, minima, d_esc, min_len=10):
    """Runs of >= min_len points sitting within d_esc/2 of a single minimum.

    Returns a list of (k_start, k_end, minimum_index); raises UnknownPlateau
    when a long near-constant run matches no minimum.
    """
    locs = [np.atleast_1d(np.asarray(m.location if hasattr(m, "location") else m,
                                     dtype=float)) for m in minima]
    dists = np.stack([np.linalg.norm(u - loc[None, :], axis=1) for loc in locs])
    near = dists.min(axis=0) < d_esc / 2
    which = dists.argmin(axis=0)
    plateaus = []
    k = 0
    N = len(x)
    while k < N:
        if not near[k]:
            k += 1
            continue
        j = k
        while j + 1 < N and near[j + 1] and which[j + 1] == which[k]:
            j += 1
        if j - k + 1 >= min_len:
            plateaus.append((k, j, int(which[k])))
        k = j + 1
    # a long flat run matching no minimum is a hole in the analysis
    flat = ~near
    k = 0
    while k < N:
        if not flat[k]:
            k += 1
            continue
        j = k
        while j + 1 < N and flat[j + 1]:
            j += 1
        seg = u[k:j + 1]
        if j - k + 1 >= 5 * min_len and np.max(np.abs(seg - seg.mean(axis=0))) < d_esc / 10:
            raise UnknownPlateau(
                f"flat segment near x={x[(k + j) // 2]:.2f} matches no minimum")
        k = j + 1
    return plateaus


def _last_crossing(x, amp, level):
    """Largest x where amp crosses down through `level` (amp decays to ~0 on
    the high-x side). Linear interpolation between samples."""
    above = np.nonzero(amp >= level)[0]
    if len(above) == 0 or above[-1] + 1 >= len(amp):
        return None
    k = above[-1]
    a0, a1 = amp[k], amp[k + 1]
    frac = (level - a0) / (a1 - a0) if a1 != a0 else 0.0
    return float(x[k] + frac * (x[k + 1] - x[k]))


def _interface_position(x, u, m_upper, level, k_lo, k_hi):
    """Last crossing of |u - m_upper| = level inside the interface window,
    scanning from the upper-plateau side. With level = half the plateau gap
    this sits on the steep part of the front, where noise barely moves it."""
    amp = np.linalg.norm(u[k_lo:k_hi + 1] - m_upper[None, :], axis=1)
    return _last_crossing(x[k_lo:k_hi + 1], amp, level)


def _profile_anchor_offset(prof, level):
    """xi of the last |phi - m_plus| = level crossing of a normalized profile
    (the def_norm anchor itself sits at xi = 0)."""
    amp = np.linalg.norm(prof.phi - prof.m_plus[None, :], axis=1)
    xi = _last_crossing(prof.xi, amp, level)
    return 0.0 if xi is None else xi


def fit_terrace(snapshots, analysis, front_library, side, eps=None,
                alpha=None, fit_tol=0.02, speed_match_tol=5e-3,
                window_fraction=1.0):
    """Fit a one-sided propagating terrace to the late snapshots of a run.

    front_library: list of FrontProfile (solved, normalized) covering the
    adjacent minima pairs. Plateau detection uses d_esc/2 closeness, interface
    anchors use the def_norm crossing of the upper state, slopes come from an
    affine fit of the anchors over the window, and each interface is matched
    to the library profile with the right endpoints and the nearest parabolic
    speed (NoLibraryFront beyond speed_match_tol).
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if alpha is None:
        alpha = snapshots[-1].alpha
    if eps is None:
        # provisional pass over the cone from the origin fixes the measured
        # speeds, then eps = 0.05 * slowest front (the default choice)
        provisional = fit_terrace(snapshots, analysis, front_library, side,
                                  eps=0.0, alpha=alpha, fit_tol=fit_tol,
                                  speed_match_tol=speed_match_tol,
                                  window_fraction=window_fraction)
        if provisional.measured_speeds:
            eps = 0.05 * min(provisional.measured_speeds)
        else:
            return provisional
    d_esc = analysis.d_esc
    t_end = snapshots[-1].t
    t_start = t_end - window_fraction * (t_end - snapshots[0].t)
    window = [s for s in snapshots if s.t >= t_start - 1e-9]

    # per-snapshot detection
    per_snap = []
    for snap in window:
        x = snap.x
        if side == "right":
            sel = x >= eps * snap.t
        else:
            sel = x <= -eps * snap.t
        xs = x[sel]
        us = snap.u[sel]
        plats = _detect_plateaus(xs, us, analysis.minima, d_esc)
        if not plats:
            return TerraceFit(None, False, math.inf, [], [], [], [],
                              detail="no plateaus detected in the side region")
        # minima sequence ordered away from the invaded end
        if side == "right":
            order = plats[::-1]     # rightmost first = invaded end m_0
        else:
            order = plats
        chain = [p[2] for p in order]
        interfaces = []
        for i in range(len(order) - 1):
            m_upper = np.atleast_1d(analysis.minima[chain[i]].location)
            m_lower = np.atleast_1d(analysis.minima[chain[i + 1]].location)
            level = 0.5 * float(np.linalg.norm(m_upper - m_lower))
            if side == "right":
                k_lo, k_hi = order[i + 1][0], order[i][1]
                pos = _interface_position(xs, us, m_upper, level, k_lo, k_hi)
            else:
                # mirror: scan with x negated so 'last crossing' faces m_upper
                k_lo, k_hi = order[i][0], order[i + 1][1]
                amp_rev = us[k_lo:k_hi + 1][::-1]
                xr = (-xs[k_lo:k_hi + 1])[::-1]
                pos = _interface_position(xr, amp_rev, m_upper, level, 0,
                                          k_hi - k_lo)
                pos = -pos if pos is not None else None
            interfaces.append(pos)
        per_snap.append((snap.t, chain, interfaces))

    chains = {tuple(c) for _, c, _ in per_snap}
    if len(chains) != 1:
        return TerraceFit(None, False, math.inf, [], [], [], [],
                          detail=f"plateau chain changed over the window: {chains}")
    chain = per_snap[0][1]
    q = len(chain) - 1
    minima_chain = [analysis.minima[i].location for i in chain]

    if q == 0:
        # constant terrace: residual against the plateau value
        m0 = np.atleast_1d(minima_chain[0])
        res = 0.0
        for snap in window:
            x = snap.x
            sel = x >= eps * snap.t if side == "right" else x <= -eps * snap.t
            res = max(res, float(np.max(np.linalg.norm(
                snap.u[sel] - m0[None, :], axis=1))))
        terr = Terrace(direction=side, minima=[m0], c=[], alpha=alpha,
                       profiles=[], x0=[])
        return TerraceFit(terr, res < fit_tol, res, [], [], [], [])

    # affine track fit per interface
    ts = np.asarray([row[0] for row in per_snap])
    if len(ts) < 3:
        return TerraceFit(None, False, math.inf, [], [], [], [],
                          detail="fewer than 3 snapshots in the fit window")
    tracks = np.asarray([[row[2][i] for row in per_snap] for i in range(q)],
                        dtype=float)
    if np.any(~np.isfinite(tracks)):
        return TerraceFit(None, False, math.inf, [], [], [], [],
                          detail="interface anchor missing on some snapshot")
    slopes, intercepts, meas_speeds = [], [], []
    for i in range(q):
        b, a0 = np.polyfit(ts, tracks[i], 1)
        slopes.append(float(b))
        intercepts.append(float(a0))
        meas_speeds.append(abs(float(b)))

    # library match per interface; the half-amplitude tracks are converted to
    # def_norm anchors with the matched profile's own crossing offset
    profiles, cs, speed_resid, anchors0 = [], [], [], []
    sign = 1.0 if side == "right" else -1.0
    for i in range(q):
        m_behind = np.atleast_1d(minima_chain[i + 1])
        m_ahead = np.atleast_1d(minima_chain[i])
        c_meas = speed_convert_inverse(meas_speeds[i], alpha)
        best = None
        for prof in front_library:
            if (np.linalg.norm(prof.m_minus - m_behind) < 1e-8
                    and np.linalg.norm(prof.m_plus - m_ahead) < 1e-8):
                gap = abs(prof.c - c_meas)
                if best is None or gap < best[0]:
                    best = (gap, prof)
        if best is None or best[0] > speed_match_tol:
            raise NoLibraryFront(
                f"no profile for connection {m_behind} -> {m_ahead} at "
                f"parabolic speed {c_meas:.5f} within {speed_match_tol}")
        prof = best[1]
        profiles.append(prof)
        cs.append(prof.c)
        speed_resid.append(abs(speed_convert(prof.c, alpha) - meas_speeds[i]))
        level = 0.5 * float(np.linalg.norm(m_ahead - m_behind))
        gamma = math.sqrt(1.0 + alpha * prof.c ** 2)
        xi_mid = _profile_anchor_offset(prof, level)
        anchors0.append(intercepts[i] - sign * xi_mid / gamma)

    terr = Terrace(direction=side, minima=minima_chain, c=cs, alpha=alpha,
                   profiles=profiles,
                   x0=anchors0)
    # residuals on the window
    global_res = 0.0
    front_res = [0.0] * q
    for snap in window:
        x = snap.x
        sel = x >= eps * snap.t if side == "right" else x <= -eps * snap.t
        model = eval_terrace(terr, x[sel], snap.t)
        dev = np.linalg.norm(snap.u[sel] - model, axis=1)
        global_res = max(global_res, float(dev.max()) if dev.size else 0.0)
        pos = terr.positions(snap.t)
        for i in range(q):
            near = np.abs(x[sel] - pos[i]) <= 10.0
            if np.any(near):
                front_res[i] = max(front_res[i], float(dev[near].max()))
    seps = [(float(t), [float(g) for g in terr.separations(t)]) for t in ts]
    return TerraceFit(
        terrace=terr, passed=global_res < fit_tol, global_residual=global_res,
        front_residuals=front_res, speed_residuals=speed_resid,
        measured_speeds=meas_speeds, separation_series=seps,
    )


# ---------------------------------------------------------------------------
# center region
# ---------------------------------------------------------------------------

@dataclass
class CenterReport:
    t: np.ndarray
    sup_window_dissipation: np.ndarray   # sup_x int_x^{x+1} u_t^2
    residual_energy: np.ndarray          # int (u_x^2/2 + V - h) over the center
    dissipation_tail: float
    residual_tail: float
    v_behind_gap: float = math.nan       # |V(m'_L) - V(m'_R)| when provided


def center_report(snapshots, eps, h, potential, m_left_behind=None,
                  m_right_behind=None, front_tracks=None, tail_fraction=0.25):
    """Center-region series: sliding-window dissipation sup and the residual
    energy relative to the plateau level h, plus their tail averages.

    front_tracks: optional list of callables t -> position; if any track
    enters [-eps t, eps t] late in the run the center is contaminated.
    """
    ts, sup_d, res_e = [], [], []
    t_end = snapshots[-1].t
    for snap in snapshots:
        x = snap.x
        half = eps * snap.t
        sel = (x >= -half) & (x <= half)
        ts.append(snap.t)
        if not np.any(sel):
            sup_d.append(0.0)
            res_e.append(0.0)
            continue
        if front_tracks and snap.t >= 0.5 * t_end:
            for trk in front_tracks:
                if abs(trk(snap.t)) <= half:
                    raise CenterContaminated(
                        f"front track at {trk(snap.t):.2f} inside the center "
                        f"window at t={snap.t:.2f}")
        ut2 = np.sum(snap.ut ** 2, axis=1)
        # sliding integral over [x, x+1] via cumulative trapezoid
        cum = np.concatenate([[0.0], np.cumsum(0.5 * (ut2[1:] + ut2[:-1]) * snap.dx)])
        w = int(round(1.0 / snap.dx))
        windowed = cum[w:] - cum[:-w]
        ks = np.nonzero(sel)[0]
        ks = ks[ks < len(windowed)]
        sup_d.append(float(windowed[ks].max()) if len(ks) else 0.0)
        ux = snap.ux
        dens = 0.5 * np.sum(ux ** 2, axis=1) + potential.value(snap.u) - h
        res_e.append(float(np.trapezoid(dens[sel], x[sel])))
    ts = np.asarray(ts)
    sup_d = np.asarray(sup_d)
    res_e = np.asarray(res_e)
    tail = ts >= ts[-1] - tail_fraction * (ts[-1] - ts[0])
    gap = math.nan
    if m_left_behind is not None and m_right_behind is not None:
        gap = abs(float(potential.value(np.atleast_1d(m_left_behind)))
                  - float(potential.value(np.atleast_1d(m_right_behind))))
    return CenterReport(
        t=ts, sup_window_dissipation=sup_d, residual_energy=res_e,
        dissipation_tail=float(np.mean(sup_d[tail])),
        residual_tail=float(np.mean(res_e[tail])),
        v_behind_gap=gap,
    )


# ---------------------------------------------------------------------------
# Hamiltonian diagnostic
# ---------------------------------------------------------------------------

@dataclass
class HamiltonianProfile:
    x: np.ndarray
    H: np.ndarray
    residual: np.ndarray      # identity residual (parabolic) or diagnostic
    mode: str                 # "parabolic" | "hyperbolic"


def hamiltonian_profile(snapshot, potential):
    """H(u, u_x) = u_x^2/2 - V(u) pointwise.

    Parabolic runs get the identity residual d_x H - u_x . u_t (vanishes to
    discretization order). Hyperbolic runs get the diagnostic
    d_x H - u_x . (alpha u_tt + u_t) with u_tt reconstructed from the
    equation; no convergence claim is attached to it.
    """
    x = snapshot.x
    ux = snapshot.ux
    H = 0.5 * np.sum(ux ** 2, axis=1) - potential.value(snapshot.u)
    dH = np.gradient(H, snapshot.dx, edge_order=2)
    if snapshot.alpha == 0.0:
        resid = dH - np.sum(ux * snapshot.ut, axis=1)
        mode = "parabolic"
    else:
        uxx = np.gradient(ux, snapshot.dx, axis=0, edge_order=2)
        utt = (uxx - potential.grad(snapshot.u) - snapshot.ut) / snapshot.alpha
        resid = dH - np.sum(ux * (snapshot.alpha * utt + snapshot.ut), axis=1)
        mode = "hyperbolic"
    return HamiltonianProfile(x=x, H=H, residual=resid, mode=mode)
