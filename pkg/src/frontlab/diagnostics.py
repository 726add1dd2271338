"""Energy, firewall and escape-point diagnostics on field snapshots.

Everything here is a pure function of snapshots plus the constants derived
from the potential: the explicit kappa/cutoff/firewall constants, the
exponentially weighted functionals in standing and travelling frames, hull
based escape points, invasion-speed estimates, and the relaxation reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import (
    ConstraintViolation,
    FrameOutOfRange,
    HullViolationAtHom,
    HypothesisFailure,
    PreconditionUnmet,
    SeriesTooShort,
    WindowIncomplete,
)
from .frontsolver import speed_convert
from .potential import _ball_points

__all__ = [
    "DiagnosticConstants",
    "FrameSpec",
    "EnergyReport",
    "compute_constants",
    "global_energy",
    "dissipation_rate",
    "exp_filter",
    "firewall_Q0_F0",
    "escape_region_mass",
    "hull_noesc_q0",
    "hull_noesc_f0",
    "escape_points",
    "traveling_frame_report",
    "frame_series",
    "positive_energy_at_escape_check",
    "dissipation_delta",
    "estimate_invasion_speed",
    "standing_relaxation_report",
]


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticConstants:
    """Every explicit constant of the energy/firewall machinery.

    All ball extrema are over |u| <= r_att_inf; constants that the source
    derivations state for a single minimum shifted to the origin are taken as
    the worst case over the whole minima set, so one table serves every
    plateau.
    """

    alpha: float
    lam_min: float
    lam_max: float
    d_esc: float
    delta_v: float
    q_hull: float
    r_att_inf: float
    kappa0: float
    kappa: float
    c_cut: float
    c_cut0: float
    c_max: float
    e_esc: float
    d_esc_q0: float
    d_esc_f0: float
    L: float
    s_noesc: float
    eps_f0_coerc: float
    K_f0_coerc: float
    eps_f0_decr: float
    K_f0_decr: float
    eps_f_coerc: float
    K_f_coerc: float
    eps_f_decr: float
    K_f_decr: float
    K_q0_growth: float
    K_eq: float
    K_eesc1: float
    grad_sup: float

    @property
    def K_ef(self):
        return self.K_eq / self.eps_f_coerc if self.eps_f_coerc > 0 else math.inf

    @property
    def K_eesc(self):
        if self.eps_f_coerc <= 0:
            return math.inf
        return self.K_eesc1 + self.K_eq * self.K_f_coerc / self.eps_f_coerc

    @property
    def s_max(self):
        return speed_convert(self.c_max, self.alpha)

    def check(self):
        """Assert every defining inequality; names the first failure."""
        a, k0 = self.alpha, self.kappa0
        lam_min, lam_max = self.lam_min, self.lam_max
        k, ccut, cmax = self.kappa, self.c_cut, self.c_max
        checks = [
            ("kappa0 <= 1/2", k0 <= 0.5 + 1e-15),
            ("alpha*kappa0 <= 1/2", a * k0 <= 0.5 + 1e-15),
            ("kappa0^2/2 <= lam_min/4", k0 * k0 / 2 <= lam_min / 4 + 1e-15),
            ("kappa > 0 and c_cut > 0", k > 0 and ccut > 0),
            ("kappa*c_max/2 <= lam_min/8", k * cmax / 2 <= lam_min / 8 + 1e-12),
            ("2*alpha*kappa*(c_max+kappa) <= 1/4",
             2 * a * k * (cmax + k) <= 0.25 + 1e-12),
            ("kappa/2*(c_max+kappa) <= lam_min/8",
             k / 2 * (cmax + k) <= lam_min / 8 + 1e-12),
            ("c_cut*(alpha+1/2)*(c_max+kappa) <= 1/4",
             ccut * (a + 0.5) * (cmax + k) <= 0.25 + 1e-12),
            ("alpha*c_cut*(c_max+kappa)*(c_max+1) <= 1/4",
             a * ccut * (cmax + k) * (cmax + 1) <= 0.25 + 1e-12),
            ("(c_max+kappa)*c_cut*(1/2+alpha(1/2+c_max+2lam_max)) <= lam_min/8",
             (cmax + k) * ccut * (0.5 + a * (0.5 + cmax + 2 * lam_max))
             <= lam_min / 8 + 1e-12),
            ("c_max >= 1", cmax >= 1.0),
            ("e_esc > 0", self.e_esc > 0),
        ]
        if self.eps_f0_coerc > 0:
            t1 = (self.K_f0_coerc / self.eps_f0_coerc) * (2 / k0) \
                * math.exp(-k0 * self.L)
            t2 = self.K_f0_decr * (2 / k0) * math.exp(-k0 * self.L)
            checks += [
                ("property_L_1", t1 <= self.d_esc_q0 ** 2 / 8 + 1e-12),
                ("property_L_2",
                 t2 <= self.eps_f0_decr * self.d_esc_f0 ** 2 / 4 + 1e-12),
            ]
        for name, ok in checks:
            if not ok:
                raise ConstraintViolation(name)
        return self


def _ball_extrema(potential, minima, r, fn, mode="max", n_samples=8193):
    """max/min over m in minima and sampled |u| <= r of fn(u, m)."""
    n = potential.n
    if n == 1:
        us = np.linspace(-r, r, n_samples)[:, None]
    else:
        us = _ball_points(np.zeros(n), r, n, 96, 64)
    best = -math.inf if mode == "max" else math.inf
    for m in minima:
        loc = m.location if hasattr(m, "location") else np.atleast_1d(m)
        vals = fn(us, loc)
        v = float(np.max(vals)) if mode == "max" else float(np.min(vals))
        best = max(best, v) if mode == "max" else min(best, v)
    return best


def compute_constants(analysis, alpha, c_cut0=None):
    """Evaluate all explicit constant formulas for a given potential analysis.

    Every inequality the constants must satisfy is asserted before returning;
    a failure raises ConstraintViolation naming it. At alpha = 0 the firewall
    side degenerates (eps_f0_coerc = 0 etc.); the surviving kappa0/Q0
    constants remain usable.
    """
    pot = analysis.potential
    minima = analysis.minima
    lam_min, lam_max = analysis.lam_min, analysis.lam_max
    d_esc = analysis.d_esc
    R = analysis.r_att_inf
    a = float(alpha)

    kappa0 = min(math.sqrt(lam_min / 2), 0.5, 0.5 / a if a > 0 else math.inf)

    def vdiff(us, m):
        return pot.value(us) - float(pot.value(m))

    def dist2(us, m):
        return np.sum((us - m[None, :]) ** 2, axis=1)

    grad_sup = 0.0
    n = pot.n
    if n == 1:
        us = np.linspace(-R, R, 8193)[:, None]
    else:
        us = _ball_points(np.zeros(n), R, n, 96, 64)
    grad_sup = float(np.max(np.linalg.norm(pot.grad(us), axis=1)))

    eps_f0_coerc = min(0.5, a, a * lam_min / 2)
    K_f0_coerc = max(0.0, _ball_extrema(
        pot, minima, R,
        lambda u, m: -2 * a * (vdiff(u, m) - lam_min / 4 * dist2(u, m)),
        mode="max"))
    K_f0_decr = max(0.0, _ball_extrema(
        pot, minima, R,
        lambda u, m: lam_min / 2 * dist2(u, m)
        - np.einsum("ij,ij->i", u - m[None, :], pot.grad(u)),
        mode="max"))
    eps_f0 = min(0.5, lam_min / 4)
    C_f0 = max(1.5 * a, a, 1 + 2 * a * analysis.q_hull)
    eps_f0_decr = eps_f0 / C_f0

    d_esc_q0 = d_esc
    d_esc_f0 = math.sqrt(eps_f0_coerc / 8) * d_esc_q0

    if eps_f0_coerc > 0 and d_esc_f0 > 0:
        arg = max(
            16 / kappa0 * K_f0_coerc / (eps_f0_coerc * d_esc_q0 ** 2)
            if K_f0_coerc > 0 else 1.0,
            8 / kappa0 * K_f0_decr / (eps_f0_decr * d_esc_f0 ** 2)
            if K_f0_decr > 0 else 1.0,
        )
        L = max(1.0, math.log(arg) / kappa0)
    else:
        L = math.inf

    K_q0_growth = 2 * (2 / kappa0) * (R * (R + grad_sup) + R * R * (2 + kappa0))
    s_noesc = 4 * L * K_q0_growth / d_esc_q0 ** 2 if math.isfinite(L) else math.inf

    floor = min(0.5, lam_min / 4)
    c_max = 1 + 4 * analysis.delta_v / (floor * d_esc ** 2)
    e_esc = floor * d_esc ** 2 / 4

    kappa = min(1.0,
                1 / (8 * a * (c_max + 1)) if a > 0 else math.inf,
                lam_min / (4 * (c_max + 1)))
    c_cut = min(
        1 / (4 * (a + 0.5) * (c_max + 1) ** 2),
        lam_min / (8 * (c_max + 1) * (0.5 + a * (0.5 + c_max + 2 * lam_max))),
    )
    if c_cut0 is None:
        c_cut0_val = c_cut
    else:
        c_cut0_val = min(c_cut, float(c_cut0))

    eps_f_coerc = min(a * a / 2, a, a * lam_min / 4)
    K_f_coerc = max(0.0, _ball_extrema(
        pot, minima, R,
        lambda u, m: -a * (2 * vdiff(u, m) - kappa * c_max * dist2(u, m)
                           - lam_min / 4 * dist2(u, m)),
        mode="max"))
    K_eq = (c_max + kappa) * max(a * c_cut / 2 + a * c_max + 0.5,
                                 c_cut / 2 + 0.5,
                                 c_cut * lam_max)
    K_eesc1 = max(0.0, _ball_extrema(
        pot, minima, R,
        lambda u, m: (c_max + kappa) * c_cut
        * (vdiff(u, m) - lam_max * dist2(u, m)),
        mode="max"))
    eps_f = min(a / 2, 0.25, lam_min / 4)
    C_f = max(1.5 * a * a, a * (1 + c_max), 2 * a * analysis.q_hull + 1 + a * c_max)
    eps_f_decr = eps_f / C_f
    K_f_decr = max(0.0, _ball_extrema(
        pot, minima, R,
        lambda u, m: lam_min / 2 * dist2(u, m)
        - np.einsum("ij,ij->i", u - m[None, :], pot.grad(u))
        + 2 * a * c_cut * (c_max + kappa)
        * (np.abs(vdiff(u, m)) - lam_max * dist2(u, m)),
        mode="max"))

    return DiagnosticConstants(
        alpha=a, lam_min=lam_min, lam_max=lam_max, d_esc=d_esc,
        delta_v=analysis.delta_v, q_hull=analysis.q_hull, r_att_inf=R,
        kappa0=kappa0, kappa=kappa, c_cut=c_cut, c_cut0=c_cut0_val,
        c_max=c_max, e_esc=e_esc, d_esc_q0=d_esc_q0, d_esc_f0=d_esc_f0,
        L=L, s_noesc=s_noesc,
        eps_f0_coerc=eps_f0_coerc, K_f0_coerc=K_f0_coerc,
        eps_f0_decr=eps_f0_decr, K_f0_decr=K_f0_decr,
        eps_f_coerc=eps_f_coerc, K_f_coerc=K_f_coerc,
        eps_f_decr=eps_f_decr, K_f_decr=K_f_decr,
        K_q0_growth=K_q0_growth, K_eq=K_eq, K_eesc1=K_eesc1,
        grad_sup=grad_sup,
    ).check()


# ---------------------------------------------------------------------------
# global energy
# ---------------------------------------------------------------------------

def global_energy(snapshot, potential):
    """Trapezoid of alpha u_t^2/2 + u_x^2/2 + V(u); no plateau offset."""
    ux = snapshot.ux
    dens = 0.5 * snapshot.alpha * np.sum(snapshot.ut ** 2, axis=1) \
        + 0.5 * np.sum(ux ** 2, axis=1) + potential.value(snapshot.u)
    return float(np.trapezoid(dens, dx=snapshot.dx))


def dissipation_rate(snapshot):
    """Integral of u_t^2 over the grid."""
    return float(np.trapezoid(np.sum(snapshot.ut ** 2, axis=1), dx=snapshot.dx))


# ---------------------------------------------------------------------------
# exponential filter
# ---------------------------------------------------------------------------

def exp_filter(values, dx, kappa):
    """Trapezoid quadrature of integral psi0(x - xi) q(x) dx, with
    psi0 = exp(-kappa |.|), evaluated at every grid node xi at once.

    Two single-pole recursions (one per direction) reproduce the direct
    O(N^2) quadrature exactly up to float roundoff.
    """
    q = np.asarray(values, dtype=float)
    one_d = q.ndim == 1
    if one_d:
        q = q[:, None]
    a = math.exp(-kappa * dx)
    b0, b1 = dx / 2, a * dx / 2
    # left pass: y_k = a y_{k-1} + b0 q_k + b1 q_{k-1}, with seed removal so
    # L_0 = 0 (no mass to the left of the first node)
    y = lfilter([b0, b1], [1.0, -a], q, axis=0)
    powers = a ** np.arange(q.shape[0])
    L = y - powers[:, None] * (b0 * q[0])[None, :]
    yr = lfilter([b0, b1], [1.0, -a], q[::-1], axis=0)
    Rv = (yr - powers[:, None] * (b0 * q[-1])[None, :])[::-1]
    out = L + Rv
    return out[:, 0] if one_d else out


# ---------------------------------------------------------------------------
# standing-frame firewall and quadratic maps
# ---------------------------------------------------------------------------

def firewall_Q0_F0(snapshot, m, potential, constants):
    """(Q0(xi, t), F0(xi, t)) on the whole grid via the recursive filter.

    The reference minimum is shifted to the origin internally: the integrands
    use u - m and V(u) - V(m).
    """
    m = np.atleast_1d(np.asarray(m, dtype=float))
    a = constants.alpha
    du = snapshot.u - m[None, :]
    ux = snapshot.ux
    ut = snapshot.ut
    vshift = potential.value(snapshot.u) - float(potential.value(m))
    ut2 = np.sum(ut ** 2, axis=1)
    ux2 = np.sum(ux ** 2, axis=1)
    du2 = np.sum(du ** 2, axis=1)
    q_integrand = a * ut2 + ux2 + du2
    f_integrand = (a * a * ut2 + a * ux2 + 2 * a * vshift
                   + a * np.sum(du * ut, axis=1) + 0.5 * du2)
    k0 = constants.kappa0
    Q0 = exp_filter(q_integrand, snapshot.dx, k0)
    F0 = exp_filter(f_integrand, snapshot.dx, k0)
    return Q0, F0


def escape_region_mass(snapshot, m, constants):
    """integral over Sigma_Esc,0 of psi0(x - xi) dx for every grid xi."""
    m = np.atleast_1d(np.asarray(m, dtype=float))
    amp = np.linalg.norm(snapshot.u - m[None, :], axis=1)
    indicator = (amp > constants.d_esc).astype(float)
    return exp_filter(indicator, snapshot.dx, constants.kappa0)


# ---------------------------------------------------------------------------
# no-escape hulls and escape points
# ---------------------------------------------------------------------------

def hull_noesc_q0(x, constants):
    x = np.asarray(x, dtype=float)
    d2 = constants.d_esc_q0 ** 2
    L = constants.L
    out = np.full(x.shape, math.inf)
    ramp = (x >= 0) & (x <= L)
    out[ramp] = d2 / 2 * (1 - x[ramp] / (2 * L))
    out[x > L] = d2 / 4
    return out


def hull_noesc_f0(x, constants):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, math.inf)
    out[x >= constants.L] = constants.d_esc_f0 ** 2
    return out


def escape_points(snapshot, m, x_hom, constants, potential, method="bisect"):
    """(x_Esc, x_esc) for the reference minimum m and marker x_hom.

    x_Esc: rightmost grid point <= x_hom with |u - m| >= d_esc (-inf if none).
    x_esc: smallest grid x_l <= x_hom - 1 such that the Q0/F0 hull
    inequalities hold for every grid x. The admissible set is an interval so
    a bisection over grid indices finds its lower edge; method="scan" walks
    down linearly instead (same answer, kept for audits).
    """
    x = snapshot.x
    if not (x[0] <= x_hom <= x[-1]):
        raise ValueError("x_hom outside the grid")
    m = np.atleast_1d(np.asarray(m, dtype=float))
    amp = np.linalg.norm(snapshot.u - m[None, :], axis=1)
    mask = (x <= x_hom) & (amp >= constants.d_esc)
    x_Esc = float(x[mask][-1]) if np.any(mask) else -math.inf

    Q0, F0 = firewall_Q0_F0(snapshot, m, potential, constants)
    right_q = hull_noesc_q0(x_hom - x, constants)
    right_f = hull_noesc_f0(x_hom - x, constants)

    def ok(k):
        xl = x[k]
        hq = np.maximum(hull_noesc_q0(x - xl, constants), right_q)
        hf = np.maximum(hull_noesc_f0(x - xl, constants), right_f)
        return bool(np.all(Q0 <= hq) and np.all(F0 <= hf))

    k_hom1 = int(np.searchsorted(x, x_hom - 1.0, side="right") - 1)
    if k_hom1 < 0 or not ok(k_hom1):
        raise HullViolationAtHom(
            "hull inequalities fail at x_hom - 1; marker not yet admissible")
    if method == "scan":
        k = k_hom1
        while k > 0 and ok(k - 1):
            k -= 1
        return x_Esc, float(x[k])
    lo, hi = 0, k_hom1          # invariant: ok(hi) true
    if ok(0):
        return x_Esc, float(x[0])
    while hi - lo > 1:          # ok(lo) false
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return x_Esc, float(x[hi])


# ---------------------------------------------------------------------------
# travelling frame
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FrameSpec:
    """Travelling-frame parameters for the weighted-energy reports."""

    c: float
    alpha: float
    t_init: float = 0.0
    x_init: float = 0.0
    z_init: float = 0.0
    c_cut: float = 0.0

    @property
    def sigma(self):
        return speed_convert(self.c, self.alpha)

    @property
    def gamma(self):
        return math.sqrt(1.0 + self.alpha * self.c * self.c)

    def validate(self, constants):
        if self.t_init < 0:
            raise PreconditionUnmet("t_init must be nonnegative")
        if not (0 < self.c <= constants.c_max):
            raise PreconditionUnmet(
                f"need 0 < c <= c_max, got c={self.c}, c_max={constants.c_max}")
        if self.z_init < 0:
            raise PreconditionUnmet("z_init must be nonnegative")
        return self


@dataclass
class EnergyReport:
    """Weighted functionals of one snapshot pair in a travelling frame.

    All weighted quantities carry weights normalized by exp(-c z_init); the
    true values are these times exp(norm_log).
    """

    s: float
    E: float
    E_prev: float
    dE_ds: float
    D: float
    F: float
    Q: float
    G: float
    G_back: float = math.nan
    G_front: float = math.nan
    y_hom: float = math.nan
    y_esc: float = math.nan
    y_Esc: float = math.nan
    norm_log: float = 0.0


def _frame_weights(y, z, frame, constants):
    """(chi_hat, psi_hat, dpsi_over_psi) with normalization exp(-c z_init)."""
    c, k = frame.c, constants.kappa
    z0 = frame.z_init
    left = y <= z
    chi_exp = np.where(left, c * (y - z0), c * (z - z0) + k * (z - y))
    psi_exp = np.where(left, (c + k) * y - k * z - c * z0, chi_exp)
    dpsi = np.where(left, c + k, -k)
    return np.exp(chi_exp), np.exp(psi_exp), dpsi


def _frame_arrays(snapshot, frame, m, potential):
    gamma = frame.gamma
    s = snapshot.t - frame.t_init
    y = gamma * (snapshot.x - frame.x_init) - frame.c * s
    ux = snapshot.ux
    v_s = snapshot.ut + frame.sigma * ux
    v_y = ux / gamma
    du = snapshot.u - np.atleast_1d(m)[None, :]
    vpot = potential.value(snapshot.u) - float(potential.value(np.atleast_1d(m)))
    return s, y, v_s, v_y, du, vpot


def _analytic_psi_integral(lo, hi, z, frame, constants):
    """integral of psi_hat over (lo, hi), with the same normalization."""
    c, k = frame.c, constants.kappa
    z0 = frame.z_init
    total = 0.0
    lo_l, hi_l = lo, min(hi, z)
    if hi_l > lo_l or lo_l == -math.inf:
        # left branch: exp((c+k) y - k z - c z0)
        upper = math.exp((c + k) * hi_l - k * z - c * z0)
        lower = 0.0 if lo_l == -math.inf else math.exp((c + k) * lo_l - k * z - c * z0)
        total += (upper - lower) / (c + k)
    lo_r, hi_r = max(lo, z), hi
    if hi_r > lo_r:
        # right branch: exp(c(z - z0) + k(z - y))
        amp = math.exp(c * (z - z0))
        upper = 0.0 if hi_r == math.inf else math.exp(-k * (hi_r - z))
        lower = math.exp(-k * (lo_r - z))
        total += amp * (lower - upper) / k
    return total


def traveling_frame_report(snap_prev, snap, frame, constants, potential, m,
                           x_hom=None, x_esc=None, x_Esc=None):
    """EnergyReport for a consecutive snapshot pair.

    E, D, F, Q, G are evaluated at the later snapshot; dE_ds is the finite
    difference across the pair. Markers, when given, are lab-frame positions
    at the later time and are mapped into the frame for the G_back/G_front
    tail bounds.
    """
    frame.validate(constants)

    def one(snapshot):
        s, y, v_s, v_y, du, vpot = _frame_arrays(snapshot, frame, m, potential)
        z = frame.z_init + frame.c_cut * s
        if not (y[0] <= z <= y[-1]):
            raise FrameOutOfRange(
                f"cutoff z={z:.3f} outside frame image [{y[0]:.3f}, {y[-1]:.3f}]")
        chi, psi, dpsi = _frame_weights(y, z, frame, constants)
        a = frame.alpha
        vs2 = np.sum(v_s ** 2, axis=1)
        vy2 = np.sum(v_y ** 2, axis=1)
        du2 = np.sum(du ** 2, axis=1)
        e_dens = 0.5 * a * vs2 + 0.5 * vy2 + vpot
        f_dens = (a * a * vs2 + a * vy2 + 2 * a * vpot
                  + a * np.sum(du * v_s, axis=1)
                  + (0.5 + a * frame.c * dpsi) * du2)
        q_dens = vs2 + vy2 + du2
        esc = du2 > constants.d_esc ** 2
        E = float(np.trapezoid(chi * e_dens, y))
        D = float(np.trapezoid(chi * vs2, y))
        F = float(np.trapezoid(psi * f_dens, y))
        Q = float(np.trapezoid(psi * q_dens, y))
        G = float(np.trapezoid(psi * esc.astype(float), y))
        return s, y, z, E, D, F, Q, G

    s0, _, _, E0, *_ = one(snap_prev)
    s1, y, z, E1, D, F, Q, G = one(snap)
    ds = s1 - s0
    rep = EnergyReport(
        s=s1, E=E1, E_prev=E0, dE_ds=(E1 - E0) / ds if ds else math.nan,
        D=D, F=F, Q=Q, G=G, norm_log=frame.c * frame.z_init,
    )
    gamma, c = frame.gamma, frame.c
    if x_hom is not None:
        rep.y_hom = gamma * (x_hom - frame.x_init) - c * s1
        rep.G_front = _analytic_psi_integral(rep.y_hom, math.inf, z, frame,
                                             constants)
    if x_esc is not None:
        rep.y_esc = gamma * (x_esc - frame.x_init) - c * s1
        rep.G_back = _analytic_psi_integral(-math.inf, rep.y_esc, z, frame,
                                            constants)
    if x_Esc is not None:
        rep.y_Esc = gamma * (x_Esc - frame.x_init) - c * s1 \
            if math.isfinite(x_Esc) else -math.inf
    return rep


def frame_series(record, frame, constants, potential, m, markers=None):
    """EnergyReport per consecutive snapshot pair of a run record.

    markers: optional callable t -> (x_hom, x_esc, x_Esc) in the lab frame.
    """
    reports = []
    snaps = record.snapshots
    for prev, cur in zip(snaps[:-1], snaps[1:]):
        kw = {}
        if markers is not None:
            x_hom, x_esc, x_Esc = markers(cur.t)
            kw = {"x_hom": x_hom, "x_esc": x_esc, "x_Esc": x_Esc}
        reports.append(traveling_frame_report(
            prev, cur, frame, constants, potential, m, **kw))
    return reports


# ---------------------------------------------------------------------------
# positive energy at the escape point
# ---------------------------------------------------------------------------

def positive_energy_at_escape_check(y, w, y0, c, potential, m, constants):
    """Check integral_{-inf}^{y0+1} e^{c y} (w'^2/2 + V(w)) dy >= e^{c y0} E_esc
    for a profile-like field sampled on the y grid.

    w is the absolute field; the reference minimum m is shifted out
    internally. Requires |w(y0) - m| = d_esc, |w - m| <= d_esc on
    [y0, y0 + 1], and c >= c_max. Returns (passed, lhs, rhs) with both sides
    normalized by e^{c y0}.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        w = w[:, None]
    m = np.atleast_1d(np.asarray(m, dtype=float))
    d = constants.d_esc
    amp = np.linalg.norm(w - m[None, :], axis=1)
    k0 = int(np.argmin(np.abs(y - y0)))
    if abs(y[k0] - y0) > 1e-9:
        raise PreconditionUnmet("y0 must lie on the sample grid")
    if abs(amp[k0] - d) > 1e-6 * (1 + d):
        raise PreconditionUnmet(f"|w(y0) - m| = {amp[k0]:.6g} != d_esc = {d:.6g}")
    win = (y >= y0) & (y <= y0 + 1.0)
    if np.any(amp[win] > d + 1e-9):
        raise PreconditionUnmet("|w - m| exceeds d_esc on [y0, y0+1]")
    if c < constants.c_max:
        raise PreconditionUnmet(f"c = {c} < c_max = {constants.c_max}")
    sel = y <= y0 + 1.0
    ys = y[sel]
    dw = np.gradient(w[sel], ys, axis=0, edge_order=2)
    vpot = potential.value(w[sel]) - float(potential.value(m))
    dens = np.exp(c * (ys - y0)) * (0.5 * np.sum(dw ** 2, axis=1) + vpot)
    lhs = float(np.trapezoid(dens, ys))
    rhs = constants.e_esc
    return lhs >= rhs, lhs, rhs


# ---------------------------------------------------------------------------
# dissipation window and invasion speeds
# ---------------------------------------------------------------------------

def dissipation_delta(snapshots, t_center, x_esc_center, s_esc, k_max=24,
                      min_snapshots=20):
    """delta_Dissip(t): the smallest eps = 2^-k such that the space-time
    integral of (u_t + s_esc u_x)^2 over [t-1, t+1] x [-1/eps, 1/eps]
    (centered at the escape point) stays below eps. The spatial window is
    clipped to the grid."""
    snaps = [s for s in snapshots if t_center - 1.0 - 1e-9 <= s.t <= t_center + 1.0 + 1e-9]
    if len(snaps) < min_snapshots:
        raise WindowIncomplete(
            f"only {len(snaps)} snapshots cover [{t_center - 1}, {t_center + 1}]")
    ts = np.asarray([s.t for s in snaps])
    if ts[0] > t_center - 1.0 + 0.2 or ts[-1] < t_center + 1.0 - 0.2:
        raise WindowIncomplete("snapshot times do not span the window")

    x = snaps[0].x
    mover2 = []
    for s in snaps:
        g = s.ut + s_esc * s.ux
        mover2.append(np.sum(g ** 2, axis=1))
    mover2 = np.asarray(mover2)

    delta = math.inf
    for k in range(k_max + 1):
        eps = 2.0 ** (-k)
        half = 1.0 / eps
        sel = (x >= x_esc_center - half) & (x <= x_esc_center + half)
        space = np.trapezoid(mover2[:, sel], x[sel], axis=1)
        total = float(np.trapezoid(space, ts))
        if total <= eps:
            delta = eps
        else:
            break
    return delta


@dataclass
class SpeedEstimate:
    s_inf: float
    s_sup: float
    s_fit: float

    @property
    def gap(self):
        return self.s_sup - self.s_inf


def estimate_invasion_speed(t, x, min_samples=100):
    """(s_inf, s_sup, s_fit) from windowed mean slopes over the last half of
    an escape-point track; window length is a tenth of the full span."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    good = np.isfinite(t) & np.isfinite(x)
    t, x = t[good], x[good]
    if len(t) < min_samples:
        raise SeriesTooShort(f"{len(t)} usable samples < {min_samples}")
    span = t[-1] - t[0]
    w = span / 10.0
    t_half = t[0] + span / 2.0
    starts = np.nonzero((t >= t_half) & (t <= t[-1] - w))[0]
    if len(starts) < 2:
        raise SeriesTooShort("not enough samples in the last half")
    slopes = []
    for i in starts:
        j = int(np.searchsorted(t, t[i] + w))
        j = min(j, len(t) - 1)
        slopes.append((x[j] - x[i]) / (t[j] - t[i]))
    slopes = np.asarray(slopes)
    sel = t >= t_half
    s_fit = float(np.polyfit(t[sel], x[sel], 1)[0])
    return SpeedEstimate(s_inf=float(slopes.min()), s_sup=float(slopes.max()),
                         s_fit=s_fit)


# ---------------------------------------------------------------------------
# standing (c ~ 0) relaxation report
# ---------------------------------------------------------------------------

@dataclass
class StandingReport:
    t: np.ndarray
    E0: np.ndarray
    D0: np.ndarray
    F_plus: np.ndarray
    F_minus: np.ndarray
    asymptotic_energy: float
    envelope: np.ndarray       # the der_fire_dichot right-hand side at each t
    esc_speed_plus: float
    esc_speed_minus: float
    offset: float              # potential offset max(V(m-), V(m+))


def _standing_weights(x, t, kappa, c_cut0):
    core = c_cut0 * t
    chi = np.where(np.abs(x) <= core, 1.0, np.exp(-kappa * (np.abs(x) - core)))
    psi_p = np.where(x <= core, np.exp(kappa * (x - core)),
                     np.exp(-kappa * (x - core)))
    psi_m = np.where(x >= -core, np.exp(-kappa * (x + core)),
                     np.exp(kappa * (x + core)))
    dpsi_p = np.where(x <= core, kappa, -kappa)
    dpsi_m = np.where(x >= -core, -kappa, kappa)
    return chi, psi_p, psi_m, dpsi_p, dpsi_m


def standing_relaxation_report(snapshots, m_minus, m_plus, constants,
                               potential, slack=0.0):
    """E0/D0/F+- series for a (near-)standing scenario with equal-depth ends.

    The c = 0 three-interval weight is used for the localized energy; psi+-
    firewalls reference m_plus / m_minus. The measured escape-point speeds
    must stay below c_cut0/6 (HypothesisFailure otherwise), the asymptotic
    energy is the tail average of E0, and the exponential firewall envelope
    is returned for comparison.
    """
    m_minus = np.atleast_1d(np.asarray(m_minus, dtype=float))
    m_plus = np.atleast_1d(np.asarray(m_plus, dtype=float))
    a = constants.alpha
    kappa = constants.kappa
    c_cut0 = constants.c_cut0
    offset = max(float(potential.value(m_minus)), float(potential.value(m_plus)))
    d = constants.d_esc

    ts, E0s, D0s, Fps, Fms = [], [], [], [], []
    esc_plus, esc_minus = [], []
    for snap in snapshots:
        x = snap.x
        chi, psi_p, psi_m, dpsi_p, dpsi_m = _standing_weights(
            x, snap.t, kappa, c_cut0)
        ux = snap.ux
        ut2 = np.sum(snap.ut ** 2, axis=1)
        ux2 = np.sum(ux ** 2, axis=1)
        vpot = potential.value(snap.u)
        e_dens = 0.5 * a * ut2 + 0.5 * ux2 + (vpot - offset)
        E0s.append(float(np.trapezoid(chi * e_dens, x)))
        D0s.append(float(np.trapezoid(chi * ut2, x)))
        for m, psi, dpsi, acc in ((m_plus, psi_p, dpsi_p, Fps),
                                  (m_minus, psi_m, dpsi_m, Fms)):
            du = snap.u - m[None, :]
            du2 = np.sum(du ** 2, axis=1)
            vsh = vpot - float(potential.value(m))
            f_dens = (a * a * ut2 + a * ux2 + 2 * a * vsh
                      + a * np.sum(du * snap.ut, axis=1) + 0.5 * du2)
            acc.append(float(np.trapezoid(psi * f_dens, x)))
        ts.append(snap.t)
        amp_p = np.linalg.norm(snap.u - m_plus[None, :], axis=1)
        amp_m = np.linalg.norm(snap.u - m_minus[None, :], axis=1)
        esc_plus.append(float(x[amp_p >= d][-1]) if np.any(amp_p >= d) else np.nan)
        esc_minus.append(float(x[amp_m >= d][0]) if np.any(amp_m >= d) else np.nan)

    ts = np.asarray(ts)
    E0s = np.asarray(E0s)
    Fps = np.asarray(Fps)
    Fms = np.asarray(Fms)

    def track_speed(track):
        # the escape speeds in the hypotheses are asymptotic quantities;
        # fit over the last half so the initial transient cannot pollute them
        track = np.asarray(track)
        half = ts >= ts[0] + 0.5 * (ts[-1] - ts[0])
        good = np.isfinite(track) & half
        if good.sum() < 2:
            return 0.0
        return float(np.polyfit(ts[good], track[good], 1)[0])

    sp = track_speed(esc_plus)
    sm = track_speed(esc_minus)
    if max(abs(sp), abs(sm)) > c_cut0 / 6.0:
        raise HypothesisFailure(
            f"measured escape speeds ({sp:.3g}, {sm:.3g}) exceed c_cut0/6 = "
            f"{c_cut0 / 6:.3g}")

    eps_tilde = min(constants.eps_f_decr, kappa * c_cut0 / 4.0)
    F0_init = max(Fps[0], Fms[0])
    env = (F0_init + 4 * constants.K_f_decr / (kappa ** 2 * c_cut0)) \
        * np.exp(-eps_tilde * (ts - ts[0])) + slack
    tail = ts >= ts[0] + 0.75 * (ts[-1] - ts[0])
    return StandingReport(
        t=ts, E0=E0s, D0=np.asarray(D0s), F_plus=Fps, F_minus=Fms,
        asymptotic_energy=float(np.mean(E0s[tail])),
        envelope=env, esc_speed_plus=sp, esc_speed_minus=sm, offset=offset,
    )
