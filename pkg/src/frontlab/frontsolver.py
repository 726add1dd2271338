"""Travelling-front profiles of phi'' = -c phi' + grad V(phi).

Two independent routes to the same objects: a shooting/bisection solver for
scalar potentials (n = 1) and a damped-Newton collocation solver for any n.
Profiles are normalized so the last escape-distance crossing of the invaded
state sits at xi = 0.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import (
    IntegrationBlowup,
    NewtonStall,
    NoCrossing,
    NoSignChange,
    SupersonicSpeed,
    TailTooShort,
    WrongEndpoint,
)

__all__ = [
    "FrontProfile",
    "speed_convert",
    "speed_convert_inverse",
    "find_bistable_speed_scalar",
    "solve_profile_system",
    "normalize_profile",
    "tail_decay_rate",
    "ode_residual",
    "energy_speed_identity",
    "save_profile",
    "load_profile",
]


def speed_convert(c, alpha):
    """Parabolic speed -> physical speed, s = c / sqrt(1 + alpha c^2)."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    c = float(c)
    return c / math.sqrt(1.0 + alpha * c * c)


def speed_convert_inverse(s, alpha):
    """Physical speed -> parabolic speed, c = s / sqrt(1 - alpha s^2)."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    s = float(s)
    if alpha > 0 and abs(s) >= 1.0 / math.sqrt(alpha):
        raise SupersonicSpeed(f"|s|={abs(s)} >= 1/sqrt(alpha)={1/math.sqrt(alpha)}")
    return s / math.sqrt(1.0 - alpha * s * s)


@dataclass
class FrontProfile:
    """A sampled heteroclinic profile on a uniform xi-grid."""

    xi: np.ndarray        # (M,), uniform
    phi: np.ndarray       # (M, n)
    dphi: np.ndarray      # (M, n)
    c: float              # parabolic speed
    alpha: float
    m_minus: np.ndarray   # (n,)
    m_plus: np.ndarray    # (n,)
    xi0: float = 0.0      # accumulated normalization offset
    residual: float = float("nan")   # collocation residual (max-norm), nan for shooting
    tail_rate_minus: float | None = None
    tail_rate_plus: float | None = None

    @property
    def s(self):
        """Physical speed for this profile's alpha."""
        return speed_convert(self.c, self.alpha)

    @property
    def n(self):
        return self.phi.shape[1]

    @property
    def dxi(self):
        return float(self.xi[1] - self.xi[0])

    def interpolator(self):
        return CubicSpline(self.xi, self.phi, axis=0)


def ode_residual(profile, potential):
    """Max-norm residual of the front ODE on the interior sample grid,
    with phi'' and phi' from 4th-order central differences."""
    h = profile.dxi
    p = profile.phi
    d2 = (-p[:-4] + 16 * p[1:-3] - 30 * p[2:-2] + 16 * p[3:-1] - p[4:]) / (12 * h * h)
    d1 = (p[:-4] - 8 * p[1:-3] + 8 * p[3:-1] - p[4:]) / (12 * h)
    g = potential.grad(p[2:-2])
    res = d2 + profile.c * d1 - g
    return float(np.max(np.abs(res)))


def energy_speed_identity(profile, potential):
    """(c * integral phi'^2, V(m_plus) - V(m_minus)) - should agree."""
    lhs = profile.c * np.trapezoid(np.sum(profile.dphi ** 2, axis=1), profile.xi)
    rhs = float(potential.value(profile.m_plus) - potential.value(profile.m_minus))
    return lhs, rhs


# ---------------------------------------------------------------------------
# shooting (scalar case)
# ---------------------------------------------------------------------------

def _departure(potential, m_minus, m_plus, c, offset=1e-6):
    """Initial point on the unstable manifold of m_minus, headed to m_plus."""
    lam = float(potential.hess(np.asarray([m_minus]))[0, 0])
    mu_plus = 0.5 * (-c + math.sqrt(c * c + 4.0 * lam))
    e = 1.0 if m_plus > m_minus else -1.0
    return m_minus + offset * e, offset * e * mu_plus


def _classify_shot(potential, m_minus, m_plus, c, offset, blowup_radius,
                   xi_max=400.0):
    """Integrate one shot; return ('over'|'under'|'converged', trajectory).

    over  = phi crosses past m_plus (damping too weak)
    under = phi' reverses before reaching m_plus (damping too strong)
    """
    phi0, dphi0 = _departure(potential, m_minus, m_plus, c, offset)
    if abs(phi0) > blowup_radius:
        raise IntegrationBlowup(
            f"departure point |{phi0}| already beyond radius {blowup_radius}")
    e = 1.0 if m_plus > m_minus else -1.0

    def rhs(_, y):
        return [y[1], -c * y[1] + potential.grad(np.asarray([y[0]]))[0]]

    def ev_over(_, y):
        return (y[0] - m_plus) * e
    ev_over.terminal = True
    ev_over.direction = 1.0

    def ev_under(_, y):
        return y[1] * e
    ev_under.terminal = True
    ev_under.direction = -1.0

    def ev_blow(_, y):
        return abs(y[0]) - blowup_radius
    ev_blow.terminal = True
    ev_blow.direction = 1.0

    sol = solve_ivp(rhs, (0.0, xi_max), [phi0, dphi0],
                    events=[ev_over, ev_under, ev_blow],
                    rtol=1e-12, atol=1e-14, dense_output=True, max_step=1.0)
    if sol.t_events[2].size:
        raise IntegrationBlowup(f"|phi| exceeded {blowup_radius} at c={c}")
    if sol.t_events[0].size:
        return "over", sol
    # no crossing of m_plus: undershoot, whether phi' reversed or the shot
    # stalled monotonically into the saddle basin (strongly overdamped case)
    return "under", sol


def find_bistable_speed_scalar(potential, m_minus, m_plus, c_bracket,
                               d_esc=None, alpha=0.0, offset=1e-6,
                               blowup_radius=None, bracket_tol=1e-10,
                               sample_step=0.005):
    """Bisection on the damping coefficient c for the scalar heteroclinic
    connection m_minus -> m_plus, using an overshoot/undershoot shooting
    criterion from the unstable manifold of m_minus.

    Requires n = 1 and V(m_minus) <= V(m_plus) (equality gives c* = 0; the
    bracket is extended slightly below zero in that case so the bisection can
    close on it). Returns (c_star, FrontProfile).
    """
    if potential.n != 1:
        raise ValueError("shooting solver is scalar-only; use solve_profile_system")
    m_minus = float(np.asarray(m_minus).reshape(()))
    m_plus = float(np.asarray(m_plus).reshape(()))
    v_minus = float(potential.value(np.asarray([m_minus])))
    v_plus = float(potential.value(np.asarray([m_plus])))
    if v_minus > v_plus + 1e-14:
        raise ValueError("need V(m_minus) <= V(m_plus) for an invading front")
    if blowup_radius is None:
        blowup_radius = 10.0 * max(1.0, abs(m_minus), abs(m_plus))

    c_lo, c_hi = float(c_bracket[0]), float(c_bracket[1])
    kind_lo, _ = _classify_shot(potential, m_minus, m_plus, c_lo, offset, blowup_radius)
    kind_hi, _ = _classify_shot(potential, m_minus, m_plus, c_hi, offset, blowup_radius)
    if kind_lo != "over" and c_lo == 0.0:
        # equal well depths: anti-damped shots gain energy and overshoot
        for c_try in (-1e-3, -1e-2, -1e-1):
            kind_lo, _ = _classify_shot(potential, m_minus, m_plus, c_try,
                                        offset, blowup_radius)
            if kind_lo == "over":
                c_lo = c_try
                break
    if not (kind_lo == "over" and kind_hi == "under"):
        raise NoSignChange(
            f"bracket [{c_lo}, {c_hi}] classifies as ({kind_lo}, {kind_hi})")

    while c_hi - c_lo > bracket_tol:
        mid = 0.5 * (c_lo + c_hi)
        kind, _ = _classify_shot(potential, m_minus, m_plus, mid, offset, blowup_radius)
        if kind == "over":
            c_lo = mid
        else:
            c_hi = mid
    c_star = 0.5 * (c_lo + c_hi)

    _, sol = _classify_shot(potential, m_minus, m_plus, c_star, offset, blowup_radius)
    # truncate the trajectory at its closest approach to m_plus
    t_dense = np.arange(0.0, sol.t[-1], sample_step)
    y = sol.sol(t_dense)
    k_best = int(np.argmin(np.abs(y[0] - m_plus)))
    t_cut = t_dense[: k_best + 1]
    profile = FrontProfile(
        xi=t_cut,
        phi=y[0, : k_best + 1, None].copy(),
        dphi=y[1, : k_best + 1, None].copy(),
        c=c_star,
        alpha=alpha,
        m_minus=np.asarray([m_minus]),
        m_plus=np.asarray([m_plus]),
    )
    if d_esc is not None:
        profile = normalize_profile(profile, d_esc)
    return c_star, _with_tail_rates(profile, potential)


# ---------------------------------------------------------------------------
# collocation (any n)
# ---------------------------------------------------------------------------

def _with_tail_rates(profile, potential):
    """Populate the fitted tail-rate fields where the tails are clean."""
    rates = {}
    for end in ("minus", "plus"):
        try:
            rates[end] = tail_decay_rate(profile, end, potential).rate
        except TailTooShort:
            rates[end] = None
    return replace(profile, tail_rate_minus=rates["minus"],
                   tail_rate_plus=rates["plus"])


def _decay_rates(potential, m, c):
    """(mu_plus, mu_minus) arrays per Hessian eigenvalue at m:
    roots of mu^2 + c mu - lam = 0."""
    eigs = np.linalg.eigvalsh(potential.hess(np.asarray(m, dtype=float)))
    disc = np.sqrt(c * c + 4.0 * eigs)
    return 0.5 * (-c + disc), 0.5 * (-c - disc), eigs


def default_truncation(potential, m_minus, m_plus, c):
    """Half-length so the linear tail amplitude at the boundary is < 1e-10."""
    mu_p, _, _ = _decay_rates(potential, m_minus, c)
    _, mu_m, _ = _decay_rates(potential, m_plus, c)
    rate = min(np.min(mu_p), np.min(np.abs(mu_m)))
    return 25.0 / max(rate, 1e-3)


def _tanh_guess(xi, m_minus, m_plus, width):
    ramp = 0.5 * (1.0 + np.tanh(xi / width))
    return m_minus[None, :] + ramp[:, None] * (m_plus - m_minus)[None, :]


def solve_profile_system(potential, m_minus, m_plus, c=None, initial_guess=None,
                         d_esc=None, L_xi=None, num_nodes=2001, c_guess=0.5,
                         alpha=0.0, newton_tol=1e-9, max_newton=60,
                         refine_dc=1e-9, max_nodes=40001):
    """Damped-Newton collocation for the front ODE on [-L_xi, L_xi].

    4th-order differences inside, 2nd-order next to the ends, projected
    linearized boundary conditions at both ends. When ``c is None`` the speed
    is an unknown closed by the phase condition |phi(0) - m_plus| = d_esc,
    and the grid is refined (nodes doubled) until c moves by < refine_dc.
    Returns a FrontProfile.
    """
    m_minus = np.atleast_1d(np.asarray(m_minus, dtype=float))
    m_plus = np.atleast_1d(np.asarray(m_plus, dtype=float))
    n = potential.n
    solve_speed = c is None
    if solve_speed and d_esc is None:
        raise ValueError("free-speed solve needs d_esc for the phase condition")

    c_eff = c_guess if solve_speed else float(c)
    if L_xi is None:
        L_xi = default_truncation(potential, m_minus, m_plus, max(abs(c_eff), 1e-3))

    nodes = num_nodes
    prev_c = None
    guess = initial_guess
    while True:
        prof = _collocate_once(potential, m_minus, m_plus,
                               None if solve_speed else float(c),
                               guess, d_esc, L_xi, nodes, c_eff,
                               newton_tol, max_newton)
        prof = replace(prof, alpha=alpha)
        if not solve_speed:
            return _with_tail_rates(prof, potential)
        if prev_c is not None and abs(prof.c - prev_c) < refine_dc:
            return _with_tail_rates(prof, potential)
        prev_c = prof.c
        c_eff = prof.c
        nodes = 2 * (nodes - 1) + 1
        if nodes > max_nodes:
            return _with_tail_rates(prof, potential)
        spline = prof.interpolator()
        xi_new = np.linspace(-L_xi, L_xi, nodes)
        guess = spline(xi_new)


def _collocate_once(potential, m_minus, m_plus, c_fixed, initial_guess, d_esc,
                    L_xi, N, c_guess, newton_tol, max_newton):
    n = potential.n
    solve_speed = c_fixed is None
    xi = np.linspace(-L_xi, L_xi, N)
    h = xi[1] - xi[0]
    mid = N // 2  # xi == 0 for odd N

    if initial_guess is None:
        width = max(1.0, 2.0 / math.sqrt(max(1e-6, 0.5)))
        phi = _tanh_guess(xi, m_minus, m_plus, width)
    else:
        phi = np.array(initial_guess, dtype=float).reshape(N, n)

    # eigen-decompositions for the projected linearized BCs
    w_m, Vm = np.linalg.eigh(potential.hess(m_minus))
    w_p, Vp = np.linalg.eigh(potential.hess(m_plus))

    nuk = N * n
    unknowns = nuk + (1 if solve_speed else 0)

    def pack_residual(phi, c):
        F = np.zeros(unknowns)
        # interior, 4th order
        d2 = (-phi[:-4] + 16 * phi[1:-3] - 30 * phi[2:-2] + 16 * phi[3:-1]
              - phi[4:]) / (12 * h * h)
        d1 = (phi[:-4] - 8 * phi[1:-3] + 8 * phi[3:-1] - phi[4:]) / (12 * h)
        F[2 * n:(N - 2) * n] = (d2 + c * d1 - potential.grad(phi[2:-2])).ravel()
        # second-order rows adjacent to the ends
        for k in (1, N - 2):
            d2k = (phi[k - 1] - 2 * phi[k] + phi[k + 1]) / (h * h)
            d1k = (phi[k + 1] - phi[k - 1]) / (2 * h)
            F[k * n:(k + 1) * n] = d2k + c * d1k - potential.grad(phi[k])
        # boundary conditions
        mu_p = 0.5 * (-c + np.sqrt(c * c + 4.0 * w_m))
        mu_m = 0.5 * (-c - np.sqrt(c * c + 4.0 * w_p))
        dphi0 = (-3 * phi[0] + 4 * phi[1] - phi[2]) / (2 * h)
        dphiN = (3 * phi[-1] - 4 * phi[-2] + phi[-3]) / (2 * h)
        F[0:n] = Vm.T @ dphi0 - mu_p * (Vm.T @ (phi[0] - m_minus))
        F[(N - 1) * n:N * n] = Vp.T @ dphiN - mu_m * (Vp.T @ (phi[-1] - m_plus))
        if solve_speed:
            F[nuk] = float(np.sum((phi[mid] - m_plus) ** 2) - d_esc * d_esc)
        return F

    def pack_jacobian(phi, c):
        rows, cols, vals = [], [], []

        def add_block(r, k, mat):
            # mat: (n, n) block coupling residual row-block r to node k
            for i in range(n):
                for j in range(n):
                    v = mat[i, j]
                    if v != 0.0:
                        rows.append(r * n + i)
                        cols.append(k * n + j)
                        vals.append(v)

        eye = np.eye(n)
        inv12h2 = 1.0 / (12 * h * h)
        inv12h = 1.0 / (12 * h)
        hesses = potential.hess(phi)
        for k in range(2, N - 2):
            add_block(k, k - 2, (-inv12h2 + c * inv12h) * eye)
            add_block(k, k - 1, (16 * inv12h2 - 8 * c * inv12h) * eye)
            add_block(k, k, -30 * inv12h2 * eye - hesses[k])
            add_block(k, k + 1, (16 * inv12h2 + 8 * c * inv12h) * eye)
            add_block(k, k + 2, (-inv12h2 - c * inv12h) * eye)
        for k in (1, N - 2):
            add_block(k, k - 1, (1 / (h * h) - c / (2 * h)) * eye)
            add_block(k, k, -2 / (h * h) * eye - hesses[k])
            add_block(k, k + 1, (1 / (h * h) + c / (2 * h)) * eye)
        mu_p = 0.5 * (-c + np.sqrt(c * c + 4.0 * w_m))
        mu_m = 0.5 * (-c - np.sqrt(c * c + 4.0 * w_p))
        add_block(0, 0, Vm.T * (-3 / (2 * h)) - (mu_p[:, None] * Vm.T))
        add_block(0, 1, Vm.T * (4 / (2 * h)))
        add_block(0, 2, Vm.T * (-1 / (2 * h)))
        add_block(N - 1, N - 1, Vp.T * (3 / (2 * h)) - (mu_m[:, None] * Vp.T))
        add_block(N - 1, N - 2, Vp.T * (-4 / (2 * h)))
        add_block(N - 1, N - 3, Vp.T * (1 / (2 * h)))

        data = [np.asarray(vals)]
        rc = [np.asarray(rows), np.asarray(cols)]
        if solve_speed:
            # dF/dc column and phase-condition row
            d1 = np.zeros((N, n))
            d1[2:-2] = (phi[:-4] - 8 * phi[1:-3] + 8 * phi[3:-1] - phi[4:]) / (12 * h)
            for k in (1, N - 2):
                d1[k] = (phi[k + 1] - phi[k - 1]) / (2 * h)
            dmu_p = 0.5 * (-1 + c / np.sqrt(c * c + 4.0 * w_m))
            dmu_m = 0.5 * (-1 - c / np.sqrt(c * c + 4.0 * w_p))
            col_c = np.zeros(unknowns)
            col_c[n:(N - 1) * n] = d1[1:-1].ravel()
            col_c[0:n] = -(dmu_p * (Vm.T @ (phi[0] - m_minus)))
            col_c[(N - 1) * n:N * n] = -(dmu_m * (Vp.T @ (phi[-1] - m_plus)))
            rows_c = np.nonzero(col_c[:nuk])[0]
            rc[0] = np.concatenate([rc[0], rows_c])
            rc[1] = np.concatenate([rc[1], np.full(rows_c.shape, nuk)])
            data[0] = np.concatenate([data[0], col_c[rows_c]])
            # phase row
            pr = np.arange(mid * n, (mid + 1) * n)
            rc[0] = np.concatenate([rc[0], np.full(n, nuk)])
            rc[1] = np.concatenate([rc[1], pr])
            data[0] = np.concatenate([data[0], 2.0 * (phi[mid] - m_plus)])
        return sparse.csr_matrix((data[0], (rc[0], rc[1])),
                                 shape=(unknowns, unknowns))

    c_val = c_guess if solve_speed else c_fixed
    F = pack_residual(phi, c_val)
    fnorm = np.max(np.abs(F))
    stall = 0
    for _ in range(max_newton):
        if fnorm <= newton_tol:
            break
        J = pack_jacobian(phi, c_val).tocsc()
        step = spsolve(J, -F)
        if not np.all(np.isfinite(step)):
            # fall back to a regularized least-squares step (translation
            # near-null-space can make the square solve blow up)
            JtJ = (J.T @ J).tocsc()
            tau = 1e-9 * max(1.0, float(np.max(np.abs(F))))
            JtJ += tau * sparse.identity(unknowns, format="csc")
            step = spsolve(JtJ, -(J.T @ F))
        cap = 10.0 * (1.0 + float(np.max(np.abs(phi))) + abs(c_val))
        seg = float(np.max(np.abs(step)))
        if seg > cap:
            step *= cap / seg
        lam = 1.0
        improved = False
        for _ in range(30):
            phi_t = phi + lam * step[:nuk].reshape(N, n)
            c_t = c_val + (lam * step[nuk] if solve_speed else 0.0)
            F_t = pack_residual(phi_t, c_t)
            f_t = np.max(np.abs(F_t))
            if f_t < fnorm:
                improved = True
                break
            lam *= 0.5
        if not improved:
            stall += 1
            if stall >= 3:
                break
        else:
            stall = 0
            phi, c_val, F, fnorm = phi_t, c_t, F_t, f_t

    if fnorm > newton_tol:
        dev0 = float(np.linalg.norm(phi[0] - m_minus))
        devN = float(np.linalg.norm(phi[-1] - m_plus))
        if dev0 > 1e-3 or devN > 1e-3:
            raise WrongEndpoint(
                f"no connection: residual {fnorm:.2e}, end deviations "
                f"({dev0:.2e}, {devN:.2e})")
        raise NewtonStall(f"residual plateau at {fnorm:.2e} > {newton_tol:.1e}")

    dev0 = float(np.linalg.norm(phi[0] - m_minus))
    devN = float(np.linalg.norm(phi[-1] - m_plus))
    swing = float(np.max(np.linalg.norm(phi - m_plus[None, :], axis=1)))
    if dev0 > 1e-5 or devN > 1e-5 or swing < 10 * max(dev0, devN) + 1e-8:
        raise WrongEndpoint(
            f"converged to a wrong/constant solution (end deviations "
            f"{dev0:.2e}, {devN:.2e}; swing {swing:.2e})")

    dphi = np.gradient(phi, xi, axis=0, edge_order=2)
    dphi[2:-2] = (phi[:-4] - 8 * phi[1:-3] + 8 * phi[3:-1] - phi[4:]) / (12 * h)
    return FrontProfile(
        xi=xi, phi=phi, dphi=dphi, c=float(c_val), alpha=0.0,
        m_minus=m_minus, m_plus=m_plus, residual=float(fnorm),
    )


# ---------------------------------------------------------------------------
# normalization and tails
# ---------------------------------------------------------------------------

def normalize_profile(profile, d_esc):
    """Translate xi so the LAST crossing of |phi - m_plus| = d_esc sits at 0.

    The approach to m_plus is monotone past the last crossing; that is
    asserted, as is |phi(xi) - m_plus| < d_esc for all sampled xi > 0.
    """
    amp = np.linalg.norm(profile.phi - profile.m_plus[None, :], axis=1)
    if np.max(amp) < d_esc:
        raise NoCrossing(
            f"profile never reaches distance {d_esc} from m_plus "
            f"(max deviation {np.max(amp):.3e})")
    above = np.nonzero(amp >= d_esc)[0]
    k = above[-1]
    if k == len(amp) - 1:
        raise NoCrossing("profile still outside the escape ball at xi_max")
    spl_amp = CubicSpline(profile.xi, amp)
    from scipy.optimize import brentq
    xi0 = brentq(lambda x: spl_amp(x) - d_esc, profile.xi[k], profile.xi[k + 1],
                 xtol=1e-14)

    h = profile.dxi
    spl_phi = CubicSpline(profile.xi, profile.phi, axis=0)
    spl_dphi = CubicSpline(profile.xi, profile.dphi, axis=0)
    lo = math.ceil((profile.xi[0] - xi0) / h)
    hi = math.floor((profile.xi[-1] - xi0) / h)
    xi_new = np.arange(lo, hi + 1) * h
    phi_new = spl_phi(xi_new + xi0)
    dphi_new = spl_dphi(xi_new + xi0)

    out = replace(profile, xi=xi_new, phi=phi_new, dphi=dphi_new,
                  xi0=profile.xi0 + xi0)
    amp_new = np.linalg.norm(out.phi - out.m_plus[None, :], axis=1)
    pos = out.xi > 0
    if np.any(amp_new[pos] >= d_esc):
        raise NoCrossing("normalization failed: escape re-entered for xi > 0")
    tail = out.xi >= 0
    mono = np.einsum("ij,ij->i", out.phi[tail] - out.m_plus[None, :],
                     out.dphi[tail])
    if np.any(mono >= 0):
        raise NoCrossing("tail approach to m_plus is not monotone")
    return out


@dataclass
class TailFit:
    rate: float                  # fitted exponential decay rate (positive)
    linearized_rates: np.ndarray  # per Hessian eigenvalue at the end state
    n_points: int
    window: tuple


def tail_decay_rate(profile, end, potential, noise_floor=1e-12):
    """Least-squares slope of log|phi - m| over the last clean decade of the
    requested tail, plus the linearization rates (roots of mu^2 + c mu = lam).

    For end='plus' the relevant root is |mu_-| = (c + sqrt(c^2+4 lam))/2; for
    end='minus' it is mu_+ = (-c + sqrt(c^2+4 lam))/2.
    """
    c = profile.c
    if end == "plus":
        m = profile.m_plus
        amp = np.linalg.norm(profile.phi - m[None, :], axis=1)
        order = slice(None, None, 1)
        eigs = np.linalg.eigvalsh(potential.hess(m))
        lin = 0.5 * (c + np.sqrt(c * c + 4.0 * eigs))
    elif end == "minus":
        m = profile.m_minus
        amp = np.linalg.norm(profile.phi - m[None, :], axis=1)
        order = slice(None, None, -1)
        eigs = np.linalg.eigvalsh(potential.hess(m))
        lin = 0.5 * (-c + np.sqrt(c * c + 4.0 * eigs))
    else:
        raise ValueError("end must be 'plus' or 'minus'")

    xi = profile.xi[order]
    a = amp[order]
    k_peak = int(np.argmax(a))
    idx = np.arange(k_peak, len(a))
    a_tail = a[idx]
    a_peak = float(a[k_peak])
    a_min = float(a_tail.min())
    if a_min > a_peak / 100.0:
        raise TailTooShort("less than 2 decades of usable tail amplitude")
    # Fit decade: 4-5 decades below the peak, past the nonlinear core but
    # clear of truncation/shot-departure pollution near the smallest samples.
    lo = max(a_peak * 1e-5, 100.0 * noise_floor)
    hi = 10.0 * lo
    if a_min > lo / 3.0:
        lo = max(3.0 * a_min, 100.0 * noise_floor)
        hi = 10.0 * lo
    if hi > a_peak / 10.0:
        raise TailTooShort("no clean decade between the core and the floor")
    sel = idx[(a_tail >= lo) & (a_tail <= hi)]
    if len(sel) < 10:
        raise TailTooShort(f"only {len(sel)} samples in the fit decade")
    x = xi[sel]
    y = np.log(a[sel])
    slope = np.polyfit(x, y, 1)[0]
    rate = -slope if end == "plus" else slope
    return TailFit(rate=float(rate), linearized_rates=lin, n_points=len(sel),
                   window=(float(lo), float(hi)))


# ---------------------------------------------------------------------------
# archive format
# ---------------------------------------------------------------------------

def save_profile(profile, path):
    """CSV `xi,phi_1..phi_n,dphi_1..dphi_n` with a JSON metadata sidecar."""
    path = str(path)
    n = profile.n
    header = (["xi"] + [f"phi_{i+1}" for i in range(n)]
              + [f"dphi_{i+1}" for i in range(n)])
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for k in range(len(profile.xi)):
            w.writerow([repr(float(profile.xi[k]))]
                       + [repr(float(v)) for v in profile.phi[k]]
                       + [repr(float(v)) for v in profile.dphi[k]])
    meta = {
        "c": profile.c,
        "s": profile.s,
        "alpha": profile.alpha,
        "m_minus": [float(v) for v in profile.m_minus],
        "m_plus": [float(v) for v in profile.m_plus],
        "xi0": profile.xi0,
        "residual": profile.residual,
    }
    with open(path + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2)


def load_profile(path):
    path = str(path)
    with open(path + ".meta.json") as f:
        meta = json.load(f)
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        n = (len(header) - 1) // 2
        rows = np.asarray([[float(v) for v in row] for row in r])
    return FrontProfile(
        xi=rows[:, 0],
        phi=rows[:, 1:1 + n],
        dphi=rows[:, 1 + n:1 + 2 * n],
        c=meta["c"],
        alpha=meta["alpha"],
        m_minus=np.asarray(meta["m_minus"]),
        m_plus=np.asarray(meta["m_plus"]),
        xi0=meta["xi0"],
        residual=meta["residual"],
    )
