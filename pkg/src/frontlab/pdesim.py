"""Time integration of alpha u_tt + u_t = -grad V(u) + u_xx on a uniform grid.

Damped leapfrog for alpha > 0 (the damping term is centered, so the update is
pointwise linear in u+), explicit Euler for the parabolic limit alpha = 0.
Homogeneous Neumann boundaries via mirror ghost cells.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundaryBreach, DomainTooSmall, NonFinite

__all__ = [
    "InitialCondition",
    "FieldState",
    "Snapshot",
    "RunRecord",
    "init_state",
    "step",
    "cfl_check",
    "run",
    "sup_norm_hook",
    "write_snapshots_ndjson",
    "read_snapshots_ndjson",
]


@dataclass
class InitialCondition:
    """Plateau values glued by tanh ramps at the given interfaces."""

    plateaus: list          # k+1 vectors (members of the minima set)
    interfaces: list        # k strictly increasing positions
    width: float = 1.0
    velocity: object = None  # None -> zero; or callable x -> (n,) / array (N, n)

    def __post_init__(self):
        if len(self.plateaus) != len(self.interfaces) + 1:
            raise ValueError("need exactly one more plateau than interfaces")
        if any(b <= a for a, b in zip(self.interfaces, self.interfaces[1:])):
            raise ValueError("interfaces must be strictly increasing")
        if self.width <= 0:
            raise ValueError("interface width must be positive")


@dataclass
class FieldState:
    """Discretized (u, u_t) in leapfrog form."""

    x0: float
    dx: float
    u: np.ndarray               # (N, n)
    t: float
    alpha: float
    u_prev: np.ndarray = None   # previous level; None before the first step
    u_t0: np.ndarray = None     # initial velocity, consumed by the first step
    step_count: int = 0
    dt: float = None            # bound at first step; later steps must match
    m_left: np.ndarray = None   # boundary plateau references for the monitor
    m_right: np.ndarray = None

    @property
    def N(self):
        return self.u.shape[0]

    @property
    def n(self):
        return self.u.shape[1]

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.N)


@dataclass
class Snapshot:
    t: float
    x0: float
    dx: float
    u: np.ndarray   # (N, n)
    ut: np.ndarray  # (N, n)
    alpha: float = 0.0

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.u.shape[0])

    @property
    def ux(self):
        return np.gradient(self.u, self.dx, axis=0, edge_order=2)


@dataclass
class RunRecord:
    snapshots: list
    series: dict                # name -> np.ndarray, all sharing series["t"]
    alpha: float
    dx: float
    x0: float
    dt: float
    aborted: str = ""           # non-empty if the run stopped early

    def snapshot_at(self, t):
        k = int(np.argmin([abs(s.t - t) for s in self.snapshots]))
        return self.snapshots[k]


def init_state(x_left, x_right, dx, ic, alpha):
    """Build the initial field from plateau data.

    Raises DomainTooSmall if an interface sits within 10 widths of a boundary.
    """
    for xi in ic.interfaces:
        if xi - x_left < 10 * ic.width or x_right - xi < 10 * ic.width:
            raise DomainTooSmall(
                f"interface at {xi} within 10 widths of the boundary")
    N = int(round((x_right - x_left) / dx)) + 1
    x = x_left + dx * np.arange(N)
    plateaus = [np.atleast_1d(np.asarray(p, dtype=float)) for p in ic.plateaus]
    n = plateaus[0].shape[0]
    u = np.tile(plateaus[0], (N, 1))
    for p_prev, p_next, xi in zip(plateaus[:-1], plateaus[1:], ic.interfaces):
        ramp = 0.5 * (1.0 + np.tanh((x - xi) / ic.width))
        u = u + ramp[:, None] * (p_next - p_prev)[None, :]
    if ic.velocity is None:
        ut0 = np.zeros_like(u)
    elif callable(ic.velocity):
        ut0 = np.asarray([np.atleast_1d(ic.velocity(xk)) for xk in x], dtype=float)
    else:
        ut0 = np.asarray(ic.velocity, dtype=float).reshape(N, n)
    return FieldState(
        x0=float(x_left), dx=float(dx), u=u, t=0.0, alpha=float(alpha),
        u_t0=ut0, m_left=plateaus[0].copy(), m_right=plateaus[-1].copy(),
    )


def _laplacian(u, dx):
    lap = np.empty_like(u)
    lap[1:-1] = (u[:-2] - 2 * u[1:-1] + u[2:]) / (dx * dx)
    lap[0] = 2.0 * (u[1] - u[0]) / (dx * dx)        # mirror ghost u[-1] = u[1]
    lap[-1] = 2.0 * (u[-2] - u[-1]) / (dx * dx)
    return lap


def _check_monitors(state, u_new):
    if not np.all(np.isfinite(u_new)):
        raise NonFinite(f"non-finite value at t={state.t + (state.dt or 0)}")
    margin = max(1, int(0.05 * state.N))
    if state.m_left is not None:
        dev_l = np.max(np.abs(u_new[:margin] - state.m_left[None, :]))
        dev_r = np.max(np.abs(u_new[-margin:] - state.m_right[None, :]))
        if dev_l > 1e-3 or dev_r > 1e-3:
            raise BoundaryBreach(
                f"boundary margin breached at t={state.t:.3f} "
                f"(left {dev_l:.2e}, right {dev_r:.2e})")


def step(state, potential, dt):
    """One time step; returns a new FieldState (the input is not mutated)."""
    if state.dt is not None and abs(dt - state.dt) > 1e-15:
        raise ValueError("dt must stay fixed over a leapfrog run")
    u = state.u
    rhs = _laplacian(u, state.dx) - potential.grad(u)
    a = state.alpha
    if a == 0.0:
        u_new = u + dt * rhs
        u_prev = u
    else:
        if state.u_prev is None:
            # second-order Taylor start: u(-dt) from (u0, ut0) and the PDE
            utt0 = (rhs - state.u_t0) / a
            u_prev = u - dt * state.u_t0 + 0.5 * dt * dt * utt0
        else:
            u_prev = state.u_prev
        denom = a + 0.5 * dt
        u_new = (dt * dt * rhs + 2.0 * a * u - (a - 0.5 * dt) * u_prev) / denom
        u_prev = u
    _check_monitors(state, u_new)
    return FieldState(
        x0=state.x0, dx=state.dx, u=u_new, t=state.t + dt, alpha=a,
        u_prev=u_prev, u_t0=None, step_count=state.step_count + 1, dt=dt,
        m_left=state.m_left, m_right=state.m_right,
    )


def sup_norm_hook(view):
    """sup_x |u(x, t)|, for monitoring the attracting-ball estimate."""
    return float(np.max(np.linalg.norm(view.u, axis=1)))


@dataclass
class CflReport:
    ok: bool
    limits: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)


def cfl_check(alpha, dx, dt, lam_max=None):
    """Stability predicate for the two schemes (pure check, never raises)."""
    limits = {}
    violations = []
    if alpha > 0:
        limits["wave"] = 0.9 * dx * np.sqrt(alpha)
        if dt > limits["wave"]:
            violations.append(f"dt={dt} > 0.9 dx sqrt(alpha) = {limits['wave']:.4g}")
        if lam_max is not None:
            limits["stiffness"] = 0.2 / lam_max
            if dt > limits["stiffness"]:
                violations.append(f"dt={dt} > 0.2/lam_max = {limits['stiffness']:.4g}")
    else:
        limits["diffusion"] = 0.45 * dx * dx
        if dt > limits["diffusion"]:
            violations.append(f"dt={dt} > 0.45 dx^2 = {limits['diffusion']:.4g}")
    return CflReport(ok=not violations, limits=limits, violations=violations)


def run(state, potential, dt, t_final, snapshot_times=(), hooks=None,
        hook_interval=1):
    """Advance to t_final, emitting snapshots and per-step scalar series.

    Snapshot times are snapped to the step grid. u_t is reconstructed
    centrally, (u+ - u-)/(2 dt), which costs one lookahead step past each
    emission time (and one past t_final). In parabolic mode u_t comes from
    the PDE right-hand side directly. Step errors abort the run and are
    reported on the record; everything up to the failure is kept.
    """
    hooks = hooks or {}
    n_steps = int(round(t_final / dt))
    want = sorted({min(max(int(round(ts / dt)), 0), n_steps)
                   for ts in snapshot_times})
    want_set = set(want)

    snapshots = []
    series = {name: [] for name in hooks}
    series_t = []
    aborted = ""

    def emit(idx, st, ut):
        snap = Snapshot(t=idx * dt, x0=st.x0, dx=st.dx, u=st.u.copy(), ut=ut,
                        alpha=st.alpha)
        snapshots.append(snap)

    def hook_row(idx, st, ut):
        series_t.append(idx * dt)
        view = Snapshot(t=idx * dt, x0=st.x0, dx=st.dx, u=st.u, ut=ut,
                        alpha=st.alpha)
        for name, fn in hooks.items():
            series[name].append(fn(view))

    cur = state
    failure = None
    try:
        for idx in range(n_steps + 1):
            need_ut = (idx in want_set) or (hooks and idx % hook_interval == 0)
            nxt = None
            if need_ut:
                if cur.alpha == 0.0:
                    ut = _laplacian(cur.u, cur.dx) - potential.grad(cur.u)
                elif idx == 0 and cur.u_t0 is not None:
                    ut = cur.u_t0.copy()  # initial velocity is exact at t=0
                else:
                    nxt = step(cur, potential, dt)  # lookahead for (u+ - u-)/2dt
                    ut = (nxt.u - cur.u_prev) / (2 * dt)
                if idx in want_set:
                    emit(idx, cur, ut)
                if hooks and idx % hook_interval == 0:
                    hook_row(idx, cur, ut)
            if idx < n_steps:
                cur = nxt if nxt is not None else step(cur, potential, dt)
    except (NonFinite, BoundaryBreach) as exc:
        failure = exc
        aborted = f"{type(exc).__name__}: {exc}"

    rec = RunRecord(
        snapshots=snapshots,
        series={"t": np.asarray(series_t),
                **{k: np.asarray(v) for k, v in series.items()}},
        alpha=state.alpha, dx=state.dx, x0=state.x0, dt=dt, aborted=aborted,
    )
    if failure is not None:
        failure.record = rec
        raise failure
    return rec


# ---------------------------------------------------------------------------
# NDJSON snapshot archive
# ---------------------------------------------------------------------------

def write_snapshots_ndjson(snapshots, path):
    """One record per line: {"t","x0","dx","u","ut"}, u/ut per component."""
    with open(path, "w") as f:
        for s in snapshots:
            rec = {
                "t": s.t,
                "x0": s.x0,
                "dx": s.dx,
                "alpha": s.alpha,
                "u": [[float(v) for v in s.u[:, i]] for i in range(s.u.shape[1])],
                "ut": [[float(v) for v in s.ut[:, i]] for i in range(s.ut.shape[1])],
            }
            f.write(json.dumps(rec) + "\n")


def read_snapshots_ndjson(path):
    out = []
    with open(path) as f:
        for line in f:
            if not line.strip():
                continue
            rec = json.loads(line)
            u = np.asarray(rec["u"]).T
            ut = np.asarray(rec["ut"]).T
            out.append(Snapshot(t=rec["t"], x0=rec["x0"], dx=rec["dx"],
                                u=u, ut=ut, alpha=rec.get("alpha", 0.0)))
    return out
