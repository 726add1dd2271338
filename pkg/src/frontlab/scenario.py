"""Scenario files: TOML key/value with JSON sub-objects for the potential.

A scenario fully determines a simulation (potential, grid, time stepping,
initial condition, snapshot schedule, diagnostics toggles); identical
scenario + seed reproduce byte-identical outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:           # Python < 3.11
    import tomli as tomllib

from .errors import DomainTooSmall, ScenarioError
from .pdesim import InitialCondition, cfl_check, init_state
from .potential import Potential

__all__ = ["Scenario", "load_scenario"]


@dataclass
class Scenario:
    potential: Potential
    alpha: float
    domain: tuple            # (x_left, x_right)
    dx: float
    dt: object               # float or "auto"
    t_final: float
    ic: InitialCondition
    snapshot_times: list
    snapshot_triples: bool = False
    hook_interval: int = 1
    track_minimum: object = None     # reference minimum for escape tracking
    x_hom_offset: float = 8.0        # marker distance from the right boundary
    frames: list = field(default_factory=list)   # dicts: {c, z_init, ...}
    eps_grid: list = field(default_factory=lambda: [0.05])
    noise_amplitude: float = 0.0
    seed: int = 0
    name: str = "scenario"

    def resolve_dt(self, lam_max=None):
        if self.dt != "auto":
            return float(self.dt)
        if self.alpha > 0:
            limit = 0.9 * self.dx * np.sqrt(self.alpha)
            if lam_max is not None:
                limit = min(limit, 0.2 / lam_max)
        else:
            limit = 0.45 * self.dx * self.dx
        return 0.9 * limit

    def validate(self, lam_max=None, minima=None):
        dt = self.resolve_dt(lam_max)
        rep = cfl_check(self.alpha, self.dx, dt, lam_max)
        if not rep.ok:
            raise ScenarioError("; ".join(rep.violations))
        try:
            init_state(self.domain[0], self.domain[1], self.dx, self.ic,
                       self.alpha)
        except DomainTooSmall as exc:
            raise ScenarioError(str(exc)) from exc
        bad = [t for t in self.snapshot_times if t > self.t_final + 1e-9]
        if bad:
            raise ScenarioError(f"snapshot times beyond t_final: {bad}")
        if minima is not None:
            locs = [np.atleast_1d(m.location if hasattr(m, "location") else m)
                    for m in minima]
            for p in self.ic.plateaus:
                p = np.atleast_1d(np.asarray(p, dtype=float))
                if not any(np.linalg.norm(p - loc) < 1e-6 for loc in locs):
                    raise ScenarioError(
                        f"plateau value {p} is not a minimum of the potential")
        return dt

    def build_state(self):
        ic = self.ic
        if self.noise_amplitude > 0:
            rng = np.random.default_rng(self.seed)
            state = init_state(self.domain[0], self.domain[1], self.dx, ic,
                               self.alpha)
            noise = self.noise_amplitude * (
                2.0 * rng.random(state.u.shape) - 1.0)
            # keep the boundary margins exactly on the plateaus
            guard = max(1, int(0.08 * state.N))
            noise[:guard] = 0.0
            noise[-guard:] = 0.0
            state.u = state.u + noise
            return state
        return init_state(self.domain[0], self.domain[1], self.dx, ic,
                          self.alpha)


def _parse_potential(value):
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"potential is not valid JSON: {exc}") from exc
    if not isinstance(value, dict):
        raise ScenarioError("potential must be a JSON object")
    return Potential.from_dict(value)


def load_scenario(path):
    """Parse and structurally validate a scenario file."""
    with open(path, "rb") as f:
        try:
            raw = tomllib.load(f)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"TOML parse error: {exc}") from exc
    try:
        pot = _parse_potential(raw["potential"])
        alpha = float(raw["alpha"])
        domain = tuple(float(v) for v in raw["domain"])
        dx = float(raw["dx"])
        dt = raw.get("dt", "auto")
        if dt != "auto":
            dt = float(dt)
        t_final = float(raw["t_final"])
        ic_raw = raw["initial_condition"]
        ic = InitialCondition(
            plateaus=[list(map(float, np.atleast_1d(p)))
                      for p in ic_raw["plateaus"]],
            interfaces=[float(v) for v in ic_raw.get("interfaces", [])],
            width=float(ic_raw.get("width", 1.0)),
        )
        snaps = raw.get("snapshots", {})
        if "times" in snaps:
            times = [float(v) for v in snaps["times"]]
        elif "count" in snaps:
            count = int(snaps["count"])
            times = list(np.linspace(0.0, t_final, count))
        else:
            times = [0.0, t_final]
        diag = raw.get("diagnostics", {})
        return Scenario(
            potential=pot,
            alpha=alpha,
            domain=domain,
            dx=dx,
            dt=dt,
            t_final=t_final,
            ic=ic,
            snapshot_times=times,
            snapshot_triples=bool(snaps.get("triples", False)),
            hook_interval=int(diag.get("hook_interval", 1)),
            track_minimum=diag.get("track_minimum"),
            x_hom_offset=float(diag.get("x_hom_offset", 8.0)),
            frames=list(diag.get("frames", [])),
            eps_grid=[float(v) for v in diag.get("eps", [0.05])],
            noise_amplitude=float(raw.get("noise_amplitude", 0.0)),
            seed=int(raw.get("seed", 0)),
            name=str(raw.get("name", "scenario")),
        )
    except KeyError as exc:
        raise ScenarioError(f"missing scenario field: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario value: {exc}") from exc
