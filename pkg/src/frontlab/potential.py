"""Polynomial potentials V: R^n -> R and the scalar constants derived from them.

A potential is stored as an exact multivariate coefficient table, so the
gradient and Hessian are exact polynomial derivatives (no differencing).
Builtin names expand to coefficient tables; everything downstream only ever
sees the table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial import polynomial as npoly

from .errors import (
    CoercivityFailure,
    DegenerateCriticalPoint,
    EscapeDistanceCollapse,
)

__all__ = [
    "Potential",
    "CriticalPoint",
    "PotentialAnalysis",
    "builtin_potential",
    "find_critical_points",
    "compute_escape_distance",
    "compute_scalars",
    "analyze_potential",
]


class Potential:
    """A smooth potential given by a multivariate polynomial coefficient table.

    Parameters
    ----------
    n : int
        State dimension.
    terms : sequence of (coeff, powers)
        Each term is ``coeff * prod_i u_i**powers[i]``.
    name, params : optional provenance of a builtin.
    """

    def __init__(self, n, terms, name=None, params=None):
        if n < 1:
            raise ValueError("dimension must be a positive integer")
        self.n = int(n)
        coeffs = []
        powers = []
        for c, p in terms:
            p = tuple(int(k) for k in p)
            if len(p) != self.n or any(k < 0 for k in p):
                raise ValueError(f"bad power tuple {p} for n={self.n}")
            coeffs.append(float(c))
            powers.append(p)
        self.coeffs = np.asarray(coeffs, dtype=float)
        self.powers = np.asarray(powers, dtype=int).reshape(len(coeffs), self.n)
        self.name = name
        self.params = dict(params) if params else {}
        self._build_eval_tables()

    def _build_eval_tables(self):
        # For n == 1 keep dense 1-d coefficient vectors; polyval is ~3x
        # faster than the generic broadcast path and pdesim calls grad every
        # time step.
        if self.n == 1:
            deg = int(self.powers.max(initial=0))
            c = np.zeros(deg + 1)
            for coeff, (p,) in zip(self.coeffs, self.powers):
                c[p] += coeff
            self._c1 = c
            self._dc1 = npoly.polyder(c) if deg > 0 else np.zeros(1)
            self._ddc1 = npoly.polyder(c, 2) if deg > 1 else np.zeros(1)
        else:
            # gradient term tables: d/du_i of the table
            self._grad_tables = []
            for i in range(self.n):
                mask = self.powers[:, i] > 0
                gc = self.coeffs[mask] * self.powers[mask, i]
                gp = self.powers[mask].copy()
                gp[:, i] -= 1
                self._grad_tables.append((gc, gp))
            self._hess_tables = {}
            for i in range(self.n):
                gc, gp = self._grad_tables[i]
                for j in range(i, self.n):
                    mask = gp[:, j] > 0
                    hc = gc[mask] * gp[mask, j]
                    hp = gp[mask].copy()
                    hp[:, j] -= 1
                    self._hess_tables[(i, j)] = (hc, hp)

    @staticmethod
    def _eval_table(coeffs, powers, u):
        # u: (..., n) -> (...,)
        if len(coeffs) == 0:
            return np.zeros(u.shape[:-1])
        mono = np.prod(u[..., None, :] ** powers, axis=-1)
        return mono @ coeffs

    def value(self, u):
        u = np.asarray(u, dtype=float)
        if self.n == 1:
            return npoly.polyval(u[..., 0], self._c1)
        return self._eval_table(self.coeffs, self.powers, u)

    def grad(self, u):
        u = np.asarray(u, dtype=float)
        if self.n == 1:
            return npoly.polyval(u[..., 0], self._dc1)[..., None]
        out = np.empty(u.shape)
        for i in range(self.n):
            gc, gp = self._grad_tables[i]
            out[..., i] = self._eval_table(gc, gp, u)
        return out

    def hess(self, u):
        u = np.asarray(u, dtype=float)
        if self.n == 1:
            return npoly.polyval(u[..., 0], self._ddc1)[..., None, None]
        out = np.empty(u.shape + (self.n,))
        for (i, j), (hc, hp) in self._hess_tables.items():
            val = self._eval_table(hc, hp, u)
            out[..., i, j] = val
            out[..., j, i] = val
        return out

    # -- serialization ------------------------------------------------------

    def to_dict(self):
        if self.name is not None:
            return {"builtin": self.name, "params": self.params}
        return {
            "n": self.n,
            "terms": [
                {"coeff": float(c), "powers": list(map(int, p))}
                for c, p in zip(self.coeffs, self.powers)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        if "builtin" in d:
            return builtin_potential(d["builtin"], **d.get("params", {}))
        terms = [(t["coeff"], t["powers"]) for t in d["terms"]]
        return cls(d["n"], terms)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    def __repr__(self):
        tag = self.name or f"{len(self.coeffs)}-term polynomial"
        return f"Potential(n={self.n}, {tag})"


def builtin_potential(name, **params):
    """Expand a builtin name to its coefficient table.

    allen_cahn           V(u) = (u^2-1)^2/4
    nagumo(a)            V'(u) = u(u-1)(u-a)
    triple_well(h1, h2)  minima exactly at -1, 0, +1 with V = -h2, -h1, 0
    quadratic_well       V(u) = u^2/2
    """
    if name == "allen_cahn":
        terms = [(0.25, (4,)), (-0.5, (2,)), (0.25, (0,))]
        return Potential(1, terms, name=name)
    if name == "nagumo":
        a = float(params["a"])
        terms = [(0.25, (4,)), (-(1.0 + a) / 3.0, (3,)), (a / 2.0, (2,))]
        return Potential(1, terms, name=name, params={"a": a})
    if name == "triple_well":
        h1 = float(params["h1"])
        h2 = float(params["h2"])
        if not (0.0 < h1 < h2):
            raise ValueError("triple_well requires 0 < h1 < h2")
        # base u^2(u^2-1)^2 plus a tilt whose derivative vanishes at -1, 0, 1,
        # so the minima stay put while their values become -h2, -h1, 0.
        a = 2.0 * h2 - 4.0 * h1
        b = -15.0 * h2 / 4.0
        terms = [
            (1.0, (6,)),
            (b / 5.0, (5,)),
            (a / 4.0 - 2.0, (4,)),
            (-b / 3.0, (3,)),
            (1.0 - a / 2.0, (2,)),
            (-h1, (0,)),
        ]
        return Potential(1, terms, name=name, params={"h1": h1, "h2": h2})
    if name == "quadratic_well":
        return Potential(1, [(0.5, (2,))], name=name)
    raise ValueError(f"unknown builtin potential {name!r}")


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------

@dataclass
class CriticalPoint:
    """A nondegenerate critical point of V."""

    location: np.ndarray       # shape (n,)
    eigenvalues: np.ndarray    # Hessian spectrum, ascending
    kind: str                  # minimum | saddle | maximum
    value: float

    @property
    def is_minimum(self):
        return self.kind == "minimum"


class CriticalPointList(list):
    """List of CriticalPoint with a per-seed no-convergence tally."""

    no_convergence_count = 0


def _classify(eigs, n):
    # Transition-state convention: a 1-d barrier top counts as a saddle.
    if np.all(eigs > 0):
        return "minimum"
    if np.all(eigs < 0) and n >= 2:
        return "maximum"
    return "saddle"


def find_critical_points(potential, box, seeds_per_axis=12, grad_tol=1e-14,
                         max_iter=80):
    """Newton iteration for grad V = 0 from a seed lattice over `box`.

    box: (lo, hi) arrays of length n. Converged points are deduplicated at
    distance 1e-6, classified by Hessian eigensign and sorted by V value.
    Raises DegenerateCriticalPoint when a converged point has an eigenvalue
    with |lambda| < 1e-8. Seeds that fail to converge are counted, not fatal.
    """
    if seeds_per_axis < 8:
        raise ValueError("seeds_per_axis must be >= 8")
    n = potential.n
    lo = np.broadcast_to(np.asarray(box[0], dtype=float), (n,))
    hi = np.broadcast_to(np.asarray(box[1], dtype=float), (n,))
    axes = [np.linspace(lo[i], hi[i], seeds_per_axis) for i in range(n)]
    seeds = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)

    found = []
    failures = 0
    span = float(np.max(hi - lo))
    for seed in seeds:
        u = seed.copy()
        ok = False
        for _ in range(max_iter):
            g = potential.grad(u)
            gn = np.linalg.norm(g)
            if gn <= grad_tol * (1.0 + np.linalg.norm(u)):
                ok = True
                break
            H = potential.hess(u)
            try:
                step = np.linalg.solve(H, -g)
            except np.linalg.LinAlgError:
                break
            # keep Newton from tunnelling across the box in one jump
            m = np.max(np.abs(step))
            if m > span:
                step *= span / m
            # backtrack on |grad| so seeds converge to their own basin's root
            lam = 1.0
            for _ in range(25):
                trial = u + lam * step
                if np.linalg.norm(potential.grad(trial)) <= 0.9 * gn:
                    break
                lam *= 0.5
            u = u + lam * step
            if not np.all(np.isfinite(u)) or np.linalg.norm(u) > 100 * (1 + span):
                break
        if not ok:
            failures += 1
            continue
        if np.any(u < lo - 1e-6) or np.any(u > hi + 1e-6):
            continue
        if any(np.linalg.norm(u - p) < 1e-6 for p in found):
            continue
        found.append(u)

    points = CriticalPointList()
    for u in found:
        eigs = np.sort(np.linalg.eigvalsh(potential.hess(u)))
        if np.min(np.abs(eigs)) < 1e-8:
            raise DegenerateCriticalPoint(
                f"critical point {u} has eigenvalue {eigs[np.argmin(np.abs(eigs))]:.3e}"
            )
        points.append(CriticalPoint(
            location=u,
            eigenvalues=eigs,
            kind=_classify(eigs, n),
            value=float(potential.value(u)),
        ))
    points.sort(key=lambda p: p.value)
    points.no_convergence_count = failures
    return points


# ---------------------------------------------------------------------------
# ball sampling helpers
# ---------------------------------------------------------------------------

def _unit_directions(n, base=64):
    """Deterministic unit directions covering the sphere S^{n-1}."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, base, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    if n == 3:
        k = base * base
        i = np.arange(k) + 0.5
        phi = np.arccos(1 - 2 * i / k)
        golden = np.pi * (1 + 5 ** 0.5)
        th = golden * i
        return np.stack(
            [np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)],
            axis=1,
        )
    # n > 3: low-discrepancy-ish normalized lattice; desk scale is n <= 3
    rng = np.random.default_rng(2357)
    d = rng.standard_normal((base ** 2, n))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _ball_points(center, radius, n, shells, base=64):
    dirs = _unit_directions(n, base)
    radii = np.linspace(0.0, radius, shells + 1)[1:]
    pts = center[None, None, :] + radii[:, None, None] * dirs[None, :, :]
    return pts.reshape(-1, n)


# ---------------------------------------------------------------------------
# escape distance
# ---------------------------------------------------------------------------

def compute_escape_distance(potential, minima, lam_min, lam_max,
                            safety=0.5, d_max=10.0, shells=64, dir_base=64):
    """Largest d such that every Hessian eigenvalue on every ball B(m, d)
    stays within [lam_min/2, 2 lam_max], scaled by `safety`.

    Found by bisection on d (the admissible set is an interval since balls
    nest); the ball sampling density is doubled until the certified value
    moves by less than 1e-4.
    """
    if not minima:
        raise ValueError("minima set is empty")
    if not (0.0 < safety <= 1.0):
        raise ValueError("safety must be in (0, 1]")
    lo_bd, hi_bd = lam_min / 2.0, 2.0 * lam_max
    centers = [np.atleast_1d(np.asarray(m.location if hasattr(m, "location") else m,
                                        dtype=float)) for m in minima]
    n = potential.n

    def admissible(d, k_shells, k_base):
        for c in centers:
            pts = _ball_points(c, d, n, k_shells, k_base)
            eigs = np.linalg.eigvalsh(potential.hess(pts))
            if eigs.min() < lo_bd - 1e-12 or eigs.max() > hi_bd + 1e-12:
                return False
        return True

    def certify(k_shells, k_base):
        if admissible(d_max, k_shells, k_base):
            return d_max
        lo, hi = 0.0, d_max
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            if admissible(mid, k_shells, k_base):
                lo = mid
            else:
                hi = mid
        return lo

    k_shells, k_base = shells, dir_base
    d = certify(k_shells, k_base)
    for _ in range(4):
        k_shells *= 2
        d_next = certify(k_shells, k_base)
        if abs(d_next - d) < 1e-4:
            d = d_next
            break
        d = d_next
    result = safety * d
    if result < 1e-6:
        raise EscapeDistanceCollapse(f"escape distance collapsed to {result:.3e}")
    return result


# ---------------------------------------------------------------------------
# scalar constants
# ---------------------------------------------------------------------------

@dataclass
class PotentialAnalysis:
    """Everything about V that the rest of the pipeline consumes."""

    potential: Potential
    minima: list            # CriticalPoint, sorted by V
    critical_points: list   # all of them
    lam_min: float
    lam_max: float
    d_esc: float
    delta_v: float          # max difference of V over pairs of minima
    q_hull: float
    r_att_inf: float
    eps_coerc: float
    r_coerc: float
    r_probe: float
    hit_cap: bool = False   # escape-distance bisection reached d_max
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "potential": self.potential.to_dict(),
            "minima": [
                {
                    "location": [float(x) for x in m.location],
                    "eigenvalues": [float(e) for e in m.eigenvalues],
                    "value": m.value,
                }
                for m in self.minima
            ],
            "critical_points": [
                {
                    "location": [float(x) for x in p.location],
                    "eigenvalues": [float(e) for e in p.eigenvalues],
                    "kind": p.kind,
                    "value": p.value,
                }
                for p in self.critical_points
            ],
            "lam_min": self.lam_min,
            "lam_max": self.lam_max,
            "d_esc": self.d_esc,
            "delta_v": self.delta_v,
            "q_hull": self.q_hull,
            "r_att_inf": self.r_att_inf,
            "eps_coerc": self.eps_coerc,
            "r_coerc": self.r_coerc,
            "r_probe": self.r_probe,
        }

    def with_d_esc(self, d_esc):
        return replace(self, d_esc=float(d_esc))


def compute_scalars(potential, minima, r_probe, radial_samples=128,
                    dir_base=64, hull_samples=4097):
    """(lam_min, lam_max, delta_v, q_hull, eps_coerc, r_coerc, r_att_inf).

    Coercivity margin: scan radial shells for min over directions of
    u.grad V(u)/|u|^2; r_coerc is the smallest sampled radius from which the
    margin stays positive out to r_probe. r_att_inf = 2 r_coerc.
    """
    if not minima:
        raise ValueError("minima set is empty")
    n = potential.n
    eig_sets = [m.eigenvalues for m in minima]
    lam_min = float(min(e.min() for e in eig_sets))
    lam_max = float(max(e.max() for e in eig_sets))
    values = [m.value for m in minima]
    delta_v = float(max(values) - min(values))

    dirs = _unit_directions(n, dir_base)
    radii = np.linspace(r_probe / radial_samples, r_probe, radial_samples)
    pts = radii[:, None, None] * dirs[None, :, :]
    flat = pts.reshape(-1, n)
    margin = np.einsum("ij,ij->i", flat, potential.grad(flat))
    margin /= np.einsum("ij,ij->i", flat, flat)
    margin = margin.reshape(radial_samples, -1).min(axis=1)

    if margin[-1] <= 0.0:
        raise CoercivityFailure(
            f"no positive coercivity margin at the probe radius {r_probe}")

    # Onset radius for a *meaningful* margin: prefer lam_min/4, fall back to
    # any positive level if the potential is more weakly coercive than that.
    def onset(threshold):
        idx = len(margin)
        for i in range(len(margin) - 1, -1, -1):
            if margin[i] >= threshold:
                idx = i
            else:
                break
        return idx

    idx = onset(lam_min / 4.0)
    if idx >= len(margin):
        idx = onset(np.nextafter(0.0, 1.0))
    if idx >= len(margin):
        raise CoercivityFailure("no shell with positive margin")
    r_coerc = float(radii[idx])
    eps_coerc = float(margin[idx:].min())
    r_att_inf = 2.0 * r_coerc

    # quadratic hull constant over the attracting ball (displayed max formula)
    if n == 1:
        us = np.linspace(-r_att_inf, r_att_inf, hull_samples)[:, None]
    else:
        us = _ball_points(np.zeros(n), r_att_inf, n, radial_samples, dir_base)
    vals = potential.value(us)
    q_hull = lam_max / 2.0  # limit of the ratio at u -> m along the top eigenvector
    for m in minima:
        d2 = np.sum((us - m.location[None, :]) ** 2, axis=1)
        mask = d2 > 1e-18
        q_hull = max(q_hull, float(np.max((vals[mask] - m.value) / d2[mask])))

    return lam_min, lam_max, delta_v, q_hull, eps_coerc, r_coerc, r_att_inf


def analyze_potential(potential, box=None, seeds_per_axis=12, safety=0.5,
                      r_probe=None, d_max=10.0):
    """Full analysis pipeline: critical points -> escape distance -> scalars."""
    n = potential.n
    if box is None:
        box = (-3.0 * np.ones(n), 3.0 * np.ones(n))
    points = find_critical_points(potential, box, seeds_per_axis)
    minima = [p for p in points if p.is_minimum]
    if not minima:
        raise ValueError("potential has no minima inside the search box")
    if r_probe is None:
        extent = max(float(np.max(np.abs(p.location))) for p in points)
        r_probe = 4.0 * max(1.0, extent)
    lam_min, lam_max, delta_v, q_hull, eps_coerc, r_coerc, r_att_inf = \
        compute_scalars(potential, minima, r_probe)
    d_before_safety = compute_escape_distance(
        potential, minima, lam_min, lam_max, safety=1.0, d_max=d_max)
    d_esc = safety * d_before_safety
    if d_esc < 1e-6:
        raise EscapeDistanceCollapse(f"escape distance collapsed to {d_esc:.3e}")
    return PotentialAnalysis(
        potential=potential,
        minima=minima,
        critical_points=points,
        lam_min=lam_min,
        lam_max=lam_max,
        d_esc=d_esc,
        delta_v=delta_v,
        q_hull=q_hull,
        r_att_inf=r_att_inf,
        eps_coerc=eps_coerc,
        r_coerc=r_coerc,
        r_probe=float(r_probe),
        hit_cap=bool(d_before_safety >= d_max),
        meta={"safety": safety},
    )
