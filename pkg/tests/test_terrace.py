import math

import numpy as np
import pytest

from frontlab.errors import (
    CenterContaminated,
    NoLibraryFront,
    UnknownPlateau,
)
from frontlab.frontsolver import find_bistable_speed_scalar, solve_profile_system
from frontlab.pdesim import InitialCondition, Snapshot, init_state, run
from frontlab.terrace import (
    Terrace,
    center_report,
    eval_terrace,
    fit_terrace,
    hamiltonian_profile,
)


@pytest.fixture(scope="module")
def tw_fronts(triple_well, tw_analysis):
    c1, p1 = find_bistable_speed_scalar(triple_well, 0.0, 1.0, (0.0, 3.0),
                                        d_esc=tw_analysis.d_esc, alpha=1.0)
    c2, p2 = find_bistable_speed_scalar(triple_well, -1.0, 0.0, (0.0, 3.0),
                                        d_esc=tw_analysis.d_esc, alpha=1.0)
    return (c1, p1), (c2, p2)


@pytest.fixture(scope="module")
def tw_terrace(tw_fronts):
    (c1, p1), (c2, p2) = tw_fronts
    return Terrace(direction="right",
                   minima=[np.array([1.0]), np.array([0.0]), np.array([-1.0])],
                   c=[c1, c2], alpha=1.0, profiles=[p1, p2], x0=[30.0, 5.0])


class TestEvalTerrace:
    def test_q0_constant(self):
        t0 = Terrace(direction="right", minima=[np.array([1.0])], c=[],
                     alpha=1.0, profiles=[], x0=[])
        vals = eval_terrace(t0, np.linspace(-7, 7, 29), 5.0)
        assert np.all(vals == 1.0)

    def test_q1_anchor_at_d_esc(self, nagumo_front, nagumo_analysis):
        c1, prof = nagumo_front
        t1 = Terrace(direction="right",
                     minima=[np.array([0.0]), np.array([1.0])],
                     c=[c1], alpha=1.0, profiles=[prof], x0=[0.0])
        assert t1.s[0] == pytest.approx(1 / 3, abs=1e-9)
        for t in (0.0, 30.0):
            val = eval_terrace(t1, np.array([t1.s[0] * t]), t)
            assert abs(val[0, 0]) == pytest.approx(nagumo_analysis.d_esc,
                                                   abs=1e-9)

    def test_q1_reduces_to_single_front_formula(self, nagumo_front):
        # same code path as item 2 of the terrace definition
        c1, prof = nagumo_front
        t1 = Terrace(direction="right",
                     minima=[np.array([0.0]), np.array([1.0])],
                     c=[c1], alpha=1.0, profiles=[prof], x0=[2.0])
        from scipy.interpolate import CubicSpline
        sp = CubicSpline(prof.xi, prof.phi[:, 0])
        gamma = math.sqrt(1 + c1 * c1)
        t = 11.0
        x = np.linspace(0.0, 10.0, 101)
        xi = gamma * (x - (2.0 + t1.s[0] * t))
        direct = np.where(xi < prof.xi[0], 1.0,
                          np.where(xi > prof.xi[-1], 0.0,
                                   sp(np.clip(xi, prof.xi[0], prof.xi[-1]))))
        assert np.allclose(eval_terrace(t1, x, t)[:, 0], direct, atol=1e-12)

    def test_q2_far_apart_reduces_to_leader(self, tw_terrace, tw_fronts):
        # near front 1 the trailing front contributes only its tail
        (c1, p1), (c2, p2) = tw_fronts
        t = 0.0
        x = np.linspace(28.0, 32.0, 41)
        vals = eval_terrace(tw_terrace, x, t)
        from scipy.interpolate import CubicSpline
        sp = CubicSpline(p1.xi, p1.phi[:, 0])
        gamma = math.sqrt(1 + c1 * c1)
        direct = sp(np.clip(gamma * (x - 30.0), p1.xi[0], p1.xi[-1]))
        gap = 25.0  # distance to front 2
        rate = 0.5 * (-c2 + math.sqrt(c2 * c2 + 4 * 2.12))
        assert np.max(np.abs(vals[:, 0] - direct)) <= math.exp(-rate * gap) + 1e-9

    def test_validate_ordering(self, triple_well, tw_terrace, tw_fronts):
        tw_terrace.validate(triple_well)
        (c1, p1), (c2, p2) = tw_fronts
        bad = Terrace(direction="right",
                      minima=[np.array([1.0]), np.array([0.0]),
                              np.array([-1.0])],
                      c=[c2, c1], alpha=1.0, profiles=[p2, p1], x0=[0.0, 1.0])
        with pytest.raises(ValueError):
            bad.validate(triple_well)


class TestFitTerrace:
    def test_roundtrip_q2(self, tw_terrace, tw_analysis, tw_fronts, rng):
        (c1, p1), (c2, p2) = tw_fronts
        dx = 0.05
        x = np.arange(-80.0, 130.0 + dx / 2, dx)
        snaps = []
        for t in np.linspace(30, 90, 30):
            u = eval_terrace(tw_terrace, x, t) \
                + 1e-3 * (2 * rng.random((len(x), 1)) - 1)
            snaps.append(Snapshot(t=t, x0=x[0], dx=dx, u=u,
                                  ut=np.zeros_like(u), alpha=1.0))
        fit = fit_terrace(snaps, tw_analysis, [p1, p2], "right", eps=None,
                          alpha=1.0)
        assert fit.passed
        assert fit.terrace.q == 2
        assert fit.global_residual <= 2e-3
        chain = [float(np.atleast_1d(m)[0]) for m in fit.terrace.minima]
        assert chain == pytest.approx([1.0, 0.0, -1.0], abs=1e-6)
        for meas, true in zip(fit.measured_speeds, tw_terrace.s):
            assert abs(meas - true) <= 1e-3
        gaps = [g[0] for _, g in fit.separation_series]
        assert all(b > a for a, b in zip(gaps, gaps[1:]))

    def test_roundtrip_left(self, tw_terrace, tw_analysis, tw_fronts, rng):
        (c1, p1), (c2, p2) = tw_fronts
        dx = 0.05
        x = np.arange(-130.0, 80.0 + dx / 2, dx)
        snaps = []
        for t in np.linspace(60, 90, 15):
            u = eval_terrace(tw_terrace, -x, t) \
                + 1e-3 * (2 * rng.random((len(x), 1)) - 1)
            snaps.append(Snapshot(t=t, x0=x[0], dx=dx, u=u,
                                  ut=np.zeros_like(u), alpha=1.0))
        fit = fit_terrace(snaps, tw_analysis, [p1, p2], "left", eps=None,
                          alpha=1.0)
        assert fit.passed and fit.terrace.q == 2
        assert fit.terrace.x0 == pytest.approx([-30.0, -5.0], abs=0.02)

    def test_stationary_wall_is_center_object(self, allen_cahn, ac_analysis):
        # at late times the side region sees only the invaded plateau: q = 0
        prof = solve_profile_system(allen_cahn, [-1.0], [1.0], c=0.0,
                                    num_nodes=2001)
        dx = 0.05
        x = np.arange(-100.0, 100.0 + dx / 2, dx)
        u = np.tanh(x / math.sqrt(2))[:, None]
        snaps = [Snapshot(t=t, x0=x[0], dx=dx, u=u.copy(),
                          ut=np.zeros_like(u), alpha=1.0)
                 for t in np.linspace(150, 200, 10)]
        fit = fit_terrace(snaps, ac_analysis, [prof], "right", eps=0.05,
                          alpha=1.0)
        assert fit.terrace is not None and fit.terrace.q == 0
        assert fit.passed

    def test_unknown_plateau(self, ac_analysis):
        dx = 0.05
        x = np.arange(-60.0, 60.0 + dx / 2, dx)
        u = np.full((len(x), 1), 0.4)       # not a minimum of Allen-Cahn
        u[x < -30] = -1.0
        u[x > 30] = 1.0
        snaps = [Snapshot(t=t, x0=x[0], dx=dx, u=u.copy(),
                          ut=np.zeros_like(u), alpha=1.0)
                 for t in np.linspace(10, 20, 5)]
        with pytest.raises(UnknownPlateau):
            fit_terrace(snaps, ac_analysis, [], "right", eps=0.0, alpha=1.0)

    def test_missing_library_front(self, nagumo, nagumo_analysis, nagumo_front):
        ic = InitialCondition(plateaus=[[1.0], [0.0]], interfaces=[0.0],
                              width=1.0)
        st = init_state(-60, 60, 0.05, ic, 1.0)
        times = list(np.arange(40.0, 60.0 + 0.1, 2.0))
        rec = run(st, nagumo, 0.01, 60.0, snapshot_times=times)
        with pytest.raises(NoLibraryFront):
            fit_terrace(rec.snapshots, nagumo_analysis, [], "right",
                        eps=None, alpha=1.0)


class TestCenterReport:
    def test_equilibrium_zero_series(self, nagumo):
        x = np.arange(-40.0, 40.0, 0.05)
        u = np.ones((len(x), 1))
        h = float(nagumo.value(np.array([1.0])))
        snaps = [Snapshot(t=t, x0=x[0], dx=0.05, u=u.copy(),
                          ut=np.zeros_like(u), alpha=1.0)
                 for t in np.linspace(1, 50, 10)]
        rep = center_report(snaps, 0.1, h, nagumo)
        assert np.max(np.abs(rep.sup_window_dissipation)) == 0.0
        assert np.max(np.abs(rep.residual_energy)) <= 1e-12

    def test_contamination_guard(self, nagumo):
        x = np.arange(-40.0, 40.0, 0.05)
        u = np.ones((len(x), 1))
        snaps = [Snapshot(t=t, x0=x[0], dx=0.05, u=u.copy(),
                          ut=np.zeros_like(u), alpha=1.0)
                 for t in np.linspace(10, 50, 10)]
        with pytest.raises(CenterContaminated):
            center_report(snaps, 0.1, 0.0, nagumo,
                          front_tracks=[lambda t: 0.02 * t])

    def test_behind_values_gap(self, allen_cahn):
        x = np.arange(-10.0, 10.0, 0.05)
        u = np.ones((len(x), 1))
        snaps = [Snapshot(t=1.0, x0=x[0], dx=0.05, u=u,
                          ut=np.zeros_like(u), alpha=1.0)]
        rep = center_report(snaps, 0.1, 0.0, allen_cahn,
                            m_left_behind=[-1.0], m_right_behind=[1.0])
        assert rep.v_behind_gap <= 1e-8   # equal well depths


class TestHamiltonian:
    def test_stationary_profile_constant(self, allen_cahn):
        # H = u_x^2/2 - V(u) is the first integral of the c = 0 profile ODE
        prof = solve_profile_system(allen_cahn, [-1.0], [1.0], c=0.0,
                                    num_nodes=2001)
        snap = Snapshot(t=0.0, x0=float(prof.xi[0]), dx=prof.dxi,
                        u=prof.phi.copy(), ut=np.zeros_like(prof.phi),
                        alpha=0.0)
        hp = hamiltonian_profile(snap, allen_cahn)
        # u_x inside the diagnostic is 2nd order; H is constant up to h^2
        h = prof.dxi
        assert np.max(hp.H) - np.min(hp.H) <= 0.5 * h * h

    def test_equilibrium_zero(self, allen_cahn):
        u = np.ones((401, 1))
        snap = Snapshot(t=0.0, x0=-10.0, dx=0.05, u=u, ut=np.zeros_like(u),
                        alpha=1.0)
        hp = hamiltonian_profile(snap, allen_cahn)
        assert np.max(np.abs(hp.H)) <= 1e-14

    def test_parabolic_identity_refines(self, allen_cahn):
        # residual of d_x H = u_x . u_t shrinks at 2nd order in dx
        def max_resid(dx):
            ic = InitialCondition(plateaus=[[-1.0], [1.0]], interfaces=[0.0],
                                  width=1.0)
            st = init_state(-30, 30, dx, ic, 0.0)
            dt = 0.4 * dx * dx
            rec = run(st, allen_cahn, dt, 1.0,
                      snapshot_times=[round(int(1.0 / dt) * dt, 12)])
            snap = rec.snapshots[0]
            hp = hamiltonian_profile(snap, allen_cahn)
            core = slice(40, -40)
            return float(np.max(np.abs(hp.residual[core])))

        r1 = max_resid(0.08)
        r2 = max_resid(0.04)
        assert math.log2(r1 / r2) >= 1.6

    def test_hyperbolic_mode_reports_diagnostic(self, nagumo, nagumo_front):
        c, prof = nagumo_front
        x = np.arange(-30.0, 30.0, 0.05)
        from scipy.interpolate import CubicSpline
        gamma = math.sqrt(1 + c * c)
        sp = CubicSpline(prof.xi, prof.phi[:, 0])
        spd = CubicSpline(prof.xi, prof.dphi[:, 0])
        z = np.clip(gamma * x, prof.xi[0], prof.xi[-1])
        u = sp(z)[:, None]
        ut = (-c * spd(z))[:, None]
        snap = Snapshot(t=0.0, x0=x[0], dx=0.05, u=u, ut=ut, alpha=1.0)
        hp = hamiltonian_profile(snap, nagumo)
        assert hp.mode == "hyperbolic"
        assert hp.residual.shape == hp.H.shape
