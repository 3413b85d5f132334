"""Rate fitting, profile comparison, Lyapunov auditing."""

import numpy as np
import pytest

from blowuplab.analysis import (
    fit_rate,
    lyapunov_audit,
    profile_error,
    rate_fit_sensitivity,
    run_similarity,
)
from blowuplab.core_math import Params, kappa_a
from blowuplab.errors import DomainError, FitError, ResolutionError
from blowuplab.functionals import FunctionalConfig, FunctionalSnapshot
from blowuplab.initial_data import line_grid, profile_shape, sim_field

P31 = Params(3.0, 1.0)


def synthetic_history(T, p, a, n=400, s_lo=3.0, s_hi=17.0, kappa=1.0):
    # M(t) = kappa psi_T(t), sampled uniformly in s = -log(T - t)
    s = np.linspace(s_lo, s_hi, n)
    t = T - np.exp(-s)
    M = kappa * np.exp(s / (p - 1.0)) * s ** (-a / (p - 1.0))
    return np.column_stack([t, M])


class TestFitRate:
    def test_exact_model_recovery(self):
        for p, a in ((3.0, 1.0), (2.0, 2.0), (3.0, -1.0)):
            hist = synthetic_history(0.5, p, a)
            fit = fit_rate(hist, 0.5)
            assert fit.alpha_hat == pytest.approx(1.0 / (p - 1.0), abs=1e-9)
            assert fit.beta_hat == pytest.approx(a / (p - 1.0), abs=1e-9)
            assert fit.residual <= 1e-10

    def test_noise_monte_carlo(self):
        # 1% multiplicative noise: alpha within 1% across 20 seeds.  The
        # bound needs a dense history (the regressors s and log s are nearly
        # collinear over the window, so sparse noisy samples inflate the
        # spread: 2.7% at n=400, 0.55% at n=4000).
        p, a = 3.0, 1.0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            hist = synthetic_history(0.5, p, a, n=4000)
            hist[:, 1] *= 1.0 + 0.01 * rng.standard_normal(hist.shape[0])
            fit = fit_rate(hist, 0.5)
            assert abs(fit.alpha_hat / 0.5 - 1.0) <= 0.01

    def test_amplitude_rescaling_invariance(self):
        hist = synthetic_history(0.5, 3.0, 1.0)
        fit1 = fit_rate(hist, 0.5)
        hist2 = hist.copy()
        lam = 7.3
        hist2[:, 1] *= lam
        fit2 = fit_rate(hist2, 0.5)
        assert fit2.alpha_hat == pytest.approx(fit1.alpha_hat, abs=1e-12)
        assert fit2.beta_hat == pytest.approx(fit1.beta_hat, abs=1e-12)
        assert fit2.log_kappa_hat - fit1.log_kappa_hat == pytest.approx(
            np.log(lam), abs=1e-10
        )

    def test_too_few_samples(self):
        hist = synthetic_history(0.5, 3.0, 1.0, n=30)
        with pytest.raises(FitError):
            fit_rate(hist, 0.5)

    def test_degenerate_window(self):
        # T_hat before every sample
        hist = synthetic_history(0.5, 3.0, 1.0)
        with pytest.raises(DomainError):
            fit_rate(hist, float(hist[0, 0]) - 1.0)

    def test_window_recorded(self):
        fit = fit_rate(synthetic_history(0.5, 3.0, 1.0), 0.5)
        s_lo, s_hi = fit.window
        assert -np.log(1e-2) <= s_lo < s_hi <= -np.log(1e-7)

    def test_sensitivity_band(self):
        # the exponents are sharp in T_hat: a 1e-9 shift moves tau by 1% at
        # the tau = 1e-7 end of the window, so the band is visibly wide
        hist = synthetic_history(0.5, 3.0, 1.0)
        band = rate_fit_sensitivity(hist, 0.5, 1e-9)
        lo, hi = band["alpha_band"]
        assert lo - 1e-6 <= 0.5 <= hi + 1e-6
        assert 1e-4 < hi - lo < 0.02
        assert set(band["fits"]) == {"base", "minus", "plus"}


class TestProfileError:
    def test_synthetic_profile_is_exact(self):
        nodes = line_grid(20.0, 801)
        s = 9.0
        w = sim_field(profile_shape(nodes, s, P31), nodes, s, P31)
        rep = profile_error(w, z_max=1.0)
        assert rep.sup_error <= 1e-6
        assert rep.s == s

    def test_constant_field_error_is_target_deviation(self):
        # field identically kappa: error 0 at z = 0, and the sup over
        # |z| <= z_max equals the analytic deviation of the target shape
        nodes = line_grid(20.0, 801)
        w = sim_field(np.full(nodes.shape, kappa_a(P31)), nodes, 9.0, P31)
        rep = profile_error(w, z_max=0.5)
        p = 3.0
        want = 1.0 - (1.0 + (p - 1.0) * 0.25 / (4.0 * p)) ** (-1.0 / (p - 1.0))
        assert rep.sup_error == pytest.approx(want, abs=1e-9)

    def test_requires_s_4(self):
        nodes = line_grid(20.0, 801)
        w = sim_field(np.zeros(nodes.shape), nodes, 2.0, P31)
        with pytest.raises(DomainError):
            profile_error(w, z_max=1.0)

    def test_z_max_versus_radius(self):
        nodes = line_grid(20.0, 801)
        w = sim_field(np.zeros(nodes.shape), nodes, 9.0, P31)
        with pytest.raises(DomainError):
            profile_error(w, z_max=10.0)

    def test_resolution_error(self):
        nodes = line_grid(20.0, 65)
        w = sim_field(np.zeros(nodes.shape), nodes, 9.0, P31)
        with pytest.raises(ResolutionError):
            profile_error(w, z_max=0.05)

    def test_refinement_invariance(self):
        # the report is a property of the underlying field, not the grid
        s = 9.0
        shape = lambda y: 0.95 * profile_shape(y, s, P31)
        reps = []
        for n in (401, 801, 1601):
            nodes = line_grid(20.0, n)
            reps.append(profile_error(sim_field(shape(nodes), nodes, s, P31), 1.0))
        assert reps[1].sup_error == pytest.approx(reps[2].sup_error, rel=1e-6)
        assert reps[0].sup_error == pytest.approx(reps[2].sup_error, rel=1e-4)


def constant_ledger(L_values, s0=2.0):
    snaps = [
        FunctionalSnapshot(
            s=s0 + k, E=0.0, J=0.0, H_m=0.0, N_m=0.0, I=0.0, L0=0.0, L=L, E_psi=0.0,
            I_psi=0.0,
        )
        for k, L in enumerate(L_values)
    ]
    return snaps


class TestLyapunovAudit:
    def test_zero_field_run_passes(self):
        snaps = constant_ledger([0.0, 0.0, 0.0, 0.0])
        rep = lyapunov_audit(snaps, np.zeros(3))
        assert rep.passed and rep.intervals_checked == 3

    def test_decreasing_ledger_passes(self):
        snaps = constant_ledger([5.0, 3.0, 2.0, 1.5])
        rep = lyapunov_audit(snaps, np.array([1.0, 0.5, 0.2]))
        assert rep.passed

    def test_time_reversed_ledger_fails(self):
        snaps = constant_ledger([1.5, 2.0, 3.0, 5.0])
        rep = lyapunov_audit(snaps, np.array([0.2, 0.5, 1.0]))
        assert not rep.passed
        assert all(v.magnitude > 0 for v in rep.violations)

    def test_step_series_check(self):
        snaps = constant_ledger([5.0, 3.0, 2.0, 1.5])
        rep = lyapunov_audit(
            snaps, np.zeros(3), step_L=np.array([5.0, 4.0, 4.0 + 1e-3, 1.5])
        )
        assert not rep.passed
        assert rep.max_step_increase == pytest.approx(1e-3)

    def test_needs_three_units(self):
        snaps = constant_ledger([1.0, 0.5])
        with pytest.raises(DomainError):
            lyapunov_audit(snaps, np.zeros(1))


class TestRunSimilarity:
    def test_stationary_kappa_run_audit(self):
        # constant kappa_0 at a = 0 is an exact steady state: per-unit L
        # differences stay below 1e-6 and dissipation below 1e-8
        params = Params(3.0, 0.0)
        nodes = line_grid(20.0, 401)
        w0 = sim_field(np.full(nodes.shape, kappa_a(params)), nodes, 2.0, params)
        run = run_similarity(w0, 5.0, 0.01, FunctionalConfig())
        rep = lyapunov_audit(run.snapshots, run.dissipation, run.step_L)
        assert rep.passed
        assert np.all(run.dissipation <= 1e-8)
        L = np.array([sn.L for sn in run.snapshots])
        assert np.all(np.diff(L) <= 1e-6)

    def test_decaying_run_ledger(self):
        nodes = line_grid(20.0, 201)
        w0 = sim_field(0.3 * np.exp(-nodes**2 / 8.0), nodes, 2.0, P31)
        run = run_similarity(w0, 5.0, 0.01, FunctionalConfig())
        assert len(run.fields) == 4
        assert len(run.snapshots) == 4
        assert run.dissipation.shape == (3,)
        assert run.step_L.shape == run.step_s.shape
        assert run.fields[-1].s == pytest.approx(5.0)
        rep = lyapunov_audit(run.snapshots, run.dissipation, run.step_L)
        assert rep.passed

    def test_requires_unit_span(self):
        nodes = line_grid(20.0, 201)
        w0 = sim_field(np.zeros(nodes.shape), nodes, 2.0, P31)
        with pytest.raises(DomainError):
            run_similarity(w0, 2.5, 0.01, FunctionalConfig())

    def test_radial_run_ledger(self):
        # N = 3 radial geometry end to end: decaying datum, audited
        params = Params(3.0, 1.0, N=3)
        r = np.linspace(0.0, 20.0, 201)
        w0 = sim_field(0.3 * np.exp(-r * r / 8.0), r, 2.0, params, geometry="radial")
        run = run_similarity(w0, 5.0, 0.01, FunctionalConfig())
        rep = lyapunov_audit(run.snapshots, run.dissipation, run.step_L)
        assert rep.passed
        assert np.all(np.isfinite([sn.E for sn in run.snapshots]))
        assert np.all(np.diff(run.step_mass) <= 1e-12)
