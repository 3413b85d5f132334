"""Rate extraction, profile comparison, Lyapunov auditing, and run orchestration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .core_math import Params, kappa_a
from .errors import DomainError, FitError, NumericError, ResolutionError
from .functionals import FunctionalConfig, FunctionalSnapshot, eval_L, snapshot
from .quadrature import QuadratureRule, integrate, rule_for_grid
from .similarity_solver import SimField, cfl_step, ds_dissipation, step_w

DEFAULT_TAU_WINDOW = (1e-7, 1e-2)


@dataclass(frozen=True)
class RateFit:
    """Least-squares exponents against M(t) ~ kappa (T-t)^(-alpha) (-log(T-t))^(-beta)."""

    alpha_hat: float
    beta_hat: float
    log_kappa_hat: float
    residual: float
    window: tuple[float, float]  # (s_lo, s_hi) actually used


@dataclass(frozen=True)
class ProfileReport:
    """Sup-norm distance to the self-similar profile over |z| <= z_max."""

    s: float
    sup_error: float
    z_max: float


def fit_rate(
    sup_history: np.ndarray,
    T_hat: float,
    window_fraction: float = 0.6,
    tau_window: tuple[float, float] = DEFAULT_TAU_WINDOW,
    min_samples: int = 50,
) -> RateFit:
    """Fit log M = -alpha log(T_hat - t) - beta log(-log(T_hat - t)) + log kappa.

    Uses the last window_fraction of the samples whose remaining time
    T_hat - t lies inside tau_window; samples at or beyond T_hat fall outside
    every window (the final step of a run can saturate float resolution in t).
    Raises FitError for short or degenerate windows.
    """
    hist = np.asarray(sup_history, dtype=float)
    t, M = hist[:, 0], hist[:, 1]
    if T_hat <= float(t.min()):
        raise DomainError("fit_rate: T_hat precedes every sample")
    tau = T_hat - t
    keep = (tau >= tau_window[0]) & (tau <= tau_window[1]) & (M > 0.0)
    idx = np.flatnonzero(keep)
    if idx.size:
        idx = idx[int(idx.size * (1.0 - window_fraction)) :]
    if idx.size < min_samples:
        raise FitError(
            f"fit_rate: only {idx.size} samples in the window, need >= {min_samples}"
        )
    tau = tau[idx]
    s = -np.log(tau)
    X = np.column_stack([-np.log(tau), -np.log(s), np.ones_like(tau)])
    y = np.log(M[idx])
    if np.linalg.cond(X) > 1e10:
        raise FitError("fit_rate: collinear design (window too narrow in log(T-t))")
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return RateFit(
        alpha_hat=float(coef[0]),
        beta_hat=float(coef[1]),
        log_kappa_hat=float(coef[2]),
        residual=resid,
        window=(float(s.min()), float(s.max())),
    )


def rate_fit_sensitivity(
    sup_history: np.ndarray, T_hat: float, dt_last: float, **kwargs
) -> dict:
    """Refit with T_hat perturbed by +/- the last step; returns the exponent
    spread as an uncertainty band."""
    fits = {"base": fit_rate(sup_history, T_hat, **kwargs)}
    for tag, T in (("minus", T_hat - dt_last), ("plus", T_hat + dt_last)):
        try:
            fits[tag] = fit_rate(sup_history, T, **kwargs)
        except (FitError, DomainError):
            continue
    alphas = [f.alpha_hat for f in fits.values()]
    betas = [f.beta_hat for f in fits.values()]
    return {
        "alpha_band": (min(alphas), max(alphas)),
        "beta_band": (min(betas), max(betas)),
        "fits": fits,
    }


def profile_error(field: SimField, z_max: float) -> ProfileReport:
    """Sup over |z| <= z_max of |w(z sqrt(s)) / kappa_a - (1 + (p-1) z^2 / (4p))^(-1/(p-1))|."""
    s = field.s
    if s < 4.0:
        raise DomainError(f"profile_error requires s >= 4, got {s}")
    if z_max * np.sqrt(s) > field.radius + 1e-12:
        raise DomainError(
            f"profile_error: z_max={z_max} needs z_max <= R_max/sqrt(s) = "
            f"{field.radius / np.sqrt(s):.4g}"
        )
    span = z_max * np.sqrt(s)
    n_inside = int(np.sum(np.abs(field.nodes) <= span))
    if n_inside < 16:
        raise ResolutionError(
            f"profile_error: only {n_inside} grid nodes resolve |z| <= {z_max}"
        )
    p = field.params.p
    if field.geometry == "line":
        z = np.linspace(-z_max, z_max, 513)
    else:
        z = np.linspace(0.0, z_max, 257)
    spline = CubicSpline(field.nodes, field.values)
    w = spline(z * np.sqrt(s))
    target = (1.0 + (p - 1.0) * z * z / (4.0 * p)) ** (-1.0 / (p - 1.0))
    err = float(np.max(np.abs(w / kappa_a(field.params) - target)))
    return ProfileReport(s=float(s), sup_error=err, z_max=float(z_max))


@dataclass
class LyapunovViolation:
    s: float
    magnitude: float
    kind: str  # "interval", "unit", or "step"


@dataclass
class LyapunovReport:
    """Outcome of auditing the decrement inequality along one run."""

    violations: list[LyapunovViolation]
    intervals_checked: int
    max_step_increase: float
    passed: bool


def lyapunov_audit(
    snapshots: list[FunctionalSnapshot],
    dissipation: np.ndarray,
    step_L: np.ndarray | None = None,
    tol_scale: float = 1e-3,
    step_tol: float = 1e-6,
) -> LyapunovReport:
    """Check L(s+1) - L(s) <= -1/2 int int (ds w)^2 rho + tol per unit interval.

    snapshots must be at consecutive unit-s boundaries; dissipation[k] is the
    discrete double integral over [s_k, s_k + 1].  tol = tol_scale (1 + |L(s_k)|).
    When the per-step L series is supplied, per-step monotonicity within
    step_tol is checked as well.  Violations are report content, not errors.
    """
    if len(snapshots) < 4:
        raise DomainError("lyapunov_audit: ledger must span >= 3 units of s")
    if len(dissipation) != len(snapshots) - 1:
        raise DomainError("lyapunov_audit: need one dissipation entry per interval")
    violations: list[LyapunovViolation] = []
    for k in range(len(snapshots) - 1):
        lhs = snapshots[k + 1].L - snapshots[k].L
        rhs = -0.5 * dissipation[k]
        tol = tol_scale * (1.0 + abs(snapshots[k].L))
        if lhs > rhs + tol:
            violations.append(
                LyapunovViolation(
                    s=snapshots[k].s, magnitude=float(lhs - rhs - tol), kind="interval"
                )
            )
        if lhs > step_tol:  # non-increasing per unit of s as well
            violations.append(
                LyapunovViolation(
                    s=snapshots[k].s, magnitude=float(lhs - step_tol), kind="unit"
                )
            )
    max_step_increase = 0.0
    if step_L is not None and len(step_L) > 1:
        diffs = np.diff(np.asarray(step_L))
        max_step_increase = float(max(0.0, diffs.max()))
        if max_step_increase > step_tol:
            where = int(np.argmax(diffs))
            violations.append(
                LyapunovViolation(
                    s=float(where), magnitude=max_step_increase - step_tol, kind="step"
                )
            )
    return LyapunovReport(
        violations=violations,
        intervals_checked=len(snapshots) - 1,
        max_step_increase=max_step_increase,
        passed=not violations,
    )


def tune_blowup_amplitude(
    shape: np.ndarray,
    nodes: np.ndarray,
    s0: float,
    s_end: float,
    params: Params,
    ds: float = 0.01,
    geometry: str = "line",
    iterations: int = 42,
) -> float:
    """Bisect the amplitude multiplier that keeps lam * shape on the blow-up
    separatrix of the similarity flow up to s_end.

    The constant-amplitude equilibrium has unstable directions (shifting the
    blow-up time or point of the underlying physical solution), so an
    untuned datum either quenches to zero or blows up in finite s.  Probes
    classify each amplitude by whether max|w| crosses 2.5 kappa_a (blow-up)
    or falls below 0.4 kappa_a (quench); the bisected multiplier tracks the
    attractor over the whole window.
    """
    kap = kappa_a(params)
    ds_eff = cfl_step(nodes, ds)
    # Probe well past s_end: an off-separatrix datum may stay within the
    # thresholds over the window of interest yet already be drifting away.
    n_steps = int(round((s_end - s0 + 14.0) / ds_eff))

    def classify(lam: float) -> int:
        w = SimField(
            geometry=geometry, nodes=nodes, values=lam * shape, s=s0, params=params
        )
        for _ in range(n_steps):
            try:
                w = step_w(w, ds_eff)
            except (NumericError, FloatingPointError):
                return +1
            peak = float(np.max(np.abs(w.values)))
            if peak > 2.5 * kap:
                return +1
            if peak < 0.4 * kap:
                return -1
        return 0

    lo, hi = 0.5, 1.6
    c_lo, c_hi = classify(lo), classify(hi)
    if not (c_lo < 0 < c_hi):
        raise NumericError(
            "tune_blowup_amplitude: bracket [0.5, 1.6] does not straddle the "
            f"separatrix (classified {c_lo}, {c_hi})"
        )
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        c = classify(mid)
        if c == 0:
            return mid  # unresolved after the extended horizon: on separatrix
        if c > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@dataclass
class SimilarityRun:
    """Unit-s ledger of one similarity-frame evolution."""

    fields: list[SimField]  # at unit-s boundaries, fields[0] is the initial datum
    snapshots: list[FunctionalSnapshot]
    dissipation: np.ndarray  # per unit interval
    step_s: np.ndarray
    step_L: np.ndarray  # empty unless record_L
    step_mass: np.ndarray
    rule: QuadratureRule
    cfg: FunctionalConfig
    params: Params
    ds: float = field(default=0.0)


def run_similarity(
    w0: SimField,
    s_end: float,
    ds: float,
    cfg: FunctionalConfig,
    record_L: bool = True,
) -> SimilarityRun:
    """Evolve w from w0.s to s_end, collecting the functional ledger.

    The step is CFL-capped and chosen to divide each unit of s exactly, so
    snapshots and dissipation integrals land on unit boundaries.
    """
    n_units = int(round(s_end - w0.s))
    if n_units < 1 or abs(s_end - w0.s - n_units) > 1e-9:
        raise DomainError("run_similarity: s_end - w0.s must be a positive integer")
    ds_eff = cfl_step(w0.nodes, ds)
    rule = rule_for_grid(w0.nodes, w0.params.N, w0.geometry)
    per_unit = int(round(1.0 / ds_eff))

    fields = [w0]
    snaps = [snapshot(w0, rule, cfg)]
    diss = np.zeros(n_units)
    step_s: list[float] = [w0.s]
    step_L: list[float] = [eval_L(w0, rule, cfg)] if record_L else []
    step_mass: list[float] = [integrate(rule, w0.values**2)]

    current = w0
    for k in range(n_units):
        acc = 0.0
        for _ in range(per_unit):
            nxt = step_w(current, ds_eff)
            acc += ds_eff * ds_dissipation(current, nxt, rule)
            current = nxt
            step_s.append(current.s)
            step_mass.append(integrate(rule, current.values**2))
            if record_L:
                step_L.append(eval_L(current, rule, cfg))
        diss[k] = acc
        fields.append(current)
        snaps.append(snapshot(current, rule, cfg))
    return SimilarityRun(
        fields=fields,
        snapshots=snaps,
        dissipation=diss,
        step_s=np.asarray(step_s),
        step_L=np.asarray(step_L),
        step_mass=np.asarray(step_mass),
        rule=rule,
        cfg=cfg,
        params=w0.params,
        ds=ds_eff,
    )
