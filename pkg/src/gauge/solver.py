"""
Integrate the canonical (S, T) system on a periodic 1D grid and check the
hydrodynamic identities on the resulting trajectories.

The state is (periodic remainder of S, T, winding slope of S); spatial
derivatives are spectral and time stepping is classical RK4.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .config import settings
from .equation_model import ABCoefficients, NuMuCoefficients, Rates, STField, in_restricted_family, rhs
from .errors import DegenerateEquationError, InstabilityError, PreconditionError
from .expr import Expression, combine
from .gauge_group import GaugeElement, apply_to_st
from .gauge_transform import transform_ab
from .invariants import tau_beta_expressions, uhat_terms

logger = logging.getLogger(__name__)


# ============================================================================
# Trajectories
# ============================================================================


@dataclass(frozen=True)
class IntegratorStats:
    dt: float
    steps: int
    max_rate_S: float
    max_rate_T: float
    min_rho: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    fields: tuple[STField, ...]
    stats: IntegratorStats

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if len(times) != len(self.fields):
            raise PreconditionError(f"{len(times)} snapshot times for {len(self.fields)} fields")
        if np.any(np.diff(times) <= 0):
            raise PreconditionError("snapshot times must increase strictly")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "fields", tuple(self.fields))

    def __len__(self) -> int:
        return len(self.fields)

    def __iter__(self) -> Iterator[tuple[float, STField]]:
        return iter(zip(self.times, self.fields))

    @property
    def grid(self):
        return self.fields[0].grid

    @property
    def final(self) -> STField:
        return self.fields[-1]


def _check_run(ab: ABCoefficients, f0: STField, t0: float, t1: float, dt: float) -> None:
    if not dt > 0:
        raise PreconditionError(f"time step must be positive, got {dt}", path="run.dt")
    if not t1 > t0:
        raise PreconditionError(f"end time {t1} must exceed start time {t0}", path="run.t1")
    times = np.linspace(t0, t1, settings.subgroup_samples)
    scale = max(float(np.max(np.abs(s.evaluate(t=times)))) for s in (ab.a1, ab.a2, ab.b1, ab.b2))
    grid = f0.grid
    number = dt * scale * (grid.points * np.pi / grid.length) ** 2
    if number > settings.cfl_limit:
        raise PreconditionError(
            f"dt={dt:g} gives dt*max(|a1|,|a2|,|b1|,|b2|)*(N*pi/L)^2 = {number:.3f}, limit {settings.cfl_limit:g}",
            path="run.dt",
        )


def _guard(S: np.ndarray, T: np.ndarray, slope: float, t: float) -> None:
    limit = settings.instability_threshold
    finite = np.all(np.isfinite(S)) and np.all(np.isfinite(T)) and np.isfinite(slope)
    if not finite or max(float(np.max(np.abs(S))), float(np.max(np.abs(T)))) > limit:
        raise InstabilityError(f"fields became non-finite or exceeded {limit:g} near t={t:g}")


def _advance(f: STField, rates: Rates, h: float, t: float) -> STField:
    S = f.S + h * rates.dS
    T = f.T + h * rates.dT
    slope = f.slope + h * rates.dslope
    _guard(S, T, slope, t)
    return STField(f.grid, S, T, slope)


def _rk4_step(ab: ABCoefficients, f: STField, t: float, h: float) -> tuple[STField, Rates]:
    k1 = rhs(ab, f, t)
    k2 = rhs(ab, _advance(f, k1, h / 2, t), t + h / 2)
    k3 = rhs(ab, _advance(f, k2, h / 2, t), t + h / 2)
    k4 = rhs(ab, _advance(f, k3, h, t), t + h)
    combined = Rates(
        (k1.dS + 2 * k2.dS + 2 * k3.dS + k4.dS) / 6,
        (k1.dT + 2 * k2.dT + 2 * k3.dT + k4.dT) / 6,
        (k1.dslope + 2 * k2.dslope + 2 * k3.dslope + k4.dslope) / 6,
    )
    return _advance(f, combined, h, t + h), k1


def evolve(
    ab: ABCoefficients,
    f0: STField,
    t0: float,
    t1: float,
    dt: float,
    snapshots: Optional[int] = None,
) -> Trajectory:
    """
    RK4 from t0 to t1 with a step no larger than dt, recording ``snapshots``
    evenly spaced states (both ends included).
    """
    _check_run(ab, f0, t0, t1, dt)
    steps = max(1, int(np.ceil((t1 - t0) / dt - 1e-9)))
    h = (t1 - t0) / steps
    count = min(snapshots or settings.snapshots, steps + 1)
    if count < 2:
        raise PreconditionError(f"need at least two snapshots, got {count}", path="run.snapshots")
    marks = set(np.round(np.linspace(0, steps, count)).astype(int).tolist())

    grid = f0.grid
    logger.info(f"Evolving {steps} steps of dt={h:g} on N={grid.points}, L={grid.length:g}, t in [{t0:g}, {t1:g}]")
    times, fields, min_rho = [t0], [f0], [float(np.min(f0.rho))]
    max_S = max_T = 0.0
    f = f0
    for n in range(1, steps + 1):
        t = t0 + (n - 1) * h
        try:
            f_next, k1 = _rk4_step(ab, f, t, h)
        except InstabilityError as exc:
            if t > times[-1]:
                times.append(t)
                fields.append(f)
                min_rho.append(float(np.min(f.rho)))
            partial = Trajectory(times, tuple(fields), IntegratorStats(h, n - 1, max_S, max_T, tuple(min_rho)))
            logger.error(f"Integration aborted after {n - 1} steps: {exc.detail}")
            raise InstabilityError(exc.detail, trajectory=partial, path="run") from exc
        f = f_next
        max_S = max(max_S, float(np.max(np.abs(k1.dS + k1.dslope * grid.x))))
        max_T = max(max_T, float(np.max(np.abs(k1.dT))))
        if n in marks:
            times.append(t0 + n * h)
            fields.append(f)
            min_rho.append(float(np.min(f.rho)))
            logger.debug(f"Snapshot t={times[-1]:.6g}, min rho={min_rho[-1]:.3e}")

    stats = IntegratorStats(h, steps, max_S, max_T, tuple(min_rho))
    logger.info(f"Finished at t={times[-1]:g}; max |dS/dt|={max_S:.3e}, max |dT/dt|={max_T:.3e}")
    return Trajectory(times, tuple(fields), stats)


# ============================================================================
# Observables
# ============================================================================


@dataclass(frozen=True, eq=False)
class Observables:
    rho: np.ndarray
    jhat: np.ndarray
    Jgi: np.ndarray
    Vfield: np.ndarray
    norm: float
    xbar: float
    vbar: float
    abar: Optional[float]
    seam_weight: float


def _profile(e: Expression, x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Value and first two x-derivatives of an analytic field on the grid."""
    first = e.diff("x")
    return e.evaluate(x=x, t=t), first.evaluate(x=x, t=t), first.diff("x").evaluate(x=x, t=t)


def _velocity(nm: NuMuCoefficients, f: STField, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """𝐕 = 𝐉ᵍⁱ/ρ = −2ν₁∇S − 4ν₂∇T − 2𝒜 and its first two x-derivatives."""
    grid = f.grid
    nu1, nu2 = nm.nu1.value(t), nm.nu2.value(t)
    periodic = -2 * nu1 * f.gradS - 4 * nu2 * f.gradT
    A, A1, A2 = _profile(nm.Acal[0], grid.x, t)
    return (
        periodic - 2 * A,
        grid.derivative(periodic) - 2 * A1,
        grid.laplacian(periodic) - 2 * A2,
    )


def observables(nm: NuMuCoefficients, f: STField, t: float, acceleration: bool = True) -> Observables:
    grid = f.grid
    rho = f.rho
    V, dV, _ = _velocity(nm, f, t)
    Jgi = rho * V

    abar = None
    if acceleration:
        try:
            abar = grid.integrate(rho * (V * dV + hydrodynamic_rhs(nm, f, t)))
        except DegenerateEquationError as exc:
            logger.debug(f"No acceleration: {exc}")

    return Observables(
        rho=rho,
        jhat=rho * f.gradS,
        Jgi=Jgi,
        Vfield=V,
        norm=grid.integrate(rho),
        xbar=grid.integrate(grid.x * rho),
        vbar=grid.integrate(Jgi),
        abar=abar,
        seam_weight=float(max(rho[0], rho[-1]) / np.max(rho)),
    )


def width(f: STField, background: float = 0.0) -> float:
    """Root second central moment of |ψ − background|²."""
    grid = f.grid
    weight = np.abs(np.exp(f.T + 1j * f.S_full) - background) ** 2
    total = grid.integrate(weight)
    mean = grid.integrate(grid.x * weight) / total
    return float(np.sqrt(grid.integrate((grid.x - mean) ** 2 * weight) / total))


# ============================================================================
# Hydrodynamics
# ============================================================================


def hydrodynamic_rhs(nm: NuMuCoefficients, f: STField, t: float, include_friction: bool = True) -> np.ndarray:
    """
    Right side of the gauge-invariant equation of motion for 𝐕 in 1D:

        ∂ₜ𝐕 = ∂ₓB − β₂𝐕 + 2ℰ
        B = 2τ₁𝐕' + 2τ₂ρ''/ρ + ½τ₃𝐕² + (2τ₁(1+τ₃) − τ₄)𝐕ρ'/ρ + 2τ₅(ρ'/ρ)²
            + 2(A1gi ρ)'/ρ − 2τ₃A2gi·𝐕 + 2β₁ ln ρ

    τ₃A2gi is taken as ½𝒜₂ − τ₃𝒜 so μ₃ = 0 is allowed. Field derivatives are
    analytic; only grid quantities are differentiated spectrally.
    """
    tb = tau_beta_expressions(nm)
    tau1, tau2, tau3, tau4, tau5 = (e.evaluate(t=t) for e in tb.tau)
    beta1, beta2 = tb.beta1.evaluate(t=t), tb.beta2.evaluate(t=t)

    grid = f.grid
    x = grid.x
    T1, T2 = f.gradT, f.lapT
    T3 = grid.derivative(T2)
    V, V1, V2 = _velocity(nm, f, t)

    mu1, _, mu3, mu4, _ = nm.mu
    A1gi = combine((nm.nu1, nm.A1), (2 * nm.nu2 * mu3 / nm.nu1 - mu1 - mu4, nm.Acal), (-nm.nu2, nm.A2))[0]
    coupling = combine(("1/2", nm.A2), (-tb.tau[2], nm.Acal))[0]
    G, G1, G2 = _profile(A1gi, x, t)
    C, C1, _ = _profile(coupling, x, t)

    c4 = 2 * tau1 * (1 + tau3) - tau4
    dB = (
        2 * tau1 * V2
        + 2 * tau2 * (2 * T3 + 8 * T1 * T2)
        + tau3 * V * V1
        + 2 * c4 * (V1 * T1 + V * T2)
        + 16 * tau5 * T1 * T2
        + 2 * (G2 + 2 * G1 * T1 + 2 * G * T2)
        - 2 * (C1 * V + C * V1)
        + 4 * beta1 * T1
    )

    Uhat = sum(uhat_terms(nm, tb), Expression.of(0))
    Acal = nm.Acal[0]
    calE = (
        -Uhat.diff("x").evaluate(x=x, t=t)
        - Acal.diff("t").evaluate(x=x, t=t)
        - beta2 * Acal.evaluate(x=x, t=t)
    )
    rate = dB + 2 * calE
    if include_friction:
        rate = rate - beta2 * V
    return rate


def _interior(traj: Trajectory) -> range:
    if len(traj) < 3:
        raise PreconditionError("time differencing needs at least three snapshots", path="run.snapshots")
    return range(1, len(traj) - 1)


@dataclass(frozen=True)
class ContinuityReport:
    continuity: float
    fokker_planck: Optional[float]
    applicable: bool


def continuity_residual(nm: NuMuCoefficients, traj: Trajectory) -> ContinuityReport:
    """
    max ‖∂ₜρ + ∇·𝐉ᵍⁱ‖∞ over interior snapshots, with ∂ₜρ centered.

    The Fokker–Planck form ‖∂ₜρ + ∇·𝐣 − D∇²ρ‖∞ (𝐣 = −2ν₁ĵ, D = 2ν₂) is
    reported when 𝒜 ≡ 0.
    """
    applicable = in_restricted_family(nm)
    if not applicable:
        logger.warning("Coefficients are outside the real-coefficient family; continuity residual is not applicable")
    with_fp = all(c.is_zero for c in nm.Acal)

    grid = traj.grid
    worst = worst_fp = 0.0
    for i in _interior(traj):
        t = traj.times[i]
        span = traj.times[i + 1] - traj.times[i - 1]
        rate = (traj.fields[i + 1].rho - traj.fields[i - 1].rho) / span
        f = traj.fields[i]
        obs = observables(nm, f, t, acceleration=False)
        worst = max(worst, float(np.max(np.abs(rate + grid.derivative(obs.Jgi)))))
        if with_fp:
            nu1, nu2 = nm.nu1.value(t), nm.nu2.value(t)
            fp = rate + grid.derivative(-2 * nu1 * obs.jhat) - 2 * nu2 * grid.laplacian(obs.rho)
            worst_fp = max(worst_fp, float(np.max(np.abs(fp))))
    return ContinuityReport(worst, worst_fp if with_fp else None, applicable)


def hydrodynamic_residual(nm: NuMuCoefficients, traj: Trajectory, include_friction: bool = True) -> float:
    """
    Mismatch between centered ∂ₜ𝐕 and ``hydrodynamic_rhs`` over interior
    snapshots, relative to the largest right side (floored at 1e-8).
    """
    mismatch = scale = 0.0
    for i in _interior(traj):
        span = traj.times[i + 1] - traj.times[i - 1]
        later, _, _ = _velocity(nm, traj.fields[i + 1], traj.times[i + 1])
        earlier, _, _ = _velocity(nm, traj.fields[i - 1], traj.times[i - 1])
        expected = hydrodynamic_rhs(nm, traj.fields[i], traj.times[i], include_friction)
        mismatch = max(mismatch, float(np.max(np.abs((later - earlier) / span - expected))))
        scale = max(scale, float(np.max(np.abs(expected))))
    return mismatch / max(scale, 1e-8)


# ============================================================================
# Gauge covariance
# ============================================================================


@dataclass(frozen=True, eq=False)
class CovarianceReport:
    deviation: float
    deviation_S: float
    deviation_T: float
    direct: Trajectory
    transformed: Trajectory

    def summary(self) -> dict:
        return {
            "deviation": self.deviation,
            "deviation_S": self.deviation_S,
            "deviation_T": self.deviation_T,
            "legs": {
                "direct": {"steps": self.direct.stats.steps, "max_rate_S": self.direct.stats.max_rate_S},
                "transformed": {"steps": self.transformed.stats.steps, "max_rate_S": self.transformed.stats.max_rate_S},
            },
        }


def covariance_experiment(
    ab: ABCoefficients,
    g: GaugeElement,
    f0: STField,
    t0: float,
    t1: float,
    dt: float,
    parallel: bool = True,
) -> CovarianceReport:
    """Evolve-then-transform against transform-then-evolve under the transformed equation."""
    times = np.linspace(t0, t1, settings.subgroup_samples)
    ab_prime = transform_ab(ab, g, times)
    legs = [(ab, f0), (ab_prime, apply_to_st(g, f0, t0))]

    def run(leg):
        return evolve(leg[0], leg[1], t0, t1, dt, snapshots=2)

    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            direct, transformed = pool.map(run, legs)
    else:
        direct, transformed = (run(leg) for leg in legs)

    mapped = apply_to_st(g, direct.final, t1)
    dS = float(np.max(np.abs(mapped.S_full - transformed.final.S_full)))
    dT = float(np.max(np.abs(mapped.T - transformed.final.T)))
    logger.info(f"Covariance deviation at t={t1:g}: S {dS:.3e}, T {dT:.3e}")
    return CovarianceReport(max(dS, dT), dS, dT, direct, transformed)


# ============================================================================
# Summaries
# ============================================================================


def summarize(nm: NuMuCoefficients, traj: Trajectory, background: float = 0.0) -> dict:
    """Run summary: conservation, residuals and moments at the ends of the run."""
    first = observables(nm, traj.fields[0], traj.times[0], acceleration=False)
    last = observables(nm, traj.final, traj.times[-1])
    norms = [traj.grid.integrate(f.rho) for f in traj.fields]
    seam = max(float(max(f.rho[0], f.rho[-1]) / np.max(f.rho)) for f in traj.fields)
    if seam > settings.seam_threshold:
        logger.warning(f"Density at the seam reaches {seam:.3e} of its maximum; <x> is domain-dependent")

    summary = {
        "t0": float(traj.times[0]),
        "t1": float(traj.times[-1]),
        "dt": traj.stats.dt,
        "steps": traj.stats.steps,
        "snapshots": len(traj),
        "norm_initial": first.norm,
        "norm_drift": float(max(abs(n - norms[0]) for n in norms) / norms[0]),
        "width_initial": width(traj.fields[0], background),
        "width_final": width(traj.final, background),
        "xbar_final": last.xbar,
        "vbar_final": last.vbar,
        "abar_final": last.abar,
        "min_rho": float(min(traj.stats.min_rho)),
        "seam_weight": seam,
        "continuity_residual": None,
        "fokker_planck_residual": None,
        "continuity_applicable": in_restricted_family(nm),
        "hydrodynamic_residual": None,
    }
    if len(traj) >= 3:
        report = continuity_residual(nm, traj)
        summary["continuity_residual"] = report.continuity
        summary["fokker_planck_residual"] = report.fokker_planck
        try:
            summary["hydrodynamic_residual"] = hydrodynamic_residual(nm, traj)
        except DegenerateEquationError as exc:
            logger.warning(f"Hydrodynamic residual skipped: {exc}")
    return summary
