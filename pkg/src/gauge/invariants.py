"""
Gauge-invariant parameters, potentials and field relations.

The τ and β parameters are invariants of the S' = ΛS + γ ln R + θ subgroup and
are built from the (ν, μ, α) parameterization only. I₁, I₂ and the
(d₁, d₂) combination are invariants of the full group and are read from the
canonical (a, b) form.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from pydantic import BaseModel

from .config import settings
from .equation_model import ABCoefficients, NuMuCoefficients, PhysicalParams, STField
from .errors import DegenerateEquationError, PreconditionError
from .expr import (
    Expression,
    ExpressionLike,
    FieldHandle,
    Vector,
    combine,
    curl,
    divergence,
    dot,
    evaluate_vector,
    gradient,
    pad,
)

logger = logging.getLogger(__name__)


# ============================================================================
# Parameters
# ============================================================================


class TauBeta(NamedTuple):
    tau: tuple[Expression, Expression, Expression, Expression, Expression]
    beta1: Expression
    beta2: Expression


class FullGroupInvariants(NamedTuple):
    I1: float
    I2: float
    d1: float
    d2: float


class GaugeInvariants(BaseModel):
    """Invariant parameters at one instant; τ/β are None when ν₁ = 0."""

    t: float
    tau: Optional[list[float]] = None
    beta: Optional[list[float]] = None
    beta_method: str = "analytic"
    I1: float
    I2: float
    d1: float
    d2: float

    @property
    def quantum_class(self) -> bool:
        return self.I2 > 0

    def to_json(self) -> dict:
        data = self.model_dump(mode="json")
        data["quantum_class"] = self.quantum_class
        return data


def _require_nu1(nm: NuMuCoefficients) -> None:
    if nm.nu1.is_zero:
        raise DegenerateEquationError("nu1 = 0: tau and beta are undefined for this equation", path="equation.nu1")


def tau_beta_expressions(nm: NuMuCoefficients) -> TauBeta:
    _require_nu1(nm)
    nu1, nu2 = nm.nu1, nm.nu2
    mu1, mu2, mu3, mu4, mu5 = nm.mu
    tau = (
        nu2 - mu1 / 2,
        nu1 * mu2 - nu2 * mu1,
        mu3 / nu1,
        mu4 - mu1 * mu3 / nu1,
        nu1 * mu5 - nu2 * mu4 + nu2**2 * mu3 / nu1,
    )
    beta1 = nu1 * nm.alpha1 - nu2 * nm.alpha2 + nu2 * nu1.rate / nu1 - nu2.rate
    beta2 = nm.alpha2 - nu1.rate / nu1
    return TauBeta(tau, beta1, beta2)


def tau_beta(nm: NuMuCoefficients, t: float, finite_difference: bool = False) -> tuple[list[float], list[float]]:
    """
    τ₁..τ₅ and (β₁, β₂) at time t.

    With ``finite_difference`` the rates ν̇₁, ν̇₂ come from a centered
    difference with step ``settings.fd_step`` (error O(h²)) instead of the
    analytic derivative.
    """
    _require_nu1(nm)
    nu1 = nm.nu1.value(t)
    if abs(nu1) <= settings.degeneracy_threshold:
        raise DegenerateEquationError(f"nu1({t:g}) = {nu1:.3e} vanishes", path="equation.nu1")
    nu2 = nm.nu2.value(t)
    mu1, mu2, mu3, mu4, mu5 = (m.value(t) for m in nm.mu)
    alpha1, alpha2 = nm.alpha1.value(t), nm.alpha2.value(t)

    if finite_difference:
        h = settings.fd_step
        rate1 = (nm.nu1.value(t + h) - nm.nu1.value(t - h)) / (2 * h)
        rate2 = (nm.nu2.value(t + h) - nm.nu2.value(t - h)) / (2 * h)
    else:
        rate1, rate2 = nm.nu1.derivative(t), nm.nu2.derivative(t)

    tau = [
        nu2 - mu1 / 2,
        nu1 * mu2 - nu2 * mu1,
        mu3 / nu1,
        mu4 - mu1 * mu3 / nu1,
        nu1 * mu5 - nu2 * mu4 + nu2**2 * mu3 / nu1,
    ]
    beta = [
        nu1 * alpha1 - nu2 * alpha2 + nu2 * rate1 / nu1 - rate2,
        alpha2 - rate1 / nu1,
    ]
    return tau, beta


def full_group_invariants(ab: ABCoefficients, t: float) -> FullGroupInvariants:
    a1, a2, a3, a4, _, _, _ = (s.value(t) for s in ab.a)
    b1, b2, _, b4, b5, _, _ = (s.value(t) for s in ab.b)
    return FullGroupInvariants(I1=a1 + b2, I2=a1 * b2 - a2 * b1, d1=2 * a3 + b4, d2=a4 + 2 * b5)


def gauge_invariants(
    ab: ABCoefficients,
    nm: Optional[NuMuCoefficients],
    t: float,
    finite_difference: bool = False,
) -> GaugeInvariants:
    """Full-group invariants always; τ/β when ν₁ ≠ 0, otherwise logged and left out."""
    full = full_group_invariants(ab, t)
    tau = beta = None
    if nm is not None:
        try:
            tau, beta = tau_beta(nm, t, finite_difference)
        except DegenerateEquationError as exc:
            logger.warning(f"Skipping tau/beta: {exc}")
    return GaugeInvariants(
        t=t,
        tau=tau,
        beta=beta,
        beta_method="finite-difference" if finite_difference else "analytic",
        **full._asdict(),
    )


# ============================================================================
# Invariant potentials
# ============================================================================


@dataclass(frozen=True)
class InvariantFields:
    Uhat: FieldHandle
    A1gi: Vector
    A2gi: Optional[Vector]
    calB: Vector
    calE: Vector


def uhat_terms(nm: NuMuCoefficients, tb: Optional[TauBeta] = None) -> tuple[Expression, ...]:
    """The five terms of Û, in order."""
    tb = tb or tau_beta_expressions(nm)
    tau1, _, tau3, tau4, _ = tb.tau
    A, A2 = nm.Acal, nm.A2
    return (
        -nm.nu1 * nm.U,
        -tau3 * dot(A, A),
        -(tau4 - 2 * tau1 * tau3) * divergence(A),
        dot(A, A2),
        -nm.nu2 * divergence(A2),
    )


def invariant_potentials(nm: NuMuCoefficients, omit_term: Optional[int] = None) -> InvariantFields:
    """
    Û, A1gi, A2gi, ℬ = ∇×𝒜 and ℰ = −∇Û − ∂𝒜/∂t − β₂𝒜.

    ``omit_term`` (1..5) drops one term of Û; the result is then no longer
    gauge invariant. A2gi is None when μ₃ ≡ 0.
    """
    if omit_term is not None and not 1 <= omit_term <= 5:
        raise PreconditionError(f"omit_term must be 1..5, got {omit_term}")
    tb = tau_beta_expressions(nm)
    terms = uhat_terms(nm, tb)
    Uhat = sum((term for i, term in enumerate(terms, start=1) if i != omit_term), Expression.of(0))

    nu1, nu2 = nm.nu1, nm.nu2
    mu1, _, mu3, mu4, _ = nm.mu
    A1gi = combine((nu1, nm.A1), (2 * nu2 * mu3 / nu1 - mu1 - mu4, nm.Acal), (-nu2, nm.A2))
    if mu3.is_zero:
        logger.warning("mu3 = 0: A2gi is undefined and omitted")
        A2gi = None
    else:
        A2gi = combine((nu1 / (2 * mu3), nm.A2), (-1, nm.Acal))

    dim = max(nm.dim, Uhat.dimension, *(c.dimension for c in nm.Acal))
    calE = combine(
        (-1, gradient(Uhat, dim)),
        (-1, tuple(c.diff("t") for c in nm.Acal)),
        (-tb.beta2, nm.Acal),
    )
    return InvariantFields(
        Uhat=FieldHandle(Uhat.tree),
        A1gi=A1gi,
        A2gi=A2gi,
        calB=curl(nm.Acal),
        calE=calE,
    )


# ============================================================================
# Field relations
# ============================================================================


def _split(points: np.ndarray) -> tuple[np.ndarray, ...]:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != 4:
        raise PreconditionError(f"sample points must be rows (x, y, z, t), got shape {points.shape}")
    return tuple(points.T)


def _max_norm(vector: Vector, points: np.ndarray) -> float:
    x, y, z, t = _split(points)
    values = evaluate_vector(pad(vector), x, y, z, t)
    return float(np.max(np.linalg.norm(values, axis=0)))


def maxwell_residual(
    nm: NuMuCoefficients,
    points: np.ndarray,
    params: Optional[PhysicalParams] = None,
    include_friction: bool = True,
) -> float:
    """
    max |∇×E + (1/c)∂ₜB + (β₂/c)B| over sample rows (x, y, z, t).

    Without ``params`` the invariant pair (ℰ, ℬ) with c = 1 is used; with
    ``params`` the physical potentials Φ, 𝐀 are. ``include_friction=False``
    drops the −(β₂/c)𝐀 term from E, leaving a residual of |(β₂/c)B|.
    """
    beta2 = tau_beta_expressions(nm).beta2
    if params is None:
        c = Expression.of(1)
        B = curl(nm.Acal)
        fields = invariant_potentials(nm)
        E = fields.calE if include_friction else combine((1, fields.calE), (beta2, nm.Acal))
    else:
        c = Expression.of(params.c)
        A = pad(params.Avec)
        B = curl(A)
        E = combine(
            (-1, gradient(params.Phi, 3)),
            (-1 / c, tuple(component.diff("t") for component in A)),
            *([(-beta2 / c, A)] if include_friction else []),
        )
    residual = combine(
        (1, curl(E)),
        (1 / c, tuple(component.diff("t") for component in B)),
        (beta2 / c, B),
    )
    return _max_norm(residual, points)


def curl_relation_residual(nm: NuMuCoefficients, S: ExpressionLike, T: ExpressionLike, points: np.ndarray) -> float:
    """max |∇×𝐕 + 2ℬ| with 𝐕 = −2ν₁∇S − 4ν₂∇T − 2𝒜, analytic fields."""
    V = combine((-2 * nm.nu1, gradient(S, 3)), (-4 * nm.nu2, gradient(T, 3)), (-2, nm.Acal))
    return _max_norm(combine((1, curl(V)), (2, curl(nm.Acal))), points)


class Combination(NamedTuple):
    value: np.ndarray
    L1: np.ndarray
    L2: np.ndarray
    extended: Optional[np.ndarray] = None


def invariant_combination(
    ab: ABCoefficients,
    f: STField,
    t: float,
    sigma: Optional[float] = None,
    tau: Optional[float] = None,
) -> Combination:
    """
    d₁S + d₂T with d₁ = 2a₃ + b₄, d₂ = a₄ + 2b₅, plus (L₁, L₂) = (a₁S + a₂T, b₁S + b₂T).

    Given invariant numbers σ and τ, also d₁(σL₁ + τS) + d₂(σL₂ + τT).
    """
    full = full_group_invariants(ab, t)
    a1, a2, b1, b2 = (s.value(t) for s in (ab.a1, ab.a2, ab.b1, ab.b2))
    S, T = f.S_full, f.T
    L1, L2 = a1 * S + a2 * T, b1 * S + b2 * T
    extended = None
    if sigma is not None or tau is not None:
        sigma, tau = sigma or 0.0, tau or 0.0
        extended = full.d1 * (sigma * L1 + tau * S) + full.d2 * (sigma * L2 + tau * T)
    return Combination(full.d1 * S + full.d2 * T, L1, L2, extended)
