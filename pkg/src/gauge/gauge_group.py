"""
Gauge group elements (S, T) -> A(t)(S, T) + (θ, φ), A = [[Λ, γ], [λ, κ]].

Composition convention: ``compose(g1, g2)`` acts with g2 first, then g1, so

    (A₁, b₁) ∘ (A₂, b₂) = (A₁A₂, A₁b₂ + b₁)

On the subgroup λ = 0, κ = 1, φ = 0 this is the product law
(Λ₁Λ₂, γ₁ + Λ₁γ₂, θ₁ + Λ₁θ₂).
"""

import logging
from typing import Any, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel, ConfigDict, Field

from .config import settings
from .equation_model import STField, split_winding
from .errors import SingularGaugeError, WindingError
from .expr import Expression, FieldSlot, SignalSlot

logger = logging.getLogger(__name__)


class GaugeElement(BaseModel):
    model_config = ConfigDict(
        frozen=True,
        arbitrary_types_allowed=True,
        validate_default=True,
        populate_by_name=True,
        extra="forbid",
    )

    Lambda: SignalSlot = "1"
    gamma: SignalSlot = "0"
    lambda_: SignalSlot = Field("0", alias="lambda")
    kappa: SignalSlot = "1"
    theta: FieldSlot = "0"
    phi: FieldSlot = "0"

    @classmethod
    def identity(cls) -> "GaugeElement":
        return cls()

    @classmethod
    def swap(cls) -> "GaugeElement":
        """Exchange S and T."""
        return cls(Lambda="0", gamma="1", lambda_="1", kappa="0")

    @classmethod
    def subgroup(cls, Lambda: Any = "1", gamma: Any = "0", theta: Any = "0") -> "GaugeElement":
        return cls(Lambda=Lambda, gamma=gamma, theta=theta)

    @classmethod
    def from_json(cls, data: dict) -> "GaugeElement":
        return cls.model_validate(data)

    def to_json(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)

    @property
    def matrix(self) -> tuple[tuple[Expression, Expression], tuple[Expression, Expression]]:
        return ((self.Lambda, self.gamma), (self.lambda_, self.kappa))

    @property
    def determinant(self) -> Expression:
        return self.kappa * self.Lambda - self.lambda_ * self.gamma

    def matrix_at(self, t: float) -> np.ndarray:
        return np.array([[entry.value(t) for entry in row] for row in self.matrix])

    def determinant_at(self, t: float) -> float:
        return float(self.determinant.evaluate(t=t))

    def require_invertible(self, times: Optional[Sequence[float]] = None) -> None:
        """Raise unless |Δ(t)| exceeds the determinant threshold at every queried time."""
        delta = self.determinant
        if delta.is_zero:
            raise SingularGaugeError("gauge matrix is singular: kappa*Lambda - lambda*gamma = 0", path="gauge")
        if times is None:
            times = np.linspace(0.0, 1.0, settings.subgroup_samples)
        values = np.abs(np.atleast_1d(delta.evaluate(t=np.asarray(times, dtype=float))))
        worst = int(np.argmin(values))
        if values[worst] <= settings.determinant_threshold:
            raise SingularGaugeError(
                f"|kappa*Lambda - lambda*gamma| = {values[worst]:.3e} at t={np.asarray(times)[worst]:g} "
                f"is below {settings.determinant_threshold:g}",
                path="gauge",
            )


def compose(g1: GaugeElement, g2: GaugeElement) -> GaugeElement:
    """Apply g2 first, then g1."""
    composed = GaugeElement(
        Lambda=g1.Lambda * g2.Lambda + g1.gamma * g2.lambda_,
        gamma=g1.Lambda * g2.gamma + g1.gamma * g2.kappa,
        lambda_=g1.lambda_ * g2.Lambda + g1.kappa * g2.lambda_,
        kappa=g1.lambda_ * g2.gamma + g1.kappa * g2.kappa,
        theta=g1.theta + g1.Lambda * g2.theta + g1.gamma * g2.phi,
        phi=g1.phi + g1.lambda_ * g2.theta + g1.kappa * g2.phi,
    )
    assert not composed.determinant.is_zero, "product of invertible gauge elements is singular"
    return composed


def inverse(g: GaugeElement, times: Optional[Sequence[float]] = None) -> GaugeElement:
    g.require_invertible(times)
    delta = g.determinant
    Lam, gam = g.kappa / delta, -g.gamma / delta
    lam, kap = -g.lambda_ / delta, g.Lambda / delta
    return GaugeElement(
        Lambda=Lam,
        gamma=gam,
        lambda_=lam,
        kappa=kap,
        theta=-(Lam * g.theta + gam * g.phi),
        phi=-(lam * g.theta + kap * g.phi),
    )


def _vanishes(e: Expression, interval: tuple[float, float], rng: np.random.Generator) -> bool:
    if e.is_zero:
        return True
    simplified = sympy.simplify(e.tree)
    if simplified == 0:
        return True
    decided = simplified.equals(0)
    if decided is not None:
        return bool(decided)
    times = rng.uniform(interval[0], interval[1], settings.subgroup_samples)
    points = rng.uniform(-settings.domain_length / 2, settings.domain_length / 2, settings.subgroup_samples)
    worst = float(np.max(np.abs(e.evaluate(x=points, t=times))))
    logger.warning(
        f"Could not decide '{e.text}' = 0 symbolically; max |value| over "
        f"{settings.subgroup_samples} random samples is {worst:.3e}"
    )
    return worst <= settings.subgroup_tolerance


def is_subgroup(g: GaugeElement, interval: tuple[float, float] = (0.0, 1.0), seed: int = 0) -> bool:
    """
    λ ≡ 0, κ ≡ 1, φ ≡ 0.

    Decided symbolically where sympy can; otherwise sampled at seeded random
    points of ``interval`` × domain.
    """
    rng = np.random.default_rng(seed)
    return all(_vanishes(e, interval, rng) for e in (g.lambda_, g.kappa - 1, g.phi))


def apply_to_st(g: GaugeElement, f: STField, t: float) -> STField:
    g.require_invertible([t])
    grid = f.grid
    L = grid.length
    (Lam, gam), (lam, kap) = g.matrix_at(t)

    try:
        theta_slope, theta = split_winding(g.theta, grid, t, "gauge function theta")
    except WindingError as exc:
        raise exc.with_path("gauge.theta")
    try:
        phi_slope, phi = split_winding(g.phi, grid, t, "gauge function phi")
    except WindingError as exc:
        raise exc.with_path("gauge.phi")

    T_slope = lam * f.slope + phi_slope
    if abs(T_slope) * L > settings.winding_tolerance * (1.0 + abs(f.slope) * L):
        raise WindingError(
            f"transformed T would wind with slope {T_slope:.3e}: lambda*k_S + (phi slope) must vanish "
            f"(lambda={lam:g}, k_S={f.slope:g})",
            path="gauge",
        )
    return STField(
        grid,
        Lam * f.S + gam * f.T + theta,
        lam * f.S + kap * f.T + phi,
        Lam * f.slope + theta_slope,
    )
