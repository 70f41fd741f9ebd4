"""
Equation model: the physics (ν, μ) and canonical (a, b) parameterizations of
the nonlinear Schrödinger family in logarithmic variables ψ = exp(T + iS),
their interconversion, special cases, and the canonical right-hand side

    Ṡ = a₁∇²S + a₂∇²T + a₃(∇S)² + a₄∇S·∇T + a₅(∇T)² + a₆S + a₇T + u₀ + u₁·∇S + u₂·∇T
    Ṫ = b₁∇²S + b₂∇²T + b₃(∇S)² + b₄∇S·∇T + b₅(∇T)² + b₆S + b₇T + v₀ + v₁·∇S + v₂·∇T

evaluated on a periodic 1D grid with S = k_S·x + (periodic remainder).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, ClassVar, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import settings
from .errors import GaugeFamilyError, GridError, NodeError, WindingError
from .expr import (
    Expression,
    ExpressionLike,
    FieldHandle,
    FieldSlot,
    SignalSlot,
    VectorSlot,
    combine,
    divergence,
    dot,
    gradient,
    laplacian,
)

logger = logging.getLogger(__name__)


# ============================================================================
# Coefficient sets
# ============================================================================


def _as_list(value: Any) -> list:
    if isinstance(value, (str, int, float, Expression)):
        return [value]
    return list(value)


class CoefficientSet(BaseModel):
    """Common behaviour: immutable, expression leaves, vector slots share one dimension."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, validate_default=True, extra="forbid")

    SIGNAL_SLOTS: ClassVar[tuple[str, ...]] = ()
    FIELD_SLOTS: ClassVar[tuple[str, ...]] = ()
    VECTOR_SLOTS: ClassVar[tuple[str, ...]] = ()

    @model_validator(mode="before")
    @classmethod
    def _align_vectors(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        present = [_as_list(data[name]) for name in cls.VECTOR_SLOTS if name in data]
        dim = max((len(v) for v in present), default=1)
        for name in cls.VECTOR_SLOTS:
            components = _as_list(data.get(name, ["0"]))
            data[name] = components + ["0"] * (dim - len(components))
        return data

    @property
    def dim(self) -> int:
        return len(getattr(self, self.VECTOR_SLOTS[0]))

    def signals(self) -> dict[str, Expression]:
        return {name: getattr(self, name) for name in self.SIGNAL_SLOTS}

    def is_zero(self) -> bool:
        leaves = list(self.signals().values()) + [getattr(self, n) for n in self.FIELD_SLOTS]
        leaves += [c for n in self.VECTOR_SLOTS for c in getattr(self, n)]
        return all(leaf.is_zero for leaf in leaves)

    def with_dim(self, dim: int):
        """Copy with every vector slot padded to ``dim`` components."""
        data = {name: getattr(self, name) for name in type(self).model_fields}
        for name in self.VECTOR_SLOTS:
            data[name] = list(getattr(self, name)) + ["0"] * (dim - self.dim)
        return type(self)(**data)


class NuMuCoefficients(CoefficientSet):
    """Physics parameterization of the complexified family."""

    SIGNAL_SLOTS: ClassVar[tuple[str, ...]] = (
        "nu1", "nu2", "nu3", "nu4", "nu5",
        "mu1", "mu2", "mu3", "mu4", "mu5",
        "alpha1", "alpha2", "delta1", "delta2",
    )
    FIELD_SLOTS: ClassVar[tuple[str, ...]] = ("U", "Tcal")
    VECTOR_SLOTS: ClassVar[tuple[str, ...]] = ("Acal", "A1", "A2", "Dcal")

    nu1: SignalSlot = "0"
    nu2: SignalSlot = "0"
    nu3: SignalSlot = "0"
    nu4: SignalSlot = "0"
    nu5: SignalSlot = "0"
    mu1: SignalSlot = "0"
    mu2: SignalSlot = "0"
    mu3: SignalSlot = "0"
    mu4: SignalSlot = "0"
    mu5: SignalSlot = "0"
    alpha1: SignalSlot = "0"
    alpha2: SignalSlot = "0"
    delta1: SignalSlot = "0"
    delta2: SignalSlot = "0"
    U: FieldSlot = "0"
    Tcal: FieldSlot = "0"
    Acal: VectorSlot = ("0",)
    A1: VectorSlot = ("0",)
    A2: VectorSlot = ("0",)
    Dcal: VectorSlot = ("0",)

    @property
    def nu(self) -> tuple[Expression, ...]:
        return (self.nu1, self.nu2, self.nu3, self.nu4, self.nu5)

    @property
    def mu(self) -> tuple[Expression, ...]:
        return (self.mu1, self.mu2, self.mu3, self.mu4, self.mu5)


def in_restricted_family(nm: NuMuCoefficients) -> bool:
    """ν₃=ν₄=ν₅=δ₁=δ₂=0, 𝒯=0, 𝒟=0: the real-coefficient family with a continuity equation."""
    zeros = (nm.nu3, nm.nu4, nm.nu5, nm.delta1, nm.delta2, nm.Tcal, *nm.Dcal)
    return all(e.is_zero for e in zeros)


class ABCoefficients(CoefficientSet):
    """Canonical coupled-PDE parameterization: 14 scalar coefficients and 6 external fields."""

    SIGNAL_SLOTS: ClassVar[tuple[str, ...]] = (
        "a1", "a2", "a3", "a4", "a5", "a6", "a7",
        "b1", "b2", "b3", "b4", "b5", "b6", "b7",
    )
    FIELD_SLOTS: ClassVar[tuple[str, ...]] = ("u0", "v0")
    VECTOR_SLOTS: ClassVar[tuple[str, ...]] = ("u1", "u2", "v1", "v2")

    a1: SignalSlot = "0"
    a2: SignalSlot = "0"
    a3: SignalSlot = "0"
    a4: SignalSlot = "0"
    a5: SignalSlot = "0"
    a6: SignalSlot = "0"
    a7: SignalSlot = "0"
    b1: SignalSlot = "0"
    b2: SignalSlot = "0"
    b3: SignalSlot = "0"
    b4: SignalSlot = "0"
    b5: SignalSlot = "0"
    b6: SignalSlot = "0"
    b7: SignalSlot = "0"
    u0: FieldSlot = "0"
    v0: FieldSlot = "0"
    u1: VectorSlot = ("0",)
    u2: VectorSlot = ("0",)
    v1: VectorSlot = ("0",)
    v2: VectorSlot = ("0",)

    @property
    def a(self) -> tuple[Expression, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a5, self.a6, self.a7)

    @property
    def b(self) -> tuple[Expression, ...]:
        return (self.b1, self.b2, self.b3, self.b4, self.b5, self.b6, self.b7)


class PhysicalParams(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, validate_default=True, extra="forbid")

    hbar: float = Field(default_factory=lambda: settings.hbar, gt=0)
    m: float = Field(default_factory=lambda: settings.mass, gt=0)
    e: float = 0.0
    c: float = Field(1.0, gt=0)
    D: float = 0.0
    Dprime: float = 0.0
    cvals: tuple[float, float, float, float, float] = (0.0, 0.0, 0.0, 0.0, 0.0)
    V: FieldSlot = "0"
    Phi: FieldSlot = "0"
    Avec: VectorSlot = ("0",)


# ============================================================================
# Conversion tables
# ============================================================================


def ab_from_numu(nm: NuMuCoefficients) -> ABCoefficients:
    return ABCoefficients(
        a1=-nm.mu1,
        b1=nm.nu1,
        a2=-2 * nm.mu2,
        b2=2 * nm.nu2,
        a3=-nm.mu3,
        b3=nm.nu3,
        a4=-2 * nm.mu1 - 2 * nm.mu4,
        b4=2 * nm.nu1 + 2 * nm.nu4,
        a5=-4 * nm.mu2 - 4 * nm.mu5,
        b5=4 * nm.nu2 + 4 * nm.nu5,
        a6=-nm.alpha2,
        b6=nm.delta2,
        a7=-2 * nm.alpha1,
        b7=2 * nm.delta1,
        u0=-nm.U - divergence(nm.A1),
        v0=nm.Tcal + divergence(nm.Acal),
        u1=combine((-1, nm.A2)),
        v1=nm.Dcal,
        u2=combine((-2, nm.A1)),
        v2=combine((2, nm.Acal)),
    )


def numu_from_ab(ab: ABCoefficients) -> NuMuCoefficients:
    mu1, nu1 = -ab.a1, ab.b1
    mu2, nu2 = -ab.a2 / 2, ab.b2 / 2
    Acal = combine(("1/2", ab.v2))
    A1 = combine(("-1/2", ab.u2))
    return NuMuCoefficients(
        nu1=nu1,
        nu2=nu2,
        nu3=ab.b3,
        nu4=ab.b4 / 2 - nu1,
        nu5=ab.b5 / 4 - nu2,
        mu1=mu1,
        mu2=mu2,
        mu3=-ab.a3,
        mu4=-ab.a4 / 2 - mu1,
        mu5=-ab.a5 / 4 - mu2,
        alpha1=-ab.a7 / 2,
        alpha2=-ab.a6,
        delta1=ab.b7 / 2,
        delta2=ab.b6,
        U=-ab.u0 - divergence(A1),
        Tcal=ab.v0 - divergence(Acal),
        Acal=Acal,
        A1=A1,
        A2=combine((-1, ab.u1)),
        Dcal=ab.v1,
    )


# ============================================================================
# Special cases
# ============================================================================


def linear_schroedinger_ab(p: PhysicalParams) -> ABCoefficients:
    hbar, m, e, c = (Expression.of(v) for v in (p.hbar, p.m, p.e, p.c))
    A = p.Avec
    return ABCoefficients(
        a2=hbar / (2 * m),
        a3=-hbar / (2 * m),
        a5=hbar / (2 * m),
        b1=-hbar / (2 * m),
        b4=-hbar / m,
        u0=-(p.V + e * p.Phi) / hbar - e**2 * dot(A, A) / (2 * m * hbar * c**2),
        u1=combine((e / (m * c), A)),
        v0=e / (2 * m * c) * divergence(A),
        v2=combine((e / (m * c), A)),
    )


def doebner_goldin_numu(p: PhysicalParams) -> NuMuCoefficients:
    hbar, m, e, c = (Expression.of(v) for v in (p.hbar, p.m, p.e, p.c))
    Dp = Expression.of(p.Dprime)
    c1, c2, c3, c4, c5 = (Expression.of(v) for v in p.cvals)
    A = p.Avec
    return NuMuCoefficients(
        nu1=-hbar / (2 * m),
        nu2=Expression.of(p.D) / 2,
        mu1=Dp * c1,
        mu2=-hbar / (4 * m) + Dp * c2,
        mu3=hbar / (2 * m) + Dp * c3,
        mu4=Dp * c4,
        mu5=hbar / (8 * m) + Dp * c5,
        Acal=combine((e / (2 * m * c), A)),
        A2=combine((-e / (m * c), A)),
        U=(p.V + e * p.Phi) / hbar + e**2 * dot(A, A) / (2 * m * hbar * c**2),
    )


# ============================================================================
# Grids and fields
# ============================================================================


@dataclass(frozen=True)
class Grid:
    """Periodic 1D grid x_j = origin + j·dx on [origin, origin + length)."""

    length: float
    points: int
    origin: Optional[float] = None

    def __post_init__(self):
        n = self.points
        if n < 32 or n & (n - 1):
            raise GridError(f"grid points must be a power of two >= 32, got {n}", path="grid.N")
        if not self.length > 0:
            raise GridError(f"domain length must be positive, got {self.length}", path="grid.L")
        if self.origin is None:
            object.__setattr__(self, "origin", -self.length / 2)

    @cached_property
    def dx(self) -> float:
        return self.length / self.points

    @cached_property
    def x(self) -> np.ndarray:
        return self.origin + self.dx * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.rfftfreq(self.points, d=self.dx)

    def derivative(self, values: np.ndarray) -> np.ndarray:
        spectrum = 1j * self.wavenumbers * np.fft.rfft(values)
        spectrum[-1] = 0.0  # Nyquist mode has no odd derivative
        return np.fft.irfft(spectrum, n=self.points)

    def laplacian(self, values: np.ndarray) -> np.ndarray:
        spectrum = -(self.wavenumbers**2) * np.fft.rfft(values)
        return np.fft.irfft(spectrum, n=self.points)

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.dx)


def split_winding(f: FieldHandle, grid: Grid, t: float, what: str) -> tuple[float, np.ndarray]:
    """
    Split f(x, t) on the grid into slope·x + periodic remainder.

    The slope is the jump across the seam, (f(x0 + L) − f(x0)) / L. The
    remainder then matches in value at the seam by construction and must
    also match in slope, so the periodic extension has no kink.
    """
    seam = np.array([grid.origin, grid.origin + grid.length])
    ends = np.asarray(f.value(seam, t), dtype=float)
    slope = float(ends[1] - ends[0]) / grid.length
    edges = np.asarray(f.partials["x"].evaluate(x=seam, t=t), dtype=float)
    kink = float(abs(edges[1] - edges[0]))
    if kink > settings.winding_tolerance * (1.0 + float(np.max(np.abs(edges)))):
        raise WindingError(
            f"{what} is not linear-plus-periodic: its x-derivative jumps by {kink:.3e} across the seam at x={seam[0]:g}"
        )
    logger.debug(f"{what}: seam slope {slope:.6g}")
    return slope, f.value(grid.x, t) - slope * grid.x


@dataclass(frozen=True, eq=False)
class STField:
    """(S, T) on a periodic grid; S = slope·x + S (periodic remainder stored)."""

    grid: Grid
    S: np.ndarray
    T: np.ndarray
    slope: float = 0.0

    def __post_init__(self):
        for name in ("S", "T"):
            values = np.asarray(getattr(self, name), dtype=float)
            if values.shape != (self.grid.points,):
                raise GridError(f"{name} has shape {values.shape}, grid has {self.grid.points} points")
            if not np.all(np.isfinite(values)):
                raise GridError(f"{name} contains non-finite values")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "slope", float(self.slope))

    @classmethod
    def from_expressions(
        cls,
        grid: Grid,
        S: ExpressionLike,
        T: ExpressionLike,
        t: float = 0.0,
        winding: int = 0,
    ) -> "STField":
        try:
            slope, remainder = split_winding(FieldHandle.coerce(S), grid, t, "initial S")
        except GaugeFamilyError as exc:
            raise exc.with_path("initial.S")
        try:
            T_slope, T_values = split_winding(FieldHandle.coerce(T), grid, t, "initial T")
            if abs(T_slope) * grid.length > settings.winding_tolerance * (1 + np.max(np.abs(T_values))):
                raise WindingError(f"initial T must be periodic on the grid, it winds with slope {T_slope:.3e}")
        except GaugeFamilyError as exc:
            raise exc.with_path("initial.T")
        return cls(grid, remainder, T_values, slope + 2 * np.pi * winding / grid.length)

    @property
    def S_full(self) -> np.ndarray:
        return self.slope * self.grid.x + self.S

    @property
    def rho(self) -> np.ndarray:
        return np.exp(2 * self.T)

    @property
    def R(self) -> np.ndarray:
        return np.exp(self.T)

    @cached_property
    def gradS(self) -> np.ndarray:
        return self.slope + self.grid.derivative(self.S)

    @cached_property
    def gradT(self) -> np.ndarray:
        return self.grid.derivative(self.T)

    @cached_property
    def lapS(self) -> np.ndarray:
        return self.grid.laplacian(self.S)

    @cached_property
    def lapT(self) -> np.ndarray:
        return self.grid.laplacian(self.T)


@dataclass(frozen=True, eq=False)
class WaveFunction:
    grid: Grid
    psi: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.psi, dtype=complex)
        if values.shape != (self.grid.points,):
            raise GridError(f"psi has shape {values.shape}, grid has {self.grid.points} points")
        object.__setattr__(self, "psi", values)


def wavefunction_to_st(w: WaveFunction) -> STField:
    amplitude = np.abs(w.psi)
    peak = float(np.max(amplitude))
    if peak == 0.0 or float(np.min(amplitude)) <= settings.node_threshold * peak:
        raise NodeError(f"wave function has a node (min |psi| = {np.min(amplitude):.3e}, max = {peak:.3e})")
    grid = w.grid
    phase = np.unwrap(np.angle(w.psi))
    seam = float(np.angle(w.psi[0] / w.psi[-1]))
    winding = int(round((phase[-1] - phase[0] + seam) / (2 * np.pi)))
    slope = 2 * np.pi * winding / grid.length
    remainder = phase - slope * grid.x
    remainder -= 2 * np.pi * np.round(np.mean(remainder) / (2 * np.pi))
    return STField(grid, remainder, np.log(amplitude), slope)


def st_to_wavefunction(f: STField) -> WaveFunction:
    return WaveFunction(f.grid, np.exp(f.T + 1j * f.S_full))


# ============================================================================
# Homogeneous functionals
# ============================================================================


def functionals_R(f: STField) -> tuple[np.ndarray, ...]:
    dS, dT = f.gradS, f.gradT
    return (
        f.lapS + 2 * dS * dT,
        2 * f.lapT + 4 * dT**2,
        dS**2,
        2 * dS * dT,
        4 * dT**2,
    )


def functionals_R_analytic(S: ExpressionLike, T: ExpressionLike, dim: int = 1) -> tuple[Expression, ...]:
    S, T = Expression.of(S), Expression.of(T)
    gS, gT = gradient(S, dim), gradient(T, dim)
    return (
        laplacian(S, dim) + 2 * dot(gS, gT),
        2 * laplacian(T, dim) + 4 * dot(gT, gT),
        dot(gS, gS),
        2 * dot(gS, gT),
        4 * dot(gT, gT),
    )


# ============================================================================
# Right-hand side
# ============================================================================


class Rates(NamedTuple):
    dS: np.ndarray  # rate of the periodic remainder of S
    dT: np.ndarray
    dslope: float


@dataclass(frozen=True)
class _Sampled:
    a: np.ndarray
    b: np.ndarray
    u0: np.ndarray
    v0: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    v1: np.ndarray
    v2: np.ndarray


def _sample(ab: ABCoefficients, x: np.ndarray, t: float, a=None, b=None) -> _Sampled:
    if a is None:
        a = np.array([s.value(t) for s in ab.a])
        b = np.array([s.value(t) for s in ab.b])
    return _Sampled(
        a=a,
        b=b,
        u0=ab.u0.value(x, t),
        v0=ab.v0.value(x, t),
        # Only the x-component couples to 1D gradients.
        u1=ab.u1[0].value(x, t),
        u2=ab.u2[0].value(x, t),
        v1=ab.v1[0].value(x, t),
        v2=ab.v2[0].value(x, t),
    )


def rhs(ab: ABCoefficients, f: STField, t: float) -> Rates:
    grid = f.grid
    c = _sample(ab, grid.x, t)
    dS, dT, lapS, lapT = f.gradS, f.gradT, f.lapS, f.lapT
    S, T = f.S_full, f.T
    a, b = c.a, c.b

    rate_S = (
        a[0] * lapS + a[1] * lapT + a[2] * dS**2 + a[3] * dS * dT + a[4] * dT**2
        + a[5] * S + a[6] * T + c.u0 + c.u1 * dS + c.u2 * dT
    )
    rate_T = (
        b[0] * lapS + b[1] * lapT + b[2] * dS**2 + b[3] * dS * dT + b[4] * dT**2
        + b[5] * S + b[6] * T + c.v0 + c.v1 * dS + c.v2 * dT
    )

    # Jump of each rate across the seam x0 -> x0 + L: S gains slope·L, the
    # periodic gradients take their x0 values at both ends.
    ends = _sample(ab, np.array([grid.origin, grid.origin + grid.length]), t, a, b)
    kL = f.slope * grid.length

    def jump(v: np.ndarray) -> float:
        return float(v[1] - v[0])

    jump_S = a[5] * kL + jump(ends.u0) + jump(ends.u1) * dS[0] + jump(ends.u2) * dT[0]
    jump_T = b[5] * kL + jump(ends.v0) + jump(ends.v1) * dS[0] + jump(ends.v2) * dT[0]

    scale = 1.0 + float(np.max(np.abs(rate_S)) + np.max(np.abs(rate_T)))
    if abs(jump_T) > settings.winding_tolerance * scale:
        raise WindingError(
            f"T would acquire a winding at t={t:g} (b6*k_S*L plus v-field jumps = {jump_T:.3e}); "
            "T must stay periodic"
        )

    dslope = float(jump_S) / grid.length
    return Rates(rate_S - dslope * grid.x, rate_T, dslope)


def linear_wave_rhs(p: PhysicalParams, w: WaveFunction, t: float) -> np.ndarray:
    """∂ψ/∂t = −(i/ħ)[−(ħ²/2m)∇²ψ + (V + eΦ)ψ] on the grid (vector potential not supported)."""
    grid = w.grid
    potential = p.V.value(grid.x, t) + p.e * p.Phi.value(grid.x, t)
    kinetic = -(p.hbar**2 / (2 * p.m)) * (grid.laplacian(w.psi.real) + 1j * grid.laplacian(w.psi.imag))
    return -1j / p.hbar * (kinetic + potential * w.psi)
