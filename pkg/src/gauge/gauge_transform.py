"""
Coefficient transformation laws.

``transform_ab`` is an exact change of variables: the unprimed (S, T) and all
their derivatives are written through A⁻¹((S', T') − (θ, φ)), the canonical
right-hand sides are pushed through d/dt of the gauge map, and the result is
read back on the fixed slot basis by differentiating with respect to the
primed symbols. Everything else in this module is either a closed form of that
engine (``closed_form_coefficients``, ``transform_numu_subgroup``) or the
printed matrix laws kept for comparison (``homogeneous_matrix_law``).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import sympy
from pydantic import BaseModel

from .config import settings
from .equation_model import (
    ABCoefficients,
    CoefficientSet,
    NuMuCoefficients,
    ab_from_numu,
    in_restricted_family,
)
from .errors import EngineError, FamilyError, NotSubgroupError, PreconditionError
from .expr import SPATIAL, SYMBOLS, T, Expression, combine, divergence, dot, gradient, laplacian
from .gauge_group import GaugeElement, is_subgroup

logger = logging.getLogger(__name__)

A_SLOTS = ("a1", "a2", "a3", "a4", "a5", "a6", "a7")
B_SLOTS = ("b1", "b2", "b3", "b4", "b5", "b6", "b7")


# ============================================================================
# Substitution engine
# ============================================================================


class _Primed(NamedTuple):
    S: sympy.Dummy
    T: sympy.Dummy
    lapS: sympy.Dummy
    lapT: sympy.Dummy
    gS: tuple[sympy.Dummy, ...]
    gT: tuple[sympy.Dummy, ...]

    @property
    def all(self) -> tuple[sympy.Dummy, ...]:
        return (self.S, self.T, self.lapS, self.lapT, *self.gS, *self.gT)


def _primed(dim: int) -> _Primed:
    return _Primed(
        sympy.Dummy("S'"),
        sympy.Dummy("T'"),
        sympy.Dummy("lapS'"),
        sympy.Dummy("lapT'"),
        tuple(sympy.Dummy(f"dS'_{v}") for v in SPATIAL[:dim]),
        tuple(sympy.Dummy(f"dT'_{v}") for v in SPATIAL[:dim]),
    )


def _canonical_rate(coeffs, u0, u1, u2, S, Tv, lapS, lapT, gS, gT) -> sympy.Expr:
    c1, c2, c3, c4, c5, c6, c7 = coeffs
    return (
        c1 * lapS
        + c2 * lapT
        + c3 * sum(s**2 for s in gS)
        + c4 * sum(s * q for s, q in zip(gS, gT))
        + c5 * sum(q**2 for q in gT)
        + c6 * S
        + c7 * Tv
        + u0
        + sum(w * s for w, s in zip(u1, gS))
        + sum(w * q for w, q in zip(u2, gT))
    )


def _collect(rate: sympy.Expr, P: _Primed, which: str):
    """Read a rate back on the canonical basis; anything outside it aborts."""
    symbols = P.all
    zero = dict.fromkeys(symbols, sympy.Integer(0))
    first = {s: sympy.diff(rate, s) for s in symbols}

    allowed = set()
    for gs, gt in zip(P.gS, P.gT):
        allowed |= {(gs, gs), (gs, gt), (gt, gt)}

    second = {}
    for i, a in enumerate(symbols):
        for b in symbols[i:]:
            value = sympy.diff(first[a], b)
            if (a, b) in allowed:
                second[(a, b)] = value.xreplace(zero)
            elif value != 0 and sympy.expand(value) != 0:
                raise EngineError(f"{which} equation produced a {a}*{b} term outside the canonical basis")

    quadratic = []
    for gs, gt in zip(P.gS, P.gT):
        quadratic.append((second[(gs, gs)] / 2, second[(gs, gt)], second[(gt, gt)] / 2))
    for axis, terms in enumerate(quadratic[1:], start=1):
        for reference, value in zip(quadratic[0], terms):
            if value != reference and sympy.expand(value - reference) != 0:
                raise EngineError(f"{which} equation is not isotropic along axis {SPATIAL[axis]}")

    scalars = (
        first[P.lapS].xreplace(zero),
        first[P.lapT].xreplace(zero),
        *quadratic[0],
        first[P.S].xreplace(zero),
        first[P.T].xreplace(zero),
    )
    for name, value in zip(A_SLOTS if which == "S" else B_SLOTS, scalars):
        stray = value.free_symbols - {T}
        if stray:
            raise EngineError(f"scale coefficient {name}' depends on {sorted(map(str, stray))}, expected t only")

    u0 = rate.xreplace(zero)
    u1 = [first[s].xreplace(zero) for s in P.gS]
    u2 = [first[q].xreplace(zero) for q in P.gT]
    return scalars, u0, u1, u2


def transform_ab(ab: ABCoefficients, g: GaugeElement, times: Optional[Sequence[float]] = None) -> ABCoefficients:
    """Coefficients of the equation obeyed by (S', T') = A(S, T) + (θ, φ)."""
    g.require_invertible(times)
    dim = max(ab.dim, g.theta.dimension, g.phi.dimension)
    if dim != ab.dim:
        ab = ab.with_dim(dim)
    P = _primed(dim)

    (Lam, gam), (lam, kap) = [[e.tree for e in row] for row in g.matrix]
    theta, phi = g.theta.tree, g.phi.tree
    delta = kap * Lam - lam * gam
    p, q, r, s = kap / delta, -gam / delta, -lam / delta, Lam / delta

    def back(new_S, new_T, shift_S, shift_T):
        return (
            p * (new_S - shift_S) + q * (new_T - shift_T),
            r * (new_S - shift_S) + s * (new_T - shift_T),
        )

    axes = [SYMBOLS[v] for v in SPATIAL[:dim]]
    S, Tv = back(P.S, P.T, theta, phi)
    lapS, lapT = back(
        P.lapS,
        P.lapT,
        sum((sympy.diff(theta, a, 2) for a in axes), sympy.Integer(0)),
        sum((sympy.diff(phi, a, 2) for a in axes), sympy.Integer(0)),
    )
    grads = [back(P.gS[i], P.gT[i], sympy.diff(theta, a), sympy.diff(phi, a)) for i, a in enumerate(axes)]
    gS = [pair[0] for pair in grads]
    gT = [pair[1] for pair in grads]

    fields = (S, Tv, lapS, lapT, gS, gT)
    rate_S = _canonical_rate(
        [e.tree for e in ab.a], ab.u0.tree, [c.tree for c in ab.u1], [c.tree for c in ab.u2], *fields
    )
    rate_T = _canonical_rate(
        [e.tree for e in ab.b], ab.v0.tree, [c.tree for c in ab.v1], [c.tree for c in ab.v2], *fields
    )

    new_S = sympy.diff(Lam, T) * S + sympy.diff(gam, T) * Tv + Lam * rate_S + gam * rate_T + sympy.diff(theta, T)
    new_T = sympy.diff(lam, T) * S + sympy.diff(kap, T) * Tv + lam * rate_S + kap * rate_T + sympy.diff(phi, T)

    a, u0, u1, u2 = _collect(new_S, P, "S")
    b, v0, v1, v2 = _collect(new_T, P, "T")
    logger.debug(f"Engine transform with determinant {delta} on {dim} axes")

    data = {name: Expression(v) for name, v in zip(A_SLOTS + B_SLOTS, (*a, *b))}
    vectors = {name: [Expression(c) for c in v] for name, v in zip(("u1", "u2", "v1", "v2"), (u1, u2, v1, v2))}
    return ABCoefficients(**data, **vectors, u0=Expression(u0), v0=Expression(v0))


# ============================================================================
# Closed forms
# ============================================================================


@dataclass(frozen=True)
class ClosedForm:
    """Matrix form of the scalar coefficient law at one instant."""

    C2: np.ndarray
    Qa: np.ndarray
    Qb: np.ndarray
    Clin: np.ndarray

    def slots(self) -> dict[str, float]:
        C2, Qa, Qb, Clin = self.C2, self.Qa, self.Qb, self.Clin
        return {
            "a1": C2[0, 0], "a2": C2[0, 1], "b1": C2[1, 0], "b2": C2[1, 1],
            "a3": Qa[0, 0], "a4": 2 * Qa[0, 1], "a5": Qa[1, 1],
            "b3": Qb[0, 0], "b4": 2 * Qb[0, 1], "b5": Qb[1, 1],
            "a6": Clin[0, 0], "a7": Clin[0, 1], "b6": Clin[1, 0], "b7": Clin[1, 1],
        }


def _quadratic(a3: float, a4: float, a5: float) -> np.ndarray:
    return np.array([[a3, a4 / 2], [a4 / 2, a5]])


def closed_form_coefficients(ab: ABCoefficients, g: GaugeElement, t: float) -> ClosedForm:
    """C₂' = AC₂A⁻¹, Q' = A⁻ᵀ(·)A⁻¹, C_lin' = (AC_lin + Ȧ)A⁻¹ at time t."""
    g.require_invertible([t])
    A = g.matrix_at(t)
    A_dot = np.array([[e.rate.value(t) for e in row] for row in g.matrix])
    A_inv = np.linalg.inv(A)
    a = [s.value(t) for s in ab.a]
    b = [s.value(t) for s in ab.b]

    C2 = np.array([[a[0], a[1]], [b[0], b[1]]])
    Qa, Qb = _quadratic(*a[2:5]), _quadratic(*b[2:5])
    Clin = np.array([[a[5], a[6]], [b[5], b[6]]])
    (Lam, gam), (lam, kap) = A
    return ClosedForm(
        C2=A @ C2 @ A_inv,
        Qa=A_inv.T @ (Lam * Qa + gam * Qb) @ A_inv,
        Qb=A_inv.T @ (lam * Qa + kap * Qb) @ A_inv,
        Clin=(A @ Clin + A_dot) @ A_inv,
    )


def transform_numu_subgroup(nm: NuMuCoefficients, g: GaugeElement) -> NuMuCoefficients:
    """Closed-form law for S' = ΛS + γ ln R + θ on the real-coefficient family."""
    if not is_subgroup(g):
        raise NotSubgroupError("closed-form laws need lambda = 0, kappa = 1, phi = 0", path="gauge")
    if not in_restricted_family(nm):
        raise FamilyError(
            "closed-form laws need nu3 = nu4 = nu5 = delta1 = delta2 = 0, Tcal = 0 and Dcal = 0",
            path="equation",
        )
    g.require_invertible()

    Lam, gam, theta = g.Lambda, g.gamma, g.theta
    dLam, dgam = g.Lambda.rate, g.gamma.rate
    dim = max(nm.dim, theta.dimension)
    if dim != nm.dim:
        nm = nm.with_dim(dim)
    grad = gradient(theta, dim)
    nu1, nu2 = nm.nu1, nm.nu2
    mu1, mu2, mu3, mu4, mu5 = nm.mu
    Acal, A1, A2 = nm.Acal, nm.A1, nm.A2

    return NuMuCoefficients(
        nu1=nu1 / Lam,
        nu2=-gam * nu1 / (2 * Lam) + nu2,
        mu1=-gam * nu1 / Lam + mu1,
        mu2=gam**2 * nu1 / (2 * Lam) - gam * nu2 - gam * mu1 / 2 + Lam * mu2,
        mu3=mu3 / Lam,
        mu4=-gam * mu3 / Lam + mu4,
        mu5=gam**2 * mu3 / (4 * Lam) - gam * mu4 / 2 + Lam * mu5,
        alpha1=Lam * nm.alpha1 - gam * nm.alpha2 / 2 + (dLam * gam / Lam - dgam) / 2,
        alpha2=nm.alpha2 - dLam / Lam,
        Acal=combine((1, Acal), (-nu1 / Lam, grad)),
        A1=combine(
            (Lam, A1),
            (-gam, Acal),
            (-gam / 2, A2),
            (gam * nu1 / Lam - mu1 + gam * mu3 / Lam - mu4, grad),
        ),
        A2=combine((1, A2), (-2 * mu3 / Lam, grad)),
        U=(
            Lam * nm.U
            - theta.diff("t")
            + (dLam / Lam - nm.alpha2) * theta
            + mu3 / Lam * dot(grad, grad)
            + (mu4 - mu3 * gam / Lam) * laplacian(theta, dim)
            + gam / 2 * divergence(A2)
            - dot(A2, grad)
        ),
    )


# ============================================================================
# Printed matrix laws
# ============================================================================


def printed_four(Lam, gam, lam, kap) -> tuple:
    """4×4 block acting on (a1, a2, b1, b2) and on (a6, a7, b6, b7), before the Δ⁻¹ prefactor."""
    return (
        (kap * Lam, -lam * Lam, kap * gam, -lam * gam),
        (-gam * Lam, Lam**2, -gam**2, gam * Lam),
        (kap * lam, lam**2, kap**2, -kap * lam),
        (-lam * gam, lam * Lam, -kap * gam, kap * Lam),
    )


def printed_m(Lam, gam, lam, kap) -> tuple:
    """6×6 block acting on (a3, a4, a5, b3, b4, b5), before the Δ⁻² prefactor."""
    mix = kap * Lam + lam * gam
    return (
        (kap**2 * Lam, -kap * lam * Lam, lam**2 * Lam, kap**2 * gam, -kap * lam * gam, lam**2 * gam),
        (-2 * kap * gam * Lam, Lam * mix, -2 * lam * Lam**2, -2 * kap * gam**2, gam * mix, -2 * lam * gam * Lam),
        (gam**2 * Lam, -gam * Lam**2, Lam**3, gam**3, -(gam**2) * Lam, gam * Lam**2),
        (kap**2 * lam, -kap * lam**2, lam**3, kap**3, -(kap**2) * lam, kap * lam**2),
        (-2 * kap * lam * gam, lam * mix, -2 * lam**2 * Lam, -2 * kap**2 * gam, kap * mix, -2 * kap * lam * Lam),
        (lam * gam**2, -lam * gam * Lam, -lam * Lam**2, kap * gam**2, -kap * gam * Lam, kap * Lam**2),
    )


def printed_affine(g: GaugeElement) -> tuple[Expression, ...]:
    """Affine column of the (a6, a7, b6, b7) law, before the Δ⁻¹ prefactor."""
    Lam, gam, lam, kap = g.Lambda, g.gamma, g.lambda_, g.kappa
    return (
        kap * Lam.rate - lam * gam.rate,
        Lam * gam.rate - gam * Lam.rate,
        kap * lam.rate - lam * kap.rate,
        Lam * kap.rate - gam * lam.rate,
    )


SECTORS = {
    "a1a2b1b2": (("a1", "a2", "b1", "b2"), printed_four, 1),
    "M": (("a3", "a4", "a5", "b3", "b4", "b5"), printed_m, 2),
    "a6a7b6b7": (("a6", "a7", "b6", "b7"), printed_four, 1),
}


def homogeneous_matrix_law(ab: ABCoefficients, g: GaugeElement) -> ABCoefficients:
    """
    Apply the printed matrices literally. External fields follow the
    homogeneous field law, which the printed laws do not cover:
    u₀' = Λu₀ + γv₀, (u₁', u₂') = [Λ(u₁, u₂) + γ(v₁, v₂)]A⁻¹, and likewise
    for the T row with (λ, κ).
    """
    if not (g.theta.is_zero and g.phi.is_zero):
        raise PreconditionError("printed matrix laws are stated for theta = phi = 0", path="gauge")
    g.require_invertible()
    Lam, gam, lam, kap = g.Lambda, g.gamma, g.lambda_, g.kappa
    delta = g.determinant

    out: dict = {}
    for sector, (slots, matrix, power) in SECTORS.items():
        rows = matrix(Lam, gam, lam, kap)
        values = [getattr(ab, n) for n in slots]
        for name, row in zip(slots, rows):
            out[name] = sum((w * v for w, v in zip(row, values)), Expression.of(0)) / delta**power
    for name, shift in zip(SECTORS["a6a7b6b7"][0], printed_affine(g)):
        out[name] = out[name] + shift / delta

    p, q, r, s = kap / delta, -gam / delta, -lam / delta, Lam / delta
    u1, u2, v1, v2 = ab.u1, ab.u2, ab.v1, ab.v2
    return ABCoefficients(
        **out,
        u0=Lam * ab.u0 + gam * ab.v0,
        v0=lam * ab.u0 + kap * ab.v0,
        u1=combine((Lam * p, u1), (Lam * r, u2), (gam * p, v1), (gam * r, v2)),
        u2=combine((Lam * q, u1), (Lam * s, u2), (gam * q, v1), (gam * s, v2)),
        v1=combine((lam * p, u1), (lam * r, u2), (kap * p, v1), (kap * r, v2)),
        v2=combine((lam * q, u1), (lam * s, u2), (kap * q, v1), (kap * s, v2)),
    )


# ============================================================================
# Slot sampling
# ============================================================================


def sample_points(rng: np.random.Generator, n: int, dim: int = 1, span: float = 2.0) -> np.ndarray:
    """Rows (x, y, z, t) with t in [0, 1] and unused axes zero."""
    points = np.zeros((n, 4))
    points[:, :dim] = rng.uniform(-span, span, size=(n, dim))
    points[:, 3] = rng.uniform(0.0, 1.0, size=n)
    return points


def sample_slots(coeffs: CoefficientSet, points: np.ndarray) -> dict[str, np.ndarray]:
    x, y, z, t = np.asarray(points, dtype=float).T
    out = {name: np.atleast_1d(getattr(coeffs, name).evaluate(t=t)) for name in coeffs.SIGNAL_SLOTS}
    for name in coeffs.FIELD_SLOTS:
        out[name] = getattr(coeffs, name).evaluate(x, y, z, t)
    for name in coeffs.VECTOR_SLOTS:
        for i, component in enumerate(getattr(coeffs, name)):
            out[f"{name}[{i}]"] = component.evaluate(x, y, z, t)
    return out


def _relative(value: np.ndarray, reference: np.ndarray) -> float:
    return float(np.max(np.abs(value - reference)) / max(1.0, float(np.max(np.abs(reference)))))


def slot_discrepancies(first: CoefficientSet, second: CoefficientSet, points: np.ndarray) -> dict[str, float]:
    """Per-slot max |first − second|, relative to the size of ``second`` when that exceeds 1."""
    dim = max(first.dim, second.dim)
    lhs = sample_slots(first.with_dim(dim), points)
    rhs = sample_slots(second.with_dim(dim), points)
    return {name: _relative(lhs[name], rhs[name]) for name in rhs}


# ============================================================================
# Random samples for validation
# ============================================================================


def _coef(rng: np.random.Generator, low: float = -1.0, high: float = 1.0) -> float:
    return round(float(rng.uniform(low, high)), 3)


def _away(rng: np.random.Generator, low: float = 0.3, high: float = 2.0) -> float:
    return round(float(rng.choice((-1.0, 1.0)) * rng.uniform(low, high)), 3)


def _n(value: float) -> str:
    return f"({value!r})" if value < 0 else repr(value)


def random_ab(rng: np.random.Generator) -> ABCoefficients:
    scalars = {name: f"{_n(_coef(rng))} + {_n(_coef(rng, -0.3, 0.3))}*t" for name in A_SLOTS + B_SLOTS}
    fields = {name: f"{_n(_coef(rng))}*cos(x + {_n(_coef(rng))}*t)" for name in ("u0", "v0")}
    vectors = {name: [f"{_n(_coef(rng))}*sin(x + {_n(_coef(rng))})"] for name in ("u1", "u2", "v1", "v2")}
    return ABCoefficients(**scalars, **fields, **vectors)


def random_numu_family(rng: np.random.Generator) -> NuMuCoefficients:
    """Random member of the real-coefficient family, ν₁ and μ₃ bounded away from zero."""
    return NuMuCoefficients(
        nu1=f"{_n(_away(rng))}*(1 + {_n(_coef(rng, 0.0, 0.2))}*t)",
        nu2=f"{_n(_coef(rng))} + {_n(_coef(rng, -0.2, 0.2))}*t",
        mu1=_coef(rng),
        mu2=_coef(rng),
        mu3=_away(rng),
        mu4=_coef(rng),
        mu5=_coef(rng),
        alpha1=f"{_n(_coef(rng))} + {_n(_coef(rng, -0.2, 0.2))}*t",
        alpha2=_coef(rng),
        U=f"{_n(_coef(rng))}*cos(x) + {_n(_coef(rng))}*x*t",
        Acal=[f"{_n(_coef(rng))}*sin(x + {_n(_coef(rng))}*t)"],
        A1=[f"{_n(_coef(rng))}*cos(x + {_n(_coef(rng))})"],
        A2=[f"{_n(_coef(rng))}*sin(2*x) + {_n(_coef(rng))}*t"],
    )


def random_subgroup_element(rng: np.random.Generator) -> GaugeElement:
    return GaugeElement.subgroup(
        Lambda=f"{_n(_away(rng))}*exp({_n(_coef(rng, -0.5, 0.5))}*t)",
        gamma=f"{_n(_coef(rng))} + {_n(_coef(rng, -0.5, 0.5))}*t",
        theta=f"{_n(_coef(rng))}*sin(x + {_n(_coef(rng))}*t) + {_n(_coef(rng))}*x",
    )


def random_homogeneous_element(rng: np.random.Generator, time_dependent: bool = True) -> GaugeElement:
    """Entries of magnitude 0.3..2 at t=0, |Δ| ≥ 0.1 on [0, 1]."""
    times = np.linspace(0.0, 1.0, 21)
    while True:
        entries = []
        for _ in range(4):
            value = _away(rng)
            rate = _coef(rng, -0.3, 0.3) if time_dependent else 0.0
            entries.append(f"{_n(value)}*exp({_n(rate)}*t)" if rate else value)
        g = GaugeElement(Lambda=entries[0], gamma=entries[1], lambda_=entries[2], kappa=entries[3])
        if np.min(np.abs(g.determinant.evaluate(t=times))) >= 0.1:
            return g


def random_full_element(rng: np.random.Generator) -> GaugeElement:
    g = random_homogeneous_element(rng)
    return GaugeElement(
        Lambda=g.Lambda,
        gamma=g.gamma,
        lambda_=g.lambda_,
        kappa=g.kappa,
        theta=f"{_n(_coef(rng))}*sin(x + {_n(_coef(rng))}*t) + {_n(_coef(rng))}*x",
        phi=f"{_n(_coef(rng))}*cos(2*x + {_n(_coef(rng))}*t)",
    )


# ============================================================================
# Validation against the printed laws
# ============================================================================

INVARIANT_TOLERANCE = 1e-12


class SectorReport(BaseModel):
    slot_discrepancies: dict[str, float] = {}
    disagreeing_slots: list[str] = []


class TransformReport(BaseModel):
    samples: int
    seed: int
    tolerance: float
    subgroup: SectorReport
    homogeneous: SectorReport
    entry_discrepancies: dict[str, float]
    disagreeing_entries: list[str]
    invariant_checks: dict[str, str]
    printed_field_elements: dict[str, float]

    @property
    def discrepancies(self) -> list[str]:
        """Slots where the closed-form subgroup law and the engine disagree."""
        return self.subgroup.disagreeing_slots


class _SampleResult(NamedTuple):
    subgroup: dict[str, float]
    homogeneous: dict[str, float]
    entries: dict[str, float]
    invariants: dict[str, float]
    fields: dict[str, float]


def _engine_entries(g: GaugeElement) -> dict[str, float]:
    """Engine matrix entries for a constant element, one unit coefficient at a time."""
    (Lam, gam), (lam, kap) = g.matrix_at(0.0)
    delta = kap * Lam - lam * gam
    out = {}
    for sector, (slots, matrix, power) in SECTORS.items():
        printed = matrix(Lam, gam, lam, kap)
        for j, source in enumerate(slots):
            column = transform_ab(ABCoefficients(**{source: 1}), g)
            for i, target in enumerate(slots):
                engine = getattr(column, target).value(0.0)
                expected = printed[i][j] / delta**power
                out[f"{sector}[{target}',{source}]"] = abs(engine - expected) / max(1.0, abs(expected))
    return out


def _affine_entries(g: GaugeElement, points: np.ndarray) -> dict[str, float]:
    t = points[:, 3]
    engine = transform_ab(ABCoefficients(), g)
    delta = g.determinant.evaluate(t=t)
    out = {}
    for name, shift in zip(SECTORS["a6a7b6b7"][0], printed_affine(g)):
        expected = shift.evaluate(t=t) / delta
        out[f"a6a7b6b7[{name}',affine]"] = _relative(getattr(engine, name).evaluate(t=t), expected)
    return out


def _invariant_errors(ab: ABCoefficients, engine: ABCoefficients, points: np.ndarray) -> dict[str, float]:
    t = points[:, 3]

    def pair(c: ABCoefficients):
        a1, a2, b1, b2 = (s.evaluate(t=t) for s in (c.a1, c.a2, c.b1, c.b2))
        return a1 + b2, a1 * b2 - a2 * b1, 1 + np.abs(a1) + np.abs(b2), 1 + np.abs(a1 * b2) + np.abs(a2 * b1)

    I1, I2, _, _ = pair(ab)
    J1, J2, scale1, scale2 = pair(engine)
    return {
        "I1": float(np.max(np.abs(J1 - I1) / scale1)),
        "I2": float(np.max(np.abs(J2 - I2) / scale2)),
    }


def _field_elements(g: GaugeElement, points: np.ndarray) -> dict[str, float]:
    """The two printed full-group field elements: u1' by a3 and u1' by v2."""
    x, y, z, t = points.T
    (Lam, gam), (lam, kap) = [[e.evaluate(t=t) for e in row] for row in g.matrix]
    delta = kap * Lam - lam * gam
    theta_x = g.theta.partials["x"].evaluate(x, y, z, t)
    phi_x = g.phi.partials["x"].evaluate(x, y, z, t)

    by_a3 = transform_ab(ABCoefficients(a3=1), g).u1[0].evaluate(x, y, z, t)
    by_v2 = transform_ab(ABCoefficients(v2=[1]), g).u1[0].evaluate(x, y, z, t)
    return {
        "u1'[a3]": _relative(by_a3, (-2 * kap**2 * Lam * theta_x + 2 * kap * gam * Lam * phi_x) / delta**2),
        "u1'[v2]": _relative(by_v2, -lam * gam / delta),
    }


def _validate_sample(seed: np.random.SeedSequence) -> _SampleResult:
    rng = np.random.default_rng(seed)
    points = sample_points(rng, 50)

    nm = random_numu_family(rng)
    g_sub = random_subgroup_element(rng)
    subgroup = slot_discrepancies(
        ab_from_numu(transform_numu_subgroup(nm, g_sub)), transform_ab(ab_from_numu(nm), g_sub), points
    )

    ab = random_ab(rng)
    g_hom = random_homogeneous_element(rng)
    engine = transform_ab(ab, g_hom)
    homogeneous = slot_discrepancies(homogeneous_matrix_law(ab, g_hom), engine, points)

    entries = _engine_entries(random_homogeneous_element(rng, time_dependent=False))
    entries.update(_affine_entries(g_hom, points))
    return _SampleResult(
        subgroup=subgroup,
        homogeneous=homogeneous,
        entries=entries,
        invariants=_invariant_errors(ab, engine, points),
        fields=_field_elements(random_full_element(rng), points),
    )


def _worst(results: Sequence[dict[str, float]]) -> dict[str, float]:
    out: dict[str, float] = {}
    for result in results:
        for name, value in result.items():
            out[name] = max(out.get(name, 0.0), value)
    return out


def _sector(discrepancies: dict[str, float], tolerance: float) -> SectorReport:
    return SectorReport(
        slot_discrepancies=discrepancies,
        disagreeing_slots=sorted(name for name, value in discrepancies.items() if value > tolerance),
    )


def validate_against_paper(samples: Optional[int] = None, seed: int = 0, workers: Optional[int] = None) -> TransformReport:
    """
    Compare the closed-form and printed laws with the engine over random samples.

    Each sample draws its own generator from ``SeedSequence(seed)``, so the
    report is identical for a given seed whatever the worker count.
    """
    samples = samples or settings.validation_samples
    tolerance = settings.validation_tolerance
    logger.info(f"Validating printed transformation laws over {samples} samples (seed {seed})")

    children = np.random.SeedSequence(seed).spawn(samples)
    with ThreadPoolExecutor(max_workers=workers or settings.max_workers) as pool:
        results = list(pool.map(_validate_sample, children))

    entries = _worst([r.entries for r in results])
    invariants = _worst([r.invariants for r in results])
    report = TransformReport(
        samples=samples,
        seed=seed,
        tolerance=tolerance,
        subgroup=_sector(_worst([r.subgroup for r in results]), tolerance),
        homogeneous=_sector(_worst([r.homogeneous for r in results]), tolerance),
        entry_discrepancies=entries,
        disagreeing_entries=sorted(name for name, value in entries.items() if value > tolerance),
        invariant_checks={
            name: "pass" if value <= INVARIANT_TOLERANCE else "fail" for name, value in invariants.items()
        },
        printed_field_elements=_worst([r.fields for r in results]),
    )
    if report.disagreeing_entries:
        logger.warning(f"Printed matrix entries disagree with the engine: {', '.join(report.disagreeing_entries)}")
    return report
