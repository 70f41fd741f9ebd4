import numpy as np
import pytest

from src.gauge.equation_model import (
    ABCoefficients,
    NuMuCoefficients,
    PhysicalParams,
    STField,
    linear_schroedinger_ab,
    numu_from_ab,
)
from src.gauge.errors import DegenerateEquationError, PreconditionError
from src.gauge.expr import evaluate_vector, pad, parse
from src.gauge.gauge_group import GaugeElement, apply_to_st
from src.gauge.gauge_transform import (
    random_ab,
    random_homogeneous_element,
    random_numu_family,
    random_subgroup_element,
    sample_points,
    transform_ab,
    transform_numu_subgroup,
)
from src.gauge.invariants import (
    curl_relation_residual,
    full_group_invariants,
    gauge_invariants,
    invariant_combination,
    invariant_potentials,
    maxwell_residual,
    tau_beta,
)

MAGNETIC = NuMuCoefficients(nu1="-1/2", mu3="1/2", alpha2="2/5", Acal=["sin(t)*cos(y)"])


def full_family() -> NuMuCoefficients:
    return NuMuCoefficients(
        nu1="-1/2",
        nu2="1/20",
        mu1="1/10",
        mu2="-1/4",
        mu3="1/2",
        mu4="1/5",
        mu5="1/8",
        alpha1="1/10",
        alpha2="2/5",
        U="cos(x)",
        Acal=["3/10*sin(x - t)"],
        A1=["1/5*cos(x)"],
        A2=["1/10*sin(2*x)"],
    )


def test_linear_schroedinger_invariants(linear_ab, linear_numu):
    inv = gauge_invariants(linear_ab, linear_numu, 0.0)
    assert inv.tau == pytest.approx([0.0, 0.125, -1.0, 0.0, -0.0625])
    assert inv.beta == pytest.approx([0.0, 0.0])
    assert inv.I1 == pytest.approx(0.0)
    assert inv.I2 == pytest.approx(0.25)
    assert inv.quantum_class
    assert inv.to_json()["quantum_class"] is True


def test_heat_equation_has_no_tau_beta():
    ab = ABCoefficients(b2=1)
    inv = gauge_invariants(ab, numu_from_ab(ab), 0.0)
    assert inv.tau is None and inv.beta is None
    assert inv.I1 == pytest.approx(1.0)
    assert inv.I2 == pytest.approx(0.0)
    assert not inv.quantum_class


def test_degenerate_equation_is_an_error():
    with pytest.raises(DegenerateEquationError) as info:
        tau_beta(NuMuCoefficients(nu2="1/2"), 0.0)
    assert info.value.path == "equation.nu1"
    with pytest.raises(DegenerateEquationError):
        tau_beta(NuMuCoefficients(nu1="t - 1/2"), 0.5)


def test_doebner_goldin_and_kostin_values(dg_numu, kostin_numu):
    tau, _ = tau_beta(dg_numu, 0.0)
    assert tau[0] == pytest.approx(0.05)
    assert tau[4] == pytest.approx(-0.065)
    _, beta = tau_beta(kostin_numu, 0.0)
    assert beta == pytest.approx([0.0, 0.4])


def test_tau_beta_are_subgroup_invariants(rng):
    for _ in range(10):
        nm = random_numu_family(rng)
        moved = transform_numu_subgroup(nm, random_subgroup_element(rng))
        for t in (0.0, 0.5, 1.0):
            tau, beta = tau_beta(nm, t)
            tau_moved, beta_moved = tau_beta(moved, t)
            assert tau_moved == pytest.approx(tau, rel=1e-10, abs=1e-12)
            assert beta_moved == pytest.approx(beta, rel=1e-10, abs=1e-12)


def test_finite_difference_beta_matches_the_analytic_rates(rng):
    nm = random_numu_family(rng)
    _, analytic = tau_beta(nm, 0.3)
    _, numeric = tau_beta(nm, 0.3, finite_difference=True)
    assert numeric == pytest.approx(analytic, abs=1e-6)
    assert gauge_invariants(ab=random_ab(rng), nm=nm, t=0.3, finite_difference=True).beta_method == "finite-difference"


def test_maxwell_relation_holds(rng):
    points = sample_points(rng, 50, dim=2)
    assert maxwell_residual(MAGNETIC, points) < 1e-10


def test_maxwell_relation_needs_the_friction_term(rng):
    points = sample_points(rng, 50, dim=2)
    x, y, z, t = points.T
    expected = float(np.max(np.abs(0.4 * np.sin(t) * np.sin(y))))
    assert maxwell_residual(MAGNETIC, points, include_friction=False) == pytest.approx(expected, abs=1e-10)


def test_maxwell_relation_with_physical_potentials(rng):
    points = sample_points(rng, 50, dim=2)
    params = PhysicalParams(c=2.0, Phi="x*y*t", Avec=["sin(t)*cos(y)"])
    assert maxwell_residual(MAGNETIC, points, params=params) < 1e-10
    x, y, z, t = points.T
    expected = float(np.max(np.abs(0.2 * np.sin(t) * np.sin(y))))
    assert maxwell_residual(MAGNETIC, points, params=params, include_friction=False) == pytest.approx(expected, abs=1e-10)


def test_maxwell_rejects_malformed_points():
    with pytest.raises(PreconditionError):
        maxwell_residual(MAGNETIC, np.zeros((3, 2)))


def test_curl_relation(rng):
    points = sample_points(rng, 40, dim=3)
    assert curl_relation_residual(MAGNETIC, "x^2*y + sin(x*z)", "cos(x*y)", points) < 1e-10


def test_electric_field_is_invariant_under_phase_shifts(rng):
    nm = full_family()
    g = GaugeElement.subgroup(theta="3/10*sin(x + t)")
    moved = transform_numu_subgroup(nm, g)
    x, y, z, t = sample_points(rng, 40).T

    def field(coeffs, omit=None):
        return evaluate_vector(pad(invariant_potentials(coeffs, omit).calE), x, y, z, t)

    assert np.max(np.abs(field(moved) - field(nm))) < 1e-10
    assert np.max(np.abs(field(moved, omit=2) - field(nm, omit=2))) > 1e-3


def test_invariant_potentials_options():
    fields = invariant_potentials(full_family())
    assert fields.A2gi is not None
    assert all(c.is_zero for c in pad(fields.calB))
    assert invariant_potentials(NuMuCoefficients(nu1="-1/2")).A2gi is None
    with pytest.raises(PreconditionError):
        invariant_potentials(full_family(), omit_term=6)


def test_combination_is_invariant_under_constant_mixing(rng, grid):
    k = 2 * np.pi / grid.length
    f = STField(grid, 0.3 * np.sin(k * grid.x), 0.2 * np.cos(k * grid.x))
    for _ in range(5):
        ab = random_ab(rng)
        g = random_homogeneous_element(rng, time_dependent=False)
        moved = transform_ab(ab, g)
        for t in (0.0, 0.7):
            before = invariant_combination(ab, f, t, sigma=0.5, tau=-1.5)
            after = invariant_combination(moved, apply_to_st(g, f, t), t, sigma=0.5, tau=-1.5)
            assert np.max(np.abs(after.value - before.value)) < 1e-10
            (Lam, gam), (lam, kap) = g.matrix_at(t)
            assert np.max(np.abs(after.L1 - (Lam * before.L1 + gam * before.L2))) < 1e-10
            assert np.max(np.abs(after.L2 - (lam * before.L1 + kap * before.L2))) < 1e-10
            assert before.extended is not None


CHARGED = PhysicalParams(hbar=1.3, m=0.7, e=0.9, c=2.0, V="x^2*cos(t)", Phi="sin(x*y)", Avec=["-3/2*y", "3/2*x"])


def test_linear_invariant_potential_is_the_scalar_potential(rng):
    fields = invariant_potentials(numu_from_ab(linear_schroedinger_ab(CHARGED)))
    x, y, z, t = sample_points(rng, 40, dim=2).T
    p = CHARGED
    expected = (x**2 * np.cos(t) + p.e * np.sin(x * y)) / (2 * p.m)
    assert np.max(np.abs(fields.Uhat.value(x, t, y) - expected)) < 1e-10


def test_linear_fields_are_the_physical_fields(rng):
    fields = invariant_potentials(numu_from_ab(linear_schroedinger_ab(CHARGED)))
    x, y, z, t = sample_points(rng, 40, dim=2).T
    p = CHARGED
    B = evaluate_vector(pad(fields.calB), x, y, z, t)
    assert np.max(np.abs(B[:2])) < 1e-12
    assert np.max(np.abs(B[2] - p.e / (2 * p.m * p.c) * 3.0)) < 1e-12

    E = evaluate_vector(pad(fields.calE), x, y, z, t)
    expected = np.stack(
        [
            -(2 * x * np.cos(t) + p.e * y * np.cos(x * y)) / (2 * p.m),
            -p.e * x * np.cos(x * y) / (2 * p.m),
            np.zeros_like(x),
        ]
    )
    assert np.max(np.abs(E - expected)) < 1e-10


def test_invariant_potential_shifts_by_the_phase_rate(rng):
    nm = full_family()
    theta = "3/10*sin(x - t) + x*t/5"
    moved = transform_numu_subgroup(nm, GaugeElement.subgroup(Lambda="exp(3*t/10)", theta=theta))
    x, y, z, t = sample_points(rng, 40).T
    shift = invariant_potentials(moved).Uhat.value(x, t) - invariant_potentials(nm).Uhat.value(x, t)

    nu1, alpha2, Lam, rate = -0.5, 0.4, np.exp(0.3 * t), 0.3
    th = parse(theta).evaluate(x=x, t=t)
    th_t = -0.3 * np.cos(x - t) + x / 5
    expected = nu1 / Lam * (th_t + alpha2 * th) - nu1 * rate * th / Lam
    assert np.max(np.abs(shift - expected)) < 1e-10


@pytest.mark.parametrize("omit", [1, 2, 3, 4, 5])
def test_every_term_of_the_invariant_potential_is_needed(rng, omit):
    nm = full_family()
    moved = transform_numu_subgroup(nm, GaugeElement.subgroup(theta="3/10*sin(x + t)"))
    x, y, z, t = sample_points(rng, 40).T

    def field(coeffs):
        return evaluate_vector(pad(invariant_potentials(coeffs, omit).calE), x, y, z, t)

    assert np.max(np.abs(field(moved) - field(nm))) > 1e-3


def test_combination_moves_with_the_phase_shift(grid, linear_ab):
    k = 2 * np.pi / grid.length
    f = STField(grid, 0.3 * np.sin(k * grid.x), 0.2 * np.cos(k * grid.x))
    g = GaugeElement.subgroup(theta="3/10*sin(pi*x/20)")
    moved = transform_ab(linear_ab, g)
    before = invariant_combination(linear_ab, f, 0.0).value
    after = invariant_combination(moved, apply_to_st(g, f, 0.0), 0.0).value
    d1 = full_group_invariants(linear_ab, 0.0).d1
    assert d1 == pytest.approx(-2.0)
    assert np.max(np.abs(after - before)) > 0.5
    assert np.max(np.abs(after - before - d1 * 0.3 * np.sin(k * grid.x))) < 1e-10


@pytest.mark.slow
def test_tau_beta_are_invariant_over_many_draws(rng):
    elements = [GaugeElement.subgroup(Lambda="exp(3*t/10)", gamma="t/5", theta="sin(x*t)")]
    elements += [random_subgroup_element(rng) for _ in range(199)]
    for g in elements:
        nm = random_numu_family(rng)
        moved = transform_numu_subgroup(nm, g)
        t = float(rng.uniform(0.0, 1.0))
        tau, beta = tau_beta(nm, t)
        tau_moved, beta_moved = tau_beta(moved, t)
        assert tau_moved == pytest.approx(tau, rel=1e-10, abs=1e-12)
        assert beta_moved == pytest.approx(beta, rel=1e-10, abs=1e-12)

