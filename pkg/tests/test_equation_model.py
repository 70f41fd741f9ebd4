import logging

import numpy as np
import pytest

from src.gauge.equation_model import (
    ABCoefficients,
    Grid,
    NuMuCoefficients,
    PhysicalParams,
    STField,
    WaveFunction,
    ab_from_numu,
    functionals_R,
    functionals_R_analytic,
    in_restricted_family,
    linear_schroedinger_ab,
    linear_wave_rhs,
    numu_from_ab,
    rhs,
    st_to_wavefunction,
    wavefunction_to_st,
)
from src.gauge.errors import GridError, NodeError, WindingError
from src.gauge.gauge_transform import random_ab, sample_points, slot_discrepancies


@pytest.mark.parametrize("draws", [100, pytest.param(1000, marks=pytest.mark.slow)])
def test_round_trip_between_parameterizations(rng, draws):
    points = sample_points(rng, 20)
    for _ in range(draws):
        ab = random_ab(rng)
        back = ab_from_numu(numu_from_ab(ab))
        assert max(slot_discrepancies(back, ab, points).values()) < 1e-14


def test_linear_schroedinger_slots(linear_ab):
    expected = {"a2": 0.5, "a3": -0.5, "a5": 0.5, "b1": -0.5, "b4": -1.0}
    for name, slot in linear_ab.signals().items():
        assert slot.value(0.0) == pytest.approx(expected.get(name, 0.0)), name
    assert linear_ab.u0.is_zero and linear_ab.v0.is_zero


def test_linear_schroedinger_with_potentials():
    params = PhysicalParams(hbar=1.0, m=2.0, e=1.0, c=1.0, V="x^2", Avec=["y"])
    ab = linear_schroedinger_ab(params)
    assert ab.a2.value(0.0) == pytest.approx(0.25)
    assert ab.u0.value(1.0, y=2.0) == pytest.approx(-1.0 - 4.0 / 4)
    assert ab.u1[0].value(0.0, y=3.0) == pytest.approx(1.5)


def test_doebner_goldin_slots(dg_numu):
    expected = {"nu1": -0.5, "nu2": 0.05, "mu2": -0.25, "mu3": 0.5, "mu5": 0.125}
    for name, slot in dg_numu.signals().items():
        assert slot.value(0.0) == pytest.approx(expected.get(name, 0.0)), name
    ab = ab_from_numu(dg_numu)
    assert ab.b2.value(0.0) == pytest.approx(0.1)
    assert ab.b5.value(0.0) == pytest.approx(0.2)
    assert in_restricted_family(dg_numu)


def test_restricted_family_detects_imaginary_terms(dg_numu):
    data = {name: getattr(dg_numu, name) for name in NuMuCoefficients.model_fields}
    assert not in_restricted_family(NuMuCoefficients(**{**data, "nu3": "1/2"}))
    assert not in_restricted_family(NuMuCoefficients(**{**data, "Dcal": ["x"]}))


def test_vector_slots_share_a_dimension():
    ab = ABCoefficients(u1=["x", "y"])
    assert ab.dim == 2
    assert len(ab.v2) == 2 and ab.v2[1].is_zero
    assert ab.with_dim(3).dim == 3


def test_grid_requires_power_of_two():
    with pytest.raises(GridError) as info:
        Grid(10.0, 100)
    assert info.value.path == "grid.N"
    with pytest.raises(GridError):
        Grid(10.0, 16)
    with pytest.raises(GridError):
        Grid(-1.0, 64)


def test_spectral_derivatives_are_exact_for_band_limited_data():
    grid = Grid(2 * np.pi, 64)
    f = np.sin(3 * grid.x) + np.cos(5 * grid.x)
    assert np.max(np.abs(grid.derivative(f) - (3 * np.cos(3 * grid.x) - 5 * np.sin(5 * grid.x)))) < 1e-11
    assert np.max(np.abs(grid.laplacian(f) + 9 * np.sin(3 * grid.x) + 25 * np.cos(5 * grid.x))) < 1e-10
    assert grid.integrate(np.ones(64)) == pytest.approx(2 * np.pi)


def test_expansion_identity():
    """Laplacian of psi over psi equals i*R1 + R2/2 - R3 - R5/4."""
    grid = Grid(40.0, 128)
    k = 2 * np.pi / grid.length
    f = STField(grid, 0.4 * np.sin(k * grid.x), 0.3 * np.cos(2 * k * grid.x), slope=3 * k)
    psi = st_to_wavefunction(f).psi
    lap = grid.laplacian(psi.real) + 1j * grid.laplacian(psi.imag)
    R1, R2, R3, R4, R5 = functionals_R(f)
    assert np.max(np.abs(lap / psi - (1j * R1 + R2 / 2 - R3 - R5 / 4))) < 1e-9


def test_analytic_functionals():
    R1, R2, R3, R4, R5 = functionals_R_analytic("x^2", "sin(x)")
    assert R1.evaluate(x=0.0) == pytest.approx(2.0)
    assert R3.evaluate(x=1.0) == pytest.approx(4.0)
    assert R4.evaluate(x=0.0) == pytest.approx(0.0)
    assert R5.evaluate(x=0.0) == pytest.approx(4.0)


def test_rhs_reproduces_the_linear_wave_equation():
    grid = Grid(40.0, 64)
    k = 2 * np.pi / grid.length
    params = PhysicalParams(hbar=1.0, m=1.0, V="1/2*cos(pi*x/20)")
    ab = linear_schroedinger_ab(params)
    f = STField(grid, 0.5 * np.sin(k * grid.x), 0.2 * np.cos(k * grid.x), slope=2 * k)
    rates = rhs(ab, f, 0.0)
    w = st_to_wavefunction(f)
    expected = linear_wave_rhs(params, w, 0.0) / w.psi
    full_rate_S = rates.dS + rates.dslope * grid.x
    assert np.max(np.abs((rates.dT + 1j * full_rate_S) - expected)) < 1e-9


def test_rhs_keeps_the_winding_fixed(linear_ab):
    grid = Grid(40.0, 64)
    f = STField(grid, np.zeros(64), np.zeros(64), slope=2 * np.pi / 40.0)
    assert rhs(linear_ab, f, 0.0).dslope == pytest.approx(0.0)
    with pytest.raises(WindingError):
        rhs(ABCoefficients(b6=1), f, 0.0)


def test_initial_data_from_expressions():
    grid = Grid(40.0, 64)
    k = 2 * np.pi / grid.length
    f = STField.from_expressions(grid, f"{3 * k!r}*x + sin(pi*x/20)", "0", winding=1)
    assert f.slope == pytest.approx(4 * k)
    assert np.max(np.abs(f.S - np.sin(np.pi * grid.x / 20))) < 1e-9
    with pytest.raises(WindingError) as info:
        STField.from_expressions(grid, "0", "x")
    assert info.value.path == "initial.T"


def test_rhs_with_a_localized_potential():
    grid = Grid(40.0, 128)
    k = 2 * np.pi / grid.length
    params = PhysicalParams(hbar=1.0, m=1.0, V="exp(-x^2)")
    ab = linear_schroedinger_ab(params)
    f = STField(grid, 0.5 * np.sin(k * grid.x), 0.2 * np.cos(k * grid.x), slope=2 * k)
    rates = rhs(ab, f, 0.0)
    assert rates.dslope == pytest.approx(0.0, abs=1e-12)
    w = st_to_wavefunction(f)
    expected = linear_wave_rhs(params, w, 0.0) / w.psi
    assert np.max(np.abs((rates.dT + 1j * (rates.dS + rates.dslope * grid.x)) - expected)) < 1e-9


def test_rhs_ignores_constant_shifts_without_the_linear_terms():
    grid = Grid(40.0, 64)
    k = 2 * np.pi / grid.length
    ab = ABCoefficients(
        a1="1/5", a2="1/2", a3="-1/2", a4="1/3", a5="1/2",
        b1="-1/2", b2="1/10", b3="1/4", b4="-1", b5="1/5",
        u0="cos(pi*x/20)", v0="1/10*sin(pi*x/20 + t)",
        u1=["1/5*sin(pi*x/10)"], v1=["1/10*cos(pi*x/20)"], v2=["1/3"],
    )
    f = STField(grid, 0.3 * np.sin(k * grid.x), 0.2 * np.cos(k * grid.x), slope=k)
    shifted = STField(grid, f.S + 0.7, f.T - 0.4, slope=k)
    for t in (0.0, 0.6):
        before, after = rhs(ab, f, t), rhs(ab, shifted, t)
        assert np.max(np.abs(after.dS - before.dS)) < 1e-12
        assert np.max(np.abs(after.dT - before.dT)) < 1e-12
        assert after.dslope == pytest.approx(before.dslope, abs=1e-12)


def test_initial_data_with_a_localized_bump():
    grid = Grid(40.0, 128)
    f = STField.from_expressions(grid, "0", "ln(1 + 0.5*exp(-x^2/4))")
    assert f.slope == 0.0
    assert np.max(np.abs(f.T - np.log(1 + 0.5 * np.exp(-(grid.x**2) / 4)))) < 1e-12
    moved = STField.from_expressions(grid, "0.3*exp(-x^2)", "0")
    assert moved.slope == 0.0
    assert np.max(np.abs(moved.S - 0.3 * np.exp(-(grid.x**2)))) < 1e-12


def test_initial_data_with_a_kink_at_the_seam():
    grid = Grid(40.0, 128)
    with pytest.raises(WindingError) as info:
        STField.from_expressions(grid, "0", "-x^2/4")
    assert info.value.path == "initial.T"
    with pytest.raises(WindingError) as info:
        STField.from_expressions(grid, "x^2", "0")
    assert info.value.path == "initial.S"


def test_wavefunction_round_trip_with_winding():
    grid = Grid(40.0, 128)
    k = 2 * np.pi / grid.length
    psi = np.exp(0.2 * np.cos(k * grid.x) + 1j * (2 * k * grid.x + 0.3 * np.sin(k * grid.x)))
    f = wavefunction_to_st(WaveFunction(grid, psi))
    assert f.slope == pytest.approx(2 * k)
    assert np.max(np.abs(st_to_wavefunction(f).psi - psi)) < 1e-12


def test_nodes_are_rejected():
    grid = Grid(40.0, 64)
    with pytest.raises(NodeError):
        wavefunction_to_st(WaveFunction(grid, np.cos(2 * np.pi * grid.x / 40.0)))


def test_seam_split_is_logged(caplog):
    grid = Grid(40.0, 64)
    with caplog.at_level(logging.DEBUG, logger="src.gauge.equation_model"):
        STField.from_expressions(grid, "0.3*x", "0")
    assert "initial S: seam slope 0.3" in caplog.text
