import numpy as np
import pytest

from src.gauge.equation_model import (
    Grid,
    NuMuCoefficients,
    PhysicalParams,
    STField,
    WaveFunction,
    doebner_goldin_numu,
    linear_schroedinger_ab,
    numu_from_ab,
    wavefunction_to_st,
)

PEDESTAL_T = "ln(1 + 0.5*exp(-x^2/4))"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid():
    return Grid(40.0, 256)


@pytest.fixture
def linear_ab():
    return linear_schroedinger_ab(PhysicalParams(hbar=1.0, m=1.0))


@pytest.fixture
def linear_numu(linear_ab):
    return numu_from_ab(linear_ab)


@pytest.fixture
def dg_numu():
    return doebner_goldin_numu(PhysicalParams(hbar=1.0, m=1.0, D=0.1))


@pytest.fixture
def kostin_numu():
    return NuMuCoefficients(nu1="-1/2", mu2="-1/4", mu3="1/2", mu5="1/8", alpha2="2/5")


@pytest.fixture
def pedestal(grid):
    """Flat-phase Gaussian on a unit background: psi = 1 + 0.5*exp(-x^2/4)."""
    return STField.from_expressions(grid, "0", PEDESTAL_T)


def pedestal_psi(x, t=0.0, k0=0.0, sigma0=1.0, amplitude=0.5):
    """1 + amplitude*G with G the free (hbar = m = 1) Gaussian packet."""
    a = 1.0 / (4 * sigma0**2)
    spread = 1 + 2j * a * t
    return 1 + amplitude * spread**-0.5 * np.exp((-a * x**2 + 1j * k0 * x - 0.5j * k0**2 * t) / spread)


@pytest.fixture
def moving_pedestal(grid):
    def make(k0=1.0, sigma0=1.0, amplitude=0.5, t=0.0):
        return wavefunction_to_st(WaveFunction(grid, pedestal_psi(grid.x, t, k0, sigma0, amplitude)))

    return make


@pytest.fixture
def pedestal_oracle():
    return pedestal_psi
