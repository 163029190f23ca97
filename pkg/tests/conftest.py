"""pytest fixtures."""

import pytest

from nonlocal_spikes.components.grid import UniformGrid
from nonlocal_spikes.components.kernel import AnalyticEntry, KernelSpec
from nonlocal_spikes.components.nonlinearity import PolynomialNonlinearity
from nonlocal_spikes.components.symmetry import SymmetryGroup
from nonlocal_spikes.spike_solver import SpikeSolver

EXPONENTIAL_KERNEL = [[{"family": "exponential", "amplitude": -1.0, "width": 1.0}]]
QUADRATIC_TABLE = [[{"coef": -1.0, "mu": 1, "powers": [1]}, {"coef": 1.0, "powers": [2]}]]


@pytest.fixture
def grid_1d():
    """Small one-dimensional grid."""
    return UniformGrid(1, 10.0, 64)


@pytest.fixture
def grid_2d():
    """Small isotropic two-dimensional grid."""
    return UniformGrid(2, 8.0, 32)


@pytest.fixture
def exponential_kernel():
    """K = -1/2 exp(-|x|): unit negative mass, second moment -2."""
    return KernelSpec([[AnalyticEntry("exponential", 1, -1.0)]])


@pytest.fixture
def quadratic_nonlinearity():
    """N(u; mu) = -mu u + u^2."""
    return PolynomialNonlinearity.from_table(QUADRATIC_TABLE)


@pytest.fixture
def basic_config():
    """Scalar exponential problem on a reduced grid."""
    return {
        "dimension": 1,
        "kernel": EXPONENTIAL_KERNEL,
        "nonlinearity": {"polynomial": QUADRATIC_TABLE},
        "symmetry": {"named": "inversion"},
        "grid": {"L": 30.0, "N": 1024},
        "mu": 0.01,
        "ell": 2,
        "mode": "solve",
        "full_newton": False,
        "tolerances": {},
    }


@pytest.fixture(scope="session")
def solver_1d():
    """Scheme-ready solver for the scalar exponential problem, shared across tests."""
    config = {
        "dimension": 1,
        "kernel": EXPONENTIAL_KERNEL,
        "nonlinearity": {"polynomial": QUADRATIC_TABLE},
        "symmetry": {"named": "inversion"},
        "grid": {"L": 30.0, "N": 1024},
        "mu": 0.01,
        "ell": 2,
        "tolerances": {},
    }
    solver = SpikeSolver(config)
    solver.check_hypotheses()
    return solver


@pytest.fixture
def inversion_1d():
    return SymmetryGroup.named("inversion", 1)
