import numpy as np
import pytest

from nodallab import assemble_forms, lowest_eigenpairs, make_base_grid, make_connection

GENERIC_U = {"kind": "random_fourier", "amplitude": 0.15, "seed": 3}
GENERIC_BETA = {"kind": "random_fourier_form", "amplitude": 0.3, "seed": 7}


@pytest.fixture(scope="session")
def flat16():
    grid = make_base_grid(2, 16)
    conn = make_connection(grid, 0)
    return grid, conn


@pytest.fixture(scope="session")
def generic24():
    """Perturbed flux-1 bundle over T^2, n = 24, with the generic seeds."""
    grid = make_base_grid(2, 24, GENERIC_U)
    conn = make_connection(grid, 1, GENERIC_BETA)
    return grid, conn


@pytest.fixture(scope="session")
def generic24_eigs(generic24):
    grid, conn = generic24
    op = assemble_forms(grid, conn, 1)
    return op, lowest_eigenpairs(op, 6)


@pytest.fixture(scope="session")
def flat_c2_eigs():
    """Flat doubly-charged bundle: exactly degenerate lowest Landau pair."""
    grid = make_base_grid(2, 24)
    conn = make_connection(grid, 2)
    op = assemble_forms(grid, conn, 1)
    return op, lowest_eigenpairs(op, 6)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
