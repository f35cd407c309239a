import pytest

from nqlap.gn import GnOptions, minimize_weinstein, shoot
from nqlap.params import validate
from nqlap.radial import build_grid, grading_for_first_node


def graded_grid(N, R, n, r0_frac=1e-5):
    return build_grid(N, R, n, grading_for_first_node(R, n, r0_frac))


@pytest.fixture(scope="session")
def params_a():
    """Subcritical-high set used across the suite."""
    return validate(2, 3.0, 4.0, 0.5)


@pytest.fixture(scope="session")
def params_b():
    """Supercritical set within the proven-existence hypotheses."""
    return validate(3, 2.5, 3.75, 1.0)


@pytest.fixture(scope="session")
def params_crit():
    """Mass-critical exponent for (N=2, q=3, b=0.5)."""
    return validate(2, 3.0, 5.5, 0.5)


@pytest.fixture(scope="session")
def grid_a():
    return graded_grid(2, 40.0, 2048)


@pytest.fixture(scope="session")
def grid_b():
    return graded_grid(3, 40.0, 2048)


@pytest.fixture(scope="session")
def gn_a(params_a, grid_a):
    return minimize_weinstein(params_a, grid_a, GnOptions(n_restarts=2, seed=0))


@pytest.fixture(scope="session")
def gn_b(params_b, grid_b):
    return minimize_weinstein(params_b, grid_b, GnOptions(n_restarts=2, seed=0))


@pytest.fixture(scope="session")
def gn_crit(params_crit, grid_a):
    return minimize_weinstein(params_crit, grid_a, GnOptions(n_restarts=2, seed=0))


@pytest.fixture(scope="session")
def shoot_a(params_a, grid_a):
    return shoot(params_a, grid_a)
