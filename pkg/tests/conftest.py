"""Shared fixtures: grids, operators, and a slow-test opt-out.

Most unit tests run on a small grid (L=20, N=501) where everything is
fast. Tests that check quantitative scaling use the wider laboratory
grid (L=40, N=2001). The acceptance suite in test_acceptance.py runs
long evolutions; mark-based selection lets `pytest -m "not slow"` skip
those during development.
"""

import numpy as np
import pytest
from hypothesis import settings

from nlsdelta.bound_states import BoundStateFamily
from nlsdelta.grid import make_grid
from nlsdelta.nonlinearity import power_law
from nlsdelta.operator import build_operator, spectral_data

settings.register_profile("lab", deadline=None, max_examples=25)
settings.load_profile("lab")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance experiments")


@pytest.fixture(scope="session")
def grid_small():
    return make_grid(20.0, 501)


@pytest.fixture(scope="session")
def grid_main():
    return make_grid(40.0, 2001)


@pytest.fixture(scope="session")
def op_small(grid_small):
    return build_operator(1.0, grid_small)


@pytest.fixture(scope="session")
def op_main(grid_main):
    return build_operator(1.0, grid_main)


@pytest.fixture(scope="session")
def sd_small(op_small):
    return spectral_data(op_small)


@pytest.fixture(scope="session")
def sd_main(op_main):
    return spectral_data(op_main)


@pytest.fixture(scope="session")
def family_cubic(op_main, sd_main):
    """Focusing cubic family on the laboratory grid."""
    return BoundStateFamily(power_law(1.0, -1.0), op_main, sd_main)


@pytest.fixture(scope="session")
def family_cubic_small(op_small, sd_small):
    return BoundStateFamily(power_law(1.0, -1.0), op_small, sd_small)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
