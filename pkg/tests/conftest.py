"""Shared fixtures for twigkit tests"""

import numpy as np
import pytest

from twigkit.integrate import SampleGrid
from twigkit.spectrum import sweep_from_jacobians


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-length sweeps reproducing the reference behaviours")


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    """Keep sweeps sequential unless a test asks otherwise"""
    monkeypatch.setenv('TWIG_THREADS', '1')


@pytest.fixture
def diagonal_sweep():
    """Three directions growing as t^2, flat, and shrinking as t^-2"""
    t_values = np.geomspace(2.0, 1e3, 16)
    jacobians = [np.diag([t, 1.0, 1.0 / t]) for t in t_values]
    return sweep_from_jacobians(jacobians, t_values, ('p0', 'p1', 'p2'))


@pytest.fixture
def unit_grid():
    return SampleGrid(0.0, 1.0, 10)
