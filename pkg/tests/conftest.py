"""Shared fixtures and field generators for the test suite."""

import numpy as np
import pytest

from eamchain.lattice import ChainGrid, PeriodicField, displacement_from_strain
from eamchain.potentials import shipped_potential


@pytest.fixture(scope="session")
def default_p():
    return shipped_potential("default-eam")


@pytest.fixture(scope="session")
def reversal_p():
    return shipped_potential("reversal-eam")


@pytest.fixture(scope="session")
def pair_p():
    return shipped_potential("pair-morse")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_displacement(grid: ChainGrid, rng, strain_scale: float = 0.05) -> PeriodicField:
    """Zero-mean displacement with strains uniform in +-strain_scale.

    Building from strains keeps derivative magnitudes independent of N, so
    finite-difference tolerances hold at every size.
    """
    s = rng.uniform(-1.0, 1.0, grid.period_atoms)
    s -= s.mean()
    return displacement_from_strain(grid, strain_scale * s)
