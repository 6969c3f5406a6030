"""Shared fixtures for the test suite."""

import numpy as np
import pytest

from lgfem import generate_unit_square_mesh
from lgfem.fe_space import FeSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def mesh_n2():
    return generate_unit_square_mesh(2)


@pytest.fixture(scope="session")
def mesh_n4():
    return generate_unit_square_mesh(4)


@pytest.fixture(scope="session")
def p1_n2(mesh_n2):
    return FeSpace(mesh_n2, 1)


@pytest.fixture(scope="session")
def p2_n2(mesh_n2):
    return FeSpace(mesh_n2, 2)


@pytest.fixture(scope="session")
def p1_n4(mesh_n4):
    return FeSpace(mesh_n4, 1)


@pytest.fixture(scope="session")
def p2_n4(mesh_n4):
    return FeSpace(mesh_n4, 2)
