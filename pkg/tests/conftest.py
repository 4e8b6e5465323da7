import numpy as np
import pytest

from lambda2sphere.discretize import cached_mesh


@pytest.fixture(scope="session")
def ico3():
    return cached_mesh(2, 3)


@pytest.fixture(scope="session")
def ico4():
    return cached_mesh(2, 4)


@pytest.fixture(scope="session")
def ico5():
    return cached_mesh(2, 5)


@pytest.fixture(scope="session")
def tet2():
    return cached_mesh(3, 2)


@pytest.fixture(scope="session")
def tet3():
    return cached_mesh(3, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
