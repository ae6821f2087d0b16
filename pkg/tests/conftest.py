import pytest

from fracflow import SphereParams, build_grid


@pytest.fixture(scope="session")
def p35():
    return SphereParams(3, 0.5)


@pytest.fixture(scope="session")
def grid35(p35):
    return build_grid(p35, 32)


@pytest.fixture(scope="session")
def grid35_fine(p35):
    return build_grid(p35, 64)
