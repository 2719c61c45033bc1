import pytest

from brachistochrone.geometry import make_cone, make_hyperboloid, make_polar_plane, make_vertical_plane
from brachistochrone.media import central_power_potential, height_potential, uniform_potential


@pytest.fixture
def plane():
    return make_vertical_plane()


@pytest.fixture
def cone():
    return make_cone()


@pytest.fixture
def polar():
    return make_polar_plane()


@pytest.fixture
def hyperboloid():
    return make_hyperboloid()


@pytest.fixture
def gravity():
    return uniform_potential()


@pytest.fixture
def cone_gravity(cone):
    return height_potential(cone)


@pytest.fixture
def inverse_square():
    return central_power_potential(1)
