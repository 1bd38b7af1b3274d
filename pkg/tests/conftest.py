"""Session-scoped covers: building the cones and scanning the certificate
tables is the expensive part, so every test file shares one copy."""

import pytest

from coarsekit import instances


@pytest.fixture(scope="session")
def circle_instance():
    return instances.circle_cover()


@pytest.fixture(scope="session")
def circle_certificate(circle_instance):
    return circle_instance.certificate(R_grid=(1.0, 2.0, 4.0, 8.0, 12.0))


@pytest.fixture(scope="session")
def torus_instance():
    return instances.torus_cover()


@pytest.fixture(scope="session")
def torus_certificate(torus_instance):
    return torus_instance.certificate(R_grid=(1.0, 2.0, 4.0))
