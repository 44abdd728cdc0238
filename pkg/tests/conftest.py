import math

import numpy as np
import pytest
from hypothesis import settings

from meanapprox.grid import BallSpec, build_disk_grid

settings.register_profile("repo", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("repo")

RHO2 = 2 ** -0.5


@pytest.fixture(scope="session")
def grid128():
    return build_disk_grid(128, 256)


@pytest.fixture(scope="session")
def grid64():
    return build_disk_grid(64, 128)


@pytest.fixture(scope="session")
def split_grid():
    # node boundary at the half-area radius
    return build_disk_grid(64, 128, (RHO2,))


@pytest.fixture(scope="session")
def spec2():
    return BallSpec(2)


@pytest.fixture(scope="session")
def spec3():
    return BallSpec(3)


def sigma2(z):
    return np.where(np.abs(z) < RHO2, -1.0, 1.0) + 0j


def chi_d0(z):
    return (np.abs(z) < RHO2).astype(complex)
