import numpy as np
import pytest

from wgf3d.kernels import Material
from wgf3d.modes import solve_modes
from wgf3d.operators import MaterialPair

N_CORE = 1.47


@pytest.fixture(scope="session")
def glass():
    """Core/cladding pair of the reference guide (n = 1.47 in vacuum)."""
    return MaterialPair(Material(1.0, 1.0), Material(N_CORE**2, 1.0))


@pytest.fixture(scope="session")
def v2_radius():
    return 2.0 / (2 * np.pi * np.sqrt(N_CORE**2 - 1.0))


@pytest.fixture(scope="session")
def he11(glass, v2_radius):
    return solve_modes(glass.interior, glass.exterior, v2_radius)[0]


def curl_fd(F, p, h):
    """Fourth-order central-difference curl of a vector field ``F(p) -> (3,)``."""
    J = np.zeros((3, 3), complex)
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        J[:, k] = (-F(p + 2 * e) + 8 * F(p + e) - 8 * F(p - e) + F(p - 2 * e)) / (12 * h)
    return np.array([J[2, 1] - J[1, 2], J[0, 2] - J[2, 0], J[1, 0] - J[0, 1]])
