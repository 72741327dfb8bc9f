"""Pytest configuration and fixtures."""

import sys
from pathlib import Path

import numpy as np
import pytest

# Add project root to path for imports
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.field import PotentialGrid  # noqa: E402
from src.geometry import BackgroundGeometry, fs_density  # noqa: E402

SMALL_N_T = 17


@pytest.fixture
def small_geo():
    """Coarse grid: h_u = 0.5 on [-8, 8]."""
    return BackgroundGeometry(u_max=8.0, n_u=33)


@pytest.fixture
def fine_geo():
    """h_u = 0.25 on [-16, 16]."""
    return BackgroundGeometry(u_max=16.0, n_u=129)


def admissible_potential(c: float = 0.5, asymmetry: float = 0.0):
    """
    φ = t² − t + c·t(1−t)·F⁰_uu(u) + asymmetry·t·|s₀|²_h.

    Strictly admissible for |c| <= 0.5 and |asymmetry| <= 0.2.
    """

    def fn(u, t):
        s0 = 1.0 / (1.0 + np.exp(-u))
        return t**2 - t + c * t * (1.0 - t) * fs_density(u) + asymmetry * t * s0

    return fn


@pytest.fixture
def admissible_grid(small_geo):
    return PotentialGrid.from_function(small_geo, SMALL_N_T, admissible_potential())


@pytest.fixture
def zero_grid(small_geo):
    return PotentialGrid.from_values(small_geo, np.zeros((small_geo.n_u, SMALL_N_T)))
