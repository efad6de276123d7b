from __future__ import annotations

import numpy as np
import pytest

from rendezvous.modules.discretization.schemas import AnomalyGrid, DiscretizationOptions
from rendezvous.modules.discretization.service import discretize
from rendezvous.modules.orbit.schemas import OrbitParams


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def gto_params() -> OrbitParams:
    return OrbitParams(a=24616e3, e=0.73074)


@pytest.fixture(scope="session")
def atv_params() -> OrbitParams:
    return OrbitParams(a=6763e3, e=0.0052)


@pytest.fixture(scope="session")
def circular_params() -> OrbitParams:
    return OrbitParams(a=7000e3, e=0.0)


@pytest.fixture(scope="session")
def small_grid() -> AnomalyGrid:
    return AnomalyGrid(nu0=0.3, nuf=2.8, N=8)


@pytest.fixture(scope="session")
def gto_system(gto_params, small_grid):
    return discretize(gto_params, small_grid, DiscretizationOptions(input_model="quadrature"))


@pytest.fixture()
def tmp_out(tmp_path):
    out = tmp_path / "runs"
    out.mkdir()
    return out
