import numpy as np
import pytest

from src.ferro_fhd.mesh import build_uniform_mesh
from src.ferro_fhd.models import RunConfig
from src.ferro_fhd.spaces import SpaceKind, build_dofmap
from src.ferro_fhd.stepper import Discretization


@pytest.fixture(scope="session")
def mesh1():
    return build_uniform_mesh(1)


@pytest.fixture(scope="session")
def mesh2():
    return build_uniform_mesh(2)


@pytest.fixture(scope="session")
def spaces2(mesh2):
    """Все пространства на сетке K=2 (RT0 с закреплённым нормальным следом)."""
    return {kind: build_dofmap(kind, mesh2) for kind in SpaceKind}


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def example1_disc():
    """Дискретизация примера 1 на K=2 с одним шагом dt = 1/2."""
    return Discretization(RunConfig(K=2, dt=0.5, T=0.5, example=1))
