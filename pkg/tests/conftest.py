import numpy as np
import pytest

from plapx import (ExponentField, GridFunction, Mesh, PotentialSpec,
                   ProblemConfig, SolverParams, field_from_config_value)


@pytest.fixture
def interval_mesh():
    return Mesh(1, ((0.0, 1.0),), (64,))


@pytest.fixture
def fine_mesh():
    return Mesh(1, ((0.0, 1.0),), (128,))


@pytest.fixture
def square_mesh():
    return Mesh(2, ((0.0, 1.0), (0.0, 1.0)), (8, 8))


@pytest.fixture
def p_two(interval_mesh):
    return ExponentField(np.full(interval_mesh.n_nodes, 2.0), 1)


@pytest.fixture
def p_affine(interval_mesh):
    return field_from_config_value("2 + x", interval_mesh.node_coords, 1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_zero_boundary(mesh, rng, count=1, amp=1.0):
    rows = amp * rng.standard_normal((count, mesh.n_nodes))
    rows[:, mesh.boundary_mask] = 0.0
    return rows[0] if count == 1 else rows


@pytest.fixture
def quartic_config(interval_mesh):
    p = ExponentField(np.full(interval_mesh.n_nodes, 2.0), 1)
    j = PotentialSpec.smooth("t^4/4", name="quartic")
    return ProblemConfig(mesh=interval_mesh, p=p, lam=0.0, potential=j,
                         params=SolverParams(seed=0))
