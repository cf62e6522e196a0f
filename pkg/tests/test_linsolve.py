import numpy as np
import pytest
from scipy import sparse

from src.ferro_fhd.errors import SingularMatrixError, SolverError
from src.ferro_fhd.forms import assemble_bilinear, assemble_load
from src.ferro_fhd.linsolve import LinearSystem, solve, solve_saddle
from src.ferro_fhd.models import SolverOptions
from src.ferro_fhd.spaces import SpaceKind

ITERATIVE = SolverOptions(method="iterative", tol=1e-12, max_iter=100)


def test_identity():
    system = LinearSystem(sparse.identity(4, format="csr"), np.eye(4)[0])
    np.testing.assert_allclose(solve(system), [1.0, 0.0, 0.0, 0.0])


@pytest.mark.parametrize("options", [SolverOptions(), ITERATIVE])
def test_two_by_two(options):
    matrix = sparse.csr_matrix([[2.0, 1.0], [1.0, 2.0]])
    system = LinearSystem(matrix, np.array([1.0, 0.0]), options=options)
    np.testing.assert_allclose(solve(system), [2.0 / 3.0, -1.0 / 3.0], rtol=1e-10)


def test_zero_rhs_gives_zero():
    matrix = sparse.csr_matrix([[1.0, 1.0], [1.0, 1.0]])
    assert not np.any(solve(LinearSystem(matrix, np.zeros(2))))


def test_singular_matrix():
    matrix = sparse.csr_matrix([[1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(SingularMatrixError):
        solve(LinearSystem(matrix, np.array([1.0, 0.0])))


def test_shape_mismatch():
    with pytest.raises(SolverError):
        LinearSystem(sparse.identity(3, format="csr"), np.zeros(2))
    with pytest.raises(SolverError):
        LinearSystem(sparse.csr_matrix(np.ones((2, 3))), np.zeros(2))
    with pytest.raises(SolverError):
        LinearSystem(sparse.identity(2, format="csr"), np.zeros(2), [np.ones(3)])


def test_bordered_constraint():
    """Вырожденная матрица с ядром (1, 1) и условием x0 + x1 = 0."""
    matrix = sparse.csr_matrix([[1.0, -1.0], [-1.0, 1.0]])
    system = LinearSystem(matrix, np.array([1.0, -1.0]), [np.array([1.0, 1.0])])
    np.testing.assert_allclose(solve(system), [0.5, -0.5], atol=1e-14)


def test_singular_error_is_solver_error():
    assert issubclass(SingularMatrixError, SolverError)
    error = SolverError("невязка", 1e-3)
    assert error.residual == 1e-3


@pytest.fixture(scope="module")
def stokes2(spaces2):
    u_space = spaces2[SpaceKind.VELOCITY_MINI]
    p_space = spaces2[SpaceKind.PRESSURE_P1]
    stiffness = assemble_bilinear("grad_grad", u_space, u_space)
    div = assemble_bilinear("pressure_div", u_space, p_space)
    return u_space, p_space, stiffness, div


def test_stokes_zero_rhs(stokes2):
    u_space, p_space, stiffness, div = stokes2
    u, p = solve_saddle(
        [[stiffness, -div.T], [div, None]],
        [np.zeros(u_space.n_dofs), np.zeros(p_space.n_dofs)],
        [u_space, p_space],
    )
    assert not np.any(u) and not np.any(p)


def test_stokes_is_incompressible(stokes2):
    u_space, p_space, stiffness, div = stokes2

    def load(x, t):
        ones = np.ones(x.shape[:-1])
        return np.stack([np.sin(np.pi * x[..., 1]), x[..., 0] ** 2, ones], axis=-1)

    f = assemble_load(load, u_space, 0.0)
    u, p = solve_saddle(
        [[stiffness, -div.T], [div, None]],
        [f, np.zeros(p_space.n_dofs)],
        [u_space, p_space],
    )
    assert np.linalg.norm(u) > 0
    np.testing.assert_allclose(div @ u, 0.0, atol=1e-10)
    np.testing.assert_allclose(u[u_space.constrained], 0.0)
    assert p_space.mean_weights() @ p == pytest.approx(0.0, abs=1e-12)


def test_fixed_values_are_kept(spaces2):
    space = spaces2[SpaceKind.ANGULAR_P1]
    mass = assemble_bilinear("mass", space, space)
    fixed = np.zeros(space.n_dofs)
    fixed[space.constrained] = 1.0
    (x,) = solve_saddle([[mass]], [np.zeros(space.n_dofs)], [space], fixed=[fixed])
    np.testing.assert_allclose(x[space.constrained], 1.0)
    assert np.all(np.isfinite(x))


def test_block_count_mismatch(spaces2):
    space = spaces2[SpaceKind.ANGULAR_P1]
    with pytest.raises(SolverError):
        solve_saddle([[None]], [np.zeros(space.n_dofs)] * 2, [space])
