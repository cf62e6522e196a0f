import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from src.ferro_fhd.errors import SpaceError
from src.ferro_fhd.forms import Operators
from src.ferro_fhd.mesh import build_uniform_mesh
from src.ferro_fhd.mms import get_problem
from src.ferro_fhd.quadrature import tetrahedron_rule
from src.ferro_fhd.spaces import (
    FeFunction,
    SpaceKind,
    build_dofmap,
    curl_incidence,
    div_incidence,
    evaluate,
    grad_incidence,
    interpolate,
)

RULE = tetrahedron_rule(4)


def _points(mesh):
    return mesh.physical_points(RULE.points)


def test_free_dof_counts(spaces2):
    assert spaces2[SpaceKind.ANGULAR_P1].n_free == 3
    assert spaces2[SpaceKind.VELOCITY_MINI].n_free == 3 * (1 + 48)
    assert spaces2[SpaceKind.PRESSURE_P1].n_free == 27
    assert spaces2[SpaceKind.FACE_RT0].n_free == (
        spaces2[SpaceKind.FACE_RT0].n_dofs - 48
    )


def test_const_space_on_single_cube(mesh1):
    space = build_dofmap(SpaceKind.CONST_P0, mesh1)
    assert space.n_dofs == 6
    assert space.mean_constraint
    assert space.mean_weights().sum() == pytest.approx(1.0)


def test_free_normal_trace(mesh2):
    space = build_dofmap(SpaceKind.FACE_RT0, mesh2, constrain_normal=False)
    assert space.n_free == mesh2.n_faces
    assert not space.normal_constrained


def test_edge_tangential_trace(mesh2, spaces2):
    constrained = spaces2[SpaceKind.EDGE_NE0]
    assert constrained.tangential_constrained
    assert constrained.n_free == int(np.count_nonzero(~mesh2.boundary_edge_mask))
    free = build_dofmap(SpaceKind.EDGE_NE0, mesh2, constrain_tangential=False)
    assert not free.tangential_constrained
    assert free.n_free == mesh2.n_edges
    assert free.constrained.size == 0


def test_pressure_mean_weights(spaces2):
    assert spaces2[SpaceKind.PRESSURE_P1].mean_weights().sum() == pytest.approx(1.0)
    with pytest.raises(SpaceError):
        spaces2[SpaceKind.FACE_RT0].mean_weights()


def test_exact_sequence(mesh2):
    grad, curl, div = grad_incidence(mesh2), curl_incidence(mesh2), div_incidence(mesh2)
    assert (curl @ grad).count_nonzero() == 0
    assert (div @ curl).count_nonzero() == 0


def test_rt0_reproduces_its_own_fields(spaces2):
    """a + b x лежит в RT0: интерполянт совпадает с полем."""
    space = spaces2[SpaceKind.FACE_RT0]

    def field(x, t):
        return np.array([1.0, 2.0, -3.0]) + 0.5 * x

    fe = interpolate(space, field)
    np.testing.assert_allclose(fe.at_points(RULE.points), field(_points(space.mesh), 0),
                               atol=1e-12)
    np.testing.assert_allclose(fe.at_points(RULE.points, "div"), 1.5, atol=1e-12)


def test_ne0_reproduces_its_own_fields(spaces2):
    """a + b x x лежит в NE0."""
    space = spaces2[SpaceKind.EDGE_NE0]

    def field(x, t):
        return np.stack([1.0 - x[..., 1], x[..., 0] + 2.0, np.full(x.shape[:-1], 0.5)],
                        axis=-1)

    fe = interpolate(space, field)
    np.testing.assert_allclose(fe.at_points(RULE.points), field(_points(space.mesh), 0),
                               atol=1e-12)
    curl = fe.at_points(RULE.points, "curl")
    np.testing.assert_allclose(curl, np.broadcast_to([0.0, 0.0, 2.0], curl.shape),
                               atol=1e-12)


def test_constant_fields(spaces2):
    def constant(x, t):
        return np.broadcast_to([1.0, 0.0, 0.0], np.shape(x))

    rt = interpolate(spaces2[SpaceKind.FACE_RT0], constant)
    np.testing.assert_allclose(rt.at_points(RULE.points, "div"), 0.0, atol=1e-12)
    ne = interpolate(spaces2[SpaceKind.EDGE_NE0], constant)
    np.testing.assert_allclose(ne.at_points(RULE.points, "curl"), 0.0, atol=1e-12)


def test_gradient_interpolant_is_curl_free(spaces2):
    def grad_xyz(x, t):
        return np.stack([x[..., 1] * x[..., 2],
                         x[..., 0] * x[..., 2],
                         x[..., 0] * x[..., 1]], axis=-1)

    fe = interpolate(spaces2[SpaceKind.EDGE_NE0], grad_xyz)
    np.testing.assert_allclose(curl_incidence(fe.dofmap.mesh) @ fe.coeffs, 0.0,
                               atol=1e-14)


def test_nodal_interpolation(spaces2):
    space = spaces2[SpaceKind.PRESSURE_P1]
    pressure = get_problem(1).exact("p")
    fe = interpolate(space, pressure)
    np.testing.assert_allclose(fe.coeffs, pressure(space.mesh.vertices, 0.0))


def test_mini_linear_fields(spaces2):
    space = spaces2[SpaceKind.VELOCITY_MINI]

    def linear(x, t):
        return np.stack([x[..., 1], 2.0 * x[..., 2] - x[..., 0], 1.0 + x[..., 0]],
                        axis=-1)

    fe = interpolate(space, linear)
    expected = linear(_points(space.mesh), 0)
    np.testing.assert_allclose(fe.at_points(RULE.points), expected, atol=1e-12)
    grad = fe.at_points(RULE.points, "grad")
    expected = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 2.0], [1.0, 0.0, 0.0]])
    np.testing.assert_allclose(grad, np.broadcast_to(expected, grad.shape), atol=1e-12)
    np.testing.assert_allclose(fe.at_points(RULE.points, "div"), 0.0, atol=1e-12)


def test_magnetization_vanishes_at_time_zero(mesh1):
    space = build_dofmap(SpaceKind.FACE_RT0, mesh1)
    fe = interpolate(space, get_problem(1).exact("m"), 0.0)
    assert not np.any(fe.coeffs)


def test_face_moments_against_quadrature(mesh1):
    """Коэффициенты RT0 равны потокам полиномиального поля через грани."""
    space = build_dofmap(SpaceKind.FACE_RT0, mesh1, constrain_normal=False)

    def field(x, t):
        x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([x0**2 * x1, x1 * x2**3, x0 * x1 * x2**2 + 1.0], axis=-1)

    fe = interpolate(space, field, 0.0)
    # преобразование Даффи квадрата в треугольник, Гаусс - Лежандр 16 x 16
    t, w = np.polynomial.legendre.leggauss(16)
    s, ws = (1.0 + t) / 2.0, w / 2.0
    u, v = np.meshgrid(s, s, indexing="ij")
    x, y = u, v * (1.0 - u)
    jac = np.outer(ws, ws) * (1.0 - u)
    for face in range(mesh1.n_faces):
        a, b, c = mesh1.vertices[mesh1.faces[face]]
        normal = np.cross(b - a, c - a)
        pts = a + x[..., None] * (b - a) + y[..., None] * (c - a)
        flux = np.sum(jac * (field(pts, 0.0) @ normal))
        assert fe.coeffs[face] == pytest.approx(flux, rel=1e-10, abs=1e-13)


coefficients = st.lists(
    st.floats(min_value=-2.0, max_value=2.0), min_size=6, max_size=6
)


@given(coefficients)
@settings(max_examples=10, deadline=None)
def test_divergence_commutes_with_face_interpolation(mesh2, c):
    """div(Pi_RT v) на ячейке равна среднему div v по ячейке."""
    space = build_dofmap(SpaceKind.FACE_RT0, mesh2, constrain_normal=False)

    def field(x, t):
        x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack([
            c[0] * x0**2 * x1 + c[1] * x2,
            c[2] * x1 * x2**2 + c[3] * x0**3,
            c[4] * x0 * x1 * x2 + c[5] * x2**2,
        ], axis=-1)

    def divergence(x):
        x0, x1, x2 = x[..., 0], x[..., 1], x[..., 2]
        return 2 * c[0] * x0 * x1 + c[2] * x2**2 + c[4] * x0 * x1 + 2 * c[5] * x2

    rule = tetrahedron_rule(6)
    weights = 6.0 * mesh2.volumes[:, None] * rule.weights[None, :]
    x = mesh2.physical_points(rule.points)
    cell_means = np.sum(weights * divergence(x), axis=1) / mesh2.volumes

    div_values = interpolate(space, field).at_points(rule.points, "div")
    np.testing.assert_allclose(
        div_values, np.broadcast_to(cell_means[:, None], div_values.shape),
        atol=1e-10,
    )


@pytest.mark.parametrize("K", [1, 2])
def test_mini_pressure_inf_sup(K):
    """Наименьшее обобщённое сингулярное число (q, div v) без константы."""
    mesh = build_uniform_mesh(K)
    velocity = build_dofmap(SpaceKind.VELOCITY_MINI, mesh)
    ops = Operators({
        SpaceKind.VELOCITY_MINI: velocity,
        SpaceKind.PRESSURE_P1: build_dofmap(SpaceKind.PRESSURE_P1, mesh),
    })
    free = velocity.free
    stiffness = ops.grad_grad(SpaceKind.VELOCITY_MINI).toarray()[np.ix_(free, free)]
    coupling = ops.bilinear(
        "pressure_div", SpaceKind.VELOCITY_MINI, SpaceKind.PRESSURE_P1
    ).toarray()[:, free]
    mass = ops.mass(SpaceKind.PRESSURE_P1).toarray()

    schur = coupling @ np.linalg.solve(stiffness, coupling.T)
    values = linalg.eigh(schur, mass, eigvals_only=True)
    # нулевое значение - постоянное давление
    assert abs(values[0]) < 1e-10
    assert np.sqrt(values[1]) >= 1e-3


def _l2_error(fe, field, t):
    rule = tetrahedron_rule(6)
    mesh = fe.dofmap.mesh
    x = mesh.physical_points(rule.points)
    weights = 6.0 * mesh.volumes[:, None] * rule.weights[None, :]
    diff = fe.at_points(rule.points) - field(x, t)
    return np.sqrt(np.einsum("cq,cqd,cqd->", weights, diff, diff))


@pytest.mark.parametrize("kind", [SpaceKind.FACE_RT0, SpaceKind.EDGE_NE0])
def test_first_order_interpolation(kind):
    field = get_problem(1).exact("m" if kind is SpaceKind.FACE_RT0 else "z")
    t = np.pi / 2
    errors = []
    for K in (4, 8):
        space = build_dofmap(kind, build_uniform_mesh(K))
        errors.append(_l2_error(interpolate(space, field, t), field, t))
    assert 1.6 <= errors[0] / errors[1] <= 2.4


def test_fe_function_validation(spaces2):
    space = spaces2[SpaceKind.CONST_P0]
    with pytest.raises(SpaceError):
        FeFunction(space, np.zeros(space.n_dofs + 1))
    fe = FeFunction.zeros(space)
    with pytest.raises(ValueError):
        fe.coeffs[0] = 1.0


def test_evaluate(spaces2):
    space = spaces2[SpaceKind.PRESSURE_P1]
    fe = interpolate(space, lambda x, t: x[..., 0] + 2.0 * x[..., 1])
    mesh = space.mesh
    bary = [0.25, 0.25, 0.25, 0.25]
    center = mesh.vertices[mesh.cells[3]].mean(axis=0)
    values = evaluate(fe, 3, bary, ("value", "grad"))
    assert values["value"] == pytest.approx(center[0] + 2.0 * center[1])
    np.testing.assert_allclose(values["grad"], [1.0, 2.0, 0.0], atol=1e-12)
    with pytest.raises(SpaceError):
        evaluate(fe, mesh.n_cells, bary)
    with pytest.raises(SpaceError):
        evaluate(fe, 0, [0.5, 0.5, 0.5, 0.5])
    with pytest.raises(SpaceError):
        evaluate(fe, 0, bary, ("curl",))


def test_zero_constrained(spaces2):
    space = spaces2[SpaceKind.ANGULAR_P1]
    fe = interpolate(space, lambda x, t: np.ones(np.shape(x))).zero_constrained()
    assert np.count_nonzero(fe.coeffs) == 3
