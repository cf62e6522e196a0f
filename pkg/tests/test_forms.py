import numpy as np
import pytest

from src.ferro_fhd.errors import SpaceError
from src.ferro_fhd.forms import (
    Operators,
    assemble_bilinear,
    assemble_c_form,
    assemble_convection,
    assemble_cross,
    assemble_load,
)
from src.ferro_fhd.mms import get_problem
from src.ferro_fhd.spaces import (
    FeFunction,
    SpaceKind,
    build_dofmap,
    curl_incidence,
    interpolate,
)
from src.ferro_fhd.stepper import pressure_div


def _constant(vector):
    return lambda x, t: np.broadcast_to(np.asarray(vector, float), np.shape(x))


def test_p0_mass_is_volume_diagonal(mesh1):
    space = build_dofmap(SpaceKind.CONST_P0, mesh1)
    mass = assemble_bilinear("mass", space, space).toarray()
    np.testing.assert_allclose(mass, np.eye(6) / 6.0, atol=1e-15)


def test_mass_matrices_are_symmetric(spaces2):
    for kind in SpaceKind:
        mass = assemble_bilinear("mass", spaces2[kind], spaces2[kind])
        assert abs(mass - mass.T).max() < 1e-14


def test_curl_rt_factors_through_incidence(spaces2, mesh2):
    edge, face = spaces2[SpaceKind.EDGE_NE0], spaces2[SpaceKind.FACE_RT0]
    curl_rt = assemble_bilinear("curl_rt", edge, face)
    mass = assemble_bilinear("mass", face, face)
    expected = mass @ curl_incidence(mesh2)
    assert abs(curl_rt - expected).max() < 1e-12


def test_constant_load_on_cells(mesh2):
    space = build_dofmap(SpaceKind.CONST_P0, mesh2)
    load = assemble_load(lambda x, t: np.ones(np.shape(x)[:-1]), space, 0.0)
    np.testing.assert_allclose(load, mesh2.volumes, rtol=1e-13)
    zero = assemble_load(lambda x, t: np.zeros(np.shape(x)[:-1]), space, 0.0)
    assert not np.any(zero)


def test_load_quadrature_is_converged(spaces2):
    space = spaces2[SpaceKind.VELOCITY_MINI]
    f_u = get_problem(1).forcing("momentum")
    coarse = assemble_load(f_u, space, 0.7, degree=8)
    fine = assemble_load(f_u, space, 0.7, degree=12)
    np.testing.assert_allclose(coarse, fine, rtol=1e-5, atol=1e-7)


@pytest.fixture(scope="module")
def velocity2(spaces2):
    return interpolate(spaces2[SpaceKind.VELOCITY_MINI], get_problem(1).exact("u"), 1.0)


@pytest.mark.parametrize("kind", [SpaceKind.VELOCITY_MINI, SpaceKind.ANGULAR_P1])
def test_convection_is_skew(spaces2, velocity2, rng, kind):
    space = spaces2[kind]
    conv = assemble_convection(velocity2, space)
    assert abs(conv + conv.T).max() < 1e-14
    x = rng.standard_normal(space.n_dofs)
    assert abs(x @ (conv @ x)) < 1e-12 * (x @ x)


def test_convection_vanishes_for_zero_field(spaces2):
    space = spaces2[SpaceKind.VELOCITY_MINI]
    conv = assemble_convection(FeFunction.zeros(space), space)
    assert abs(conv).max() == 0.0


def test_c_form_is_skew(spaces2, velocity2, rng):
    space = spaces2[SpaceKind.FACE_RT0]
    matrix = assemble_c_form(velocity2, space)
    assert abs(matrix + matrix.T).max() < 1e-14
    m = rng.standard_normal(space.n_dofs)
    assert abs(m @ (matrix @ m)) < 1e-12 * (m @ m)
    with pytest.raises(SpaceError):
        assemble_c_form(velocity2, spaces2[SpaceKind.EDGE_NE0])


def test_cross_with_itself_vanishes(spaces2, velocity2, rng):
    space = spaces2[SpaceKind.FACE_RT0]
    matrix = assemble_cross(velocity2, space, space)
    x = rng.standard_normal(space.n_dofs)
    assert abs(x @ (matrix @ x)) < 1e-12 * (x @ x)


def test_cross_with_constant_fields(spaces2):
    space = spaces2[SpaceKind.ANGULAR_P1]
    w = interpolate(space, _constant([1.0, 0.0, 0.0]))
    a = interpolate(space, _constant([0.0, 1.0, 0.0]))
    matrix = assemble_cross(w, space, space)
    expected = assemble_load(_constant([0.0, 0.0, 1.0]), space, 0.0)
    np.testing.assert_allclose(matrix @ a.coeffs, expected, atol=1e-13)


def test_bad_pairs_raise(spaces2, velocity2):
    face, edge = spaces2[SpaceKind.FACE_RT0], spaces2[SpaceKind.EDGE_NE0]
    with pytest.raises(SpaceError):
        assemble_bilinear("mass", face, edge)
    with pytest.raises(SpaceError):
        assemble_bilinear("grad_grad", face, face)
    with pytest.raises(SpaceError):
        assemble_bilinear("curl_rt", face, face)
    with pytest.raises(SpaceError):
        assemble_bilinear("laplace", face, face)
    with pytest.raises(SpaceError):
        assemble_cross(velocity2, spaces2[SpaceKind.PRESSURE_P1], face)
    with pytest.raises(SpaceError):
        assemble_cross(velocity2, face, face, a_op="div")
    with pytest.raises(SpaceError):
        assemble_convection(velocity2, face)


def test_operators_cache(spaces2):
    ops = Operators(spaces2)
    first = ops.mass(SpaceKind.FACE_RT0)
    assert ops.mass(SpaceKind.FACE_RT0) is first
    assert ops.div() is ops.div()
    stats = ops.stats()
    assert stats["hits"] == 2
    assert stats["misses"] == 2


def test_operators_unknown_space(spaces2):
    ops = Operators({SpaceKind.FACE_RT0: spaces2[SpaceKind.FACE_RT0]})
    with pytest.raises(SpaceError):
        ops.mass(SpaceKind.EDGE_NE0)


def test_grad_grad_annihilates_linear_fields(spaces2):
    space = spaces2[SpaceKind.ANGULAR_P1]
    linear = interpolate(
        space,
        lambda x, t: np.stack(
            [x[..., 0] + 2 * x[..., 1], 3 * x[..., 2], x[..., 0] - x[..., 2]],
            axis=-1,
        ),
    )
    stiffness = assemble_bilinear("grad_grad", space, space)
    residual = stiffness @ linear.coeffs
    # на внутренних узлах кусочно-линейное поле гармонично
    np.testing.assert_allclose(residual[space.free], 0.0, atol=1e-13)


def test_pressure_div_of_solenoidal_field(example1_disc):
    space = example1_disc.spaces["u"]
    u = interpolate(
        space,
        lambda x, t: np.stack([x[..., 1], x[..., 2], x[..., 0]], axis=-1),
    )
    divergence = pressure_div(example1_disc) @ u.coeffs
    np.testing.assert_allclose(divergence, 0.0, atol=1e-14)
