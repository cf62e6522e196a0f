import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.ferro_fhd.errors import MeshError
from src.ferro_fhd.mesh import (
    boundary_entities,
    build_uniform_mesh,
    dump_mesh,
    reference_map,
)


def test_single_cube_counts(mesh1):
    assert mesh1.n_vertices == 8
    assert mesh1.n_cells == 6
    assert mesh1.n_edges == 19
    assert mesh1.n_faces == 18
    assert mesh1.euler_characteristic() == 1


@pytest.mark.parametrize("K, n_vertices, n_cells", [(2, 27, 48), (4, 125, 384)])
def test_vertex_and_cell_counts(K, n_vertices, n_cells):
    mesh = build_uniform_mesh(K)
    assert mesh.n_vertices == n_vertices
    assert mesh.n_cells == n_cells


@given(st.integers(min_value=1, max_value=4))
@settings(max_examples=4, deadline=None)
def test_counts_follow_formulas(K):
    mesh = build_uniform_mesh(K)
    assert mesh.n_vertices == (K + 1) ** 3
    assert mesh.n_cells == 6 * K**3
    assert mesh.euler_characteristic() == 1
    assert mesh.n_faces == (4 * mesh.n_cells + np.count_nonzero(
        mesh.boundary_face_mask)) // 2


@pytest.mark.parametrize("K", [0, -1, 1.5, True])
def test_invalid_subdivision(K):
    with pytest.raises(MeshError):
        build_uniform_mesh(K)


def test_entities_sorted(mesh2):
    assert np.all(mesh2.edges[:, 0] < mesh2.edges[:, 1])
    assert np.all(np.diff(mesh2.faces, axis=1) > 0)
    assert len(np.unique(mesh2.edges, axis=0)) == mesh2.n_edges


def test_single_cube_boundary(mesh1):
    boundary = boundary_entities(mesh1)
    assert len(boundary.vertices) == 8
    assert len(boundary.faces) == 12


def test_one_interior_vertex(mesh2):
    interior = np.flatnonzero(~mesh2.boundary_vertex_mask)
    assert len(interior) == 1
    np.testing.assert_allclose(mesh2.vertices[interior[0]], [0.5, 0.5, 0.5])


def test_volumes(mesh1):
    np.testing.assert_allclose(mesh1.volumes, 1.0 / 6.0, rtol=1e-14)
    mesh = build_uniform_mesh(4)
    assert abs(mesh.volumes.sum() - 1.0) < 1e-13
    assert np.all(mesh.volumes > 0)


def test_barycentric_gradients(mesh2):
    """grad lambda_i . (x_j - x_0) = delta_ij - delta_i0."""
    corners = mesh2.vertices[mesh2.cells]
    shifts = corners - corners[:, :1, :]
    products = np.einsum("cid,cjd->cij", mesh2.grad_lambda, shifts)
    expected = np.eye(4) - np.eye(4)[:, :1]
    np.testing.assert_allclose(products, np.broadcast_to(expected, products.shape),
                               atol=1e-12)
    np.testing.assert_allclose(mesh2.grad_lambda.sum(axis=1), 0.0, atol=1e-12)


def test_interior_faces_have_opposite_signs(mesh2):
    totals = np.bincount(
        mesh2.cell_faces.ravel(),
        weights=mesh2.cell_face_signs.ravel(),
        minlength=mesh2.n_faces,
    )
    interior = ~mesh2.boundary_face_mask
    np.testing.assert_array_equal(totals[interior], 0.0)
    np.testing.assert_array_equal(np.abs(totals[~interior]), 1.0)


def test_face_signs_point_outward(mesh1):
    fv = mesh1.vertices[mesh1.faces]
    normals = np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0])
    centers = mesh1.vertices[mesh1.cells].mean(axis=1)
    for cell in range(mesh1.n_cells):
        for local, face in enumerate(mesh1.cell_faces[cell]):
            outward = fv[face].mean(axis=0) - centers[cell]
            sign = np.sign(normals[face] @ outward)
            assert sign == mesh1.cell_face_signs[cell, local]


def test_reference_map(mesh2):
    for cell in (0, 7, mesh2.n_cells - 1):
        ref = reference_map(mesh2, cell)
        np.testing.assert_allclose(ref(np.zeros(3)),
                                   mesh2.vertices[mesh2.cells[cell, 0]])
        np.testing.assert_allclose(ref(np.eye(3)),
                                   mesh2.vertices[mesh2.cells[cell, 1:]])
        assert ref.det_abs == pytest.approx(6.0 * mesh2.volumes[cell])
    with pytest.raises(MeshError):
        reference_map(mesh2, mesh2.n_cells)


def test_mesh_is_immutable(mesh1):
    with pytest.raises(ValueError):
        mesh1.vertices[0, 0] = 1.0


def test_dump_mesh(tmp_path, mesh2):
    meshio = pytest.importorskip("meshio")
    path = tmp_path / "cube.vtu"
    dump_mesh(mesh2, str(path))
    loaded = meshio.read(str(path))
    assert len(loaded.points) == mesh2.n_vertices
    assert len(loaded.cells_dict["tetra"]) == mesh2.n_cells
