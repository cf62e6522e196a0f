"""Равномерная тетраэдральная сетка единичного куба (разбиение Куна)."""

from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple

import numpy as np

from .errors import MeshError

# Локальные рёбра и грани тетраэдра; грань i лежит напротив вершины i
LOCAL_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
LOCAL_FACES = np.array([(1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2)])


class BoundaryEntities(NamedTuple):
    """Индексы граничных вершин, рёбер и граней (отсортированы)."""

    vertices: np.ndarray
    edges: np.ndarray
    faces: np.ndarray


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    Неизменяемая сетка K x K x K куба (0,1)^3 из 6K^3 тетраэдров.

    Рёбра ориентированы от меньшего глобального индекса вершины к большему,
    грани хранятся как возрастающие тройки вершин; нормаль грани
    (b - a) x (c - a). Знаки в cell_edge_signs / cell_face_signs
    связывают локальную ориентацию ячейки с глобальной.
    """

    K: int
    vertices: np.ndarray
    cells: np.ndarray
    edges: np.ndarray
    faces: np.ndarray
    cell_edges: np.ndarray
    cell_edge_signs: np.ndarray
    cell_faces: np.ndarray
    cell_face_signs: np.ndarray
    face_edges: np.ndarray
    jacobians: np.ndarray
    volumes: np.ndarray
    grad_lambda: np.ndarray
    boundary_vertex_mask: np.ndarray
    boundary_edge_mask: np.ndarray
    boundary_face_mask: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def h(self) -> float:
        """Диаметр ячейки, sqrt(3)/K."""
        return float(np.sqrt(3.0) / self.K)

    def euler_characteristic(self) -> int:
        """V - E + F - T (для куба равно 1)."""
        return self.n_vertices - self.n_edges + self.n_faces - self.n_cells

    def physical_points(self, bary: np.ndarray, cells=slice(None)) -> np.ndarray:
        """
        Перевести барицентрические точки в физические координаты.

        Args:
            bary: Массив (nq, 4) барицентрических координат
            cells: Индексы или срез ячеек

        Returns:
            Массив (nc, nq, 3)
        """
        corners = self.vertices[self.cells[cells]]
        return np.einsum("qa,cad->cqd", bary, corners)

    def __repr__(self) -> str:
        return (
            f"Mesh(K={self.K}, vertices={self.n_vertices}, edges={self.n_edges}, "
            f"faces={self.n_faces}, cells={self.n_cells})"
        )


def _readonly(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


def _kuhn_cells(K: int) -> np.ndarray:
    """Шесть тетраэдров вдоль главной диагонали каждого подкуба."""
    n = K + 1
    offsets = np.array([1, n, n * n])
    i, j, k = np.meshgrid(np.arange(K), np.arange(K), np.arange(K), indexing="ij")
    # i меняется быстрее всего
    base = (i + n * j + n * n * k).transpose(2, 1, 0).ravel()

    tets = []
    for perm in permutations(range(3)):
        v0 = base
        v1 = v0 + offsets[perm[0]]
        v2 = v1 + offsets[perm[1]]
        v3 = v2 + offsets[perm[2]]
        sign = np.linalg.det(np.eye(3)[list(perm)])
        if sign > 0:
            tets.append(np.stack([v0, v1, v2, v3], axis=1))
        else:
            # нечётная перестановка: меняем местами v2 и v3
            tets.append(np.stack([v0, v1, v3, v2], axis=1))
    return np.stack(tets, axis=1).reshape(-1, 4)


def build_uniform_mesh(K: int) -> Mesh:
    """
    Построить равномерную сетку K x K x K единичного куба.

    Args:
        K: Число разбиений по каждой оси

    Returns:
        Сетка с перечисленными вершинами, рёбрами, гранями и ячейками

    Raises:
        MeshError: Если K < 1 или получена вырожденная ячейка
    """
    if isinstance(K, bool) or not isinstance(K, (int, np.integer)) or K < 1:
        raise MeshError(f"K должно быть положительным целым, получено {K!r}")
    K = int(K)
    n = K + 1

    grid = np.arange(n) / K
    z, y, x = np.meshgrid(grid, grid, grid, indexing="ij")
    vertices = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    cells = _kuhn_cells(K)

    # Рёбра: уникальные отсортированные пары в лексикографическом порядке
    local_edges = cells[:, LOCAL_EDGES]
    edge_pairs = np.sort(local_edges, axis=2).reshape(-1, 2)
    edges, edge_inverse = np.unique(edge_pairs, axis=0, return_inverse=True)
    cell_edges = edge_inverse.reshape(-1).reshape(-1, 6)
    cell_edge_signs = np.where(local_edges[:, :, 0] < local_edges[:, :, 1], 1, -1)

    # Грани: уникальные отсортированные тройки
    face_triples = np.sort(cells[:, LOCAL_FACES], axis=2).reshape(-1, 3)
    faces, face_inverse = np.unique(face_triples, axis=0, return_inverse=True)
    cell_faces = face_inverse.reshape(-1).reshape(-1, 4)

    corners = vertices[cells]
    jacobians = np.stack(
        [corners[:, 1] - corners[:, 0],
         corners[:, 2] - corners[:, 0],
         corners[:, 3] - corners[:, 0]],
        axis=2,
    )
    dets = np.linalg.det(jacobians)
    if np.any(dets <= 1e-14 / K**3):
        raise MeshError("обнаружена вырожденная или неверно ориентированная ячейка")
    volumes = dets / 6.0

    inv = np.linalg.inv(jacobians)
    grad_lambda = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)

    # Знак грани: +1, если глобальная нормаль направлена наружу из ячейки
    fv = vertices[faces[cell_faces]]
    normals = np.cross(fv[..., 1, :] - fv[..., 0, :], fv[..., 2, :] - fv[..., 0, :])
    centroid = fv.mean(axis=2)
    opposite = corners
    outward = np.einsum("cfd,cfd->cf", normals, centroid - opposite)
    cell_face_signs = np.where(outward > 0, 1, -1)

    # Рёбра каждой грани (a<b<c): ab, bc, ac
    edge_keys = edges[:, 0] * len(vertices) + edges[:, 1]

    def edge_index(a, b):
        return np.searchsorted(edge_keys, a * len(vertices) + b)

    face_edges = np.stack(
        [edge_index(faces[:, 0], faces[:, 1]),
         edge_index(faces[:, 1], faces[:, 2]),
         edge_index(faces[:, 0], faces[:, 2])],
        axis=1,
    )

    face_counts = np.bincount(cell_faces.ravel(), minlength=len(faces))
    boundary_face_mask = face_counts == 1
    boundary_vertex_mask = np.zeros(len(vertices), dtype=bool)
    boundary_vertex_mask[faces[boundary_face_mask].ravel()] = True
    boundary_edge_mask = np.zeros(len(edges), dtype=bool)
    boundary_edge_mask[face_edges[boundary_face_mask].ravel()] = True

    _readonly(
        vertices, cells, edges, faces, cell_edges, cell_edge_signs, cell_faces,
        cell_face_signs, face_edges, jacobians, volumes, grad_lambda,
        boundary_vertex_mask, boundary_edge_mask, boundary_face_mask,
    )
    return Mesh(
        K=K,
        vertices=vertices,
        cells=cells,
        edges=edges,
        faces=faces,
        cell_edges=cell_edges,
        cell_edge_signs=cell_edge_signs,
        cell_faces=cell_faces,
        cell_face_signs=cell_face_signs,
        face_edges=face_edges,
        jacobians=jacobians,
        volumes=volumes,
        grad_lambda=grad_lambda,
        boundary_vertex_mask=boundary_vertex_mask,
        boundary_edge_mask=boundary_edge_mask,
        boundary_face_mask=boundary_face_mask,
    )


def boundary_entities(mesh: Mesh) -> BoundaryEntities:
    """
    Сущности, лежащие на границе куба.

    Грань граничная, если у неё ровно одна ячейка; вершины и рёбра
    граничные, если принадлежат граничной грани.
    """
    return BoundaryEntities(
        vertices=np.flatnonzero(mesh.boundary_vertex_mask),
        edges=np.flatnonzero(mesh.boundary_edge_mask),
        faces=np.flatnonzero(mesh.boundary_face_mask),
    )


@dataclass(frozen=True)
class ReferenceMap:
    """Аффинное отображение x = origin + J x_hat эталонного тетраэдра на ячейку."""

    origin: np.ndarray
    jacobian: np.ndarray
    det_abs: float

    def __call__(self, ref_points: np.ndarray) -> np.ndarray:
        return self.origin + np.asarray(ref_points) @ self.jacobian.T

    def covariant(self, ref_vectors: np.ndarray) -> np.ndarray:
        """Ковариантное преобразование Пиолы (рёберные элементы): J^{-T} v."""
        return np.asarray(ref_vectors) @ np.linalg.inv(self.jacobian)

    def contravariant(self, ref_vectors: np.ndarray) -> np.ndarray:
        """Контравариантное преобразование Пиолы (граневые элементы): J v / det."""
        sign = np.sign(np.linalg.det(self.jacobian))
        return sign * np.asarray(ref_vectors) @ self.jacobian.T / self.det_abs


def reference_map(mesh: Mesh, cell: int) -> ReferenceMap:
    """
    Аффинное отображение эталонного тетраэдра на ячейку cell.

    Эталонная вершина (0,0,0) переходит в первую хранимую вершину ячейки.

    Raises:
        MeshError: Для неверного индекса или вырожденной ячейки
    """
    if not 0 <= cell < mesh.n_cells:
        raise MeshError(f"неверный индекс ячейки {cell}")
    jacobian = np.array(mesh.jacobians[cell])
    det_abs = abs(float(np.linalg.det(jacobian)))
    if det_abs <= 0.0:
        raise MeshError(f"вырожденная ячейка {cell}")
    origin = np.array(mesh.vertices[mesh.cells[cell, 0]])
    return ReferenceMap(origin=origin, jacobian=jacobian, det_abs=det_abs)


def dump_mesh(mesh: Mesh, path: str) -> None:
    """Записать сетку через meshio (формат по расширению файла)."""
    import meshio

    meshio.Mesh(
        points=np.asarray(mesh.vertices),
        cells=[("tetra", np.asarray(mesh.cells))],
    ).write(path)
