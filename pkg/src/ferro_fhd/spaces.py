"""
Пространства конечных элементов, нумерация степеней свободы и интерполяция.

Базисы строятся в физических координатах через барицентрические
функции: P1 - lambda_i, пузырь MINI - 256 lambda_0 lambda_1 lambda_2 lambda_3,
Неделек NE0 - lambda_a grad lambda_b - lambda_b grad lambda_a,
Равьяр - Тома RT0 - (x - P_i) / (3|T|) с единичным потоком через грань i.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from .constants import INTERPOLATION_QUAD_DEGREE
from .errors import SpaceError
from .mesh import LOCAL_EDGES, Mesh
from .quadrature import edge_rule, tetrahedron_rule, triangle_rule

Field = Callable[[np.ndarray, float], np.ndarray]

OPS = ("value", "grad", "curl", "div")


class SpaceKind(Enum):
    """Шесть типов пространств схемы."""

    VELOCITY_MINI = "velocity_mini"
    PRESSURE_P1 = "pressure_p1"
    ANGULAR_P1 = "angular_p1"
    EDGE_NE0 = "edge_ne0"
    FACE_RT0 = "face_rt0"
    CONST_P0 = "const_p0"

    @property
    def is_vector(self) -> bool:
        return self not in (SpaceKind.PRESSURE_P1, SpaceKind.CONST_P0)

    @property
    def local_size(self) -> int:
        return _LOCAL_SIZE[self]

    def degree(self, op: str) -> int:
        """Полиномиальная степень результата оператора op на ячейке."""
        try:
            return _DEGREES[self][op]
        except KeyError:
            raise SpaceError(f"оператор '{op}' не определён для {self.value}")


_LOCAL_SIZE = {
    SpaceKind.VELOCITY_MINI: 15,
    SpaceKind.PRESSURE_P1: 4,
    SpaceKind.ANGULAR_P1: 12,
    SpaceKind.EDGE_NE0: 6,
    SpaceKind.FACE_RT0: 4,
    SpaceKind.CONST_P0: 1,
}

_DEGREES = {
    SpaceKind.VELOCITY_MINI: {"value": 4, "grad": 3, "curl": 3, "div": 3},
    SpaceKind.PRESSURE_P1: {"value": 1, "grad": 0},
    SpaceKind.ANGULAR_P1: {"value": 1, "grad": 0, "curl": 0, "div": 0},
    SpaceKind.EDGE_NE0: {"value": 1, "curl": 0},
    SpaceKind.FACE_RT0: {"value": 1, "div": 0},
    SpaceKind.CONST_P0: {"value": 0},
}


@dataclass(frozen=True, eq=False)
class DofMap:
    """
    Нумерация степеней свободы одного пространства.

    Attributes:
        kind: Тип пространства
        mesh: Сетка
        n_dofs: Полное число степеней свободы (включая закреплённые)
        cell_dofs: Глобальные номера локальных функций (nc, nloc)
        cell_signs: Знаки ориентации локальных функций (nc, nloc)
        constrained: Закреплённые главными условиями степени свободы
        free: Свободные степени свободы
        mean_constraint: Накладывается ли условие нулевого среднего
        normal_constrained: Для RT0 - закреплён ли нормальный след
        tangential_constrained: Для NE0 - закреплён ли касательный след
    """

    kind: SpaceKind
    mesh: Mesh
    n_dofs: int
    cell_dofs: np.ndarray
    cell_signs: np.ndarray
    constrained: np.ndarray
    free: np.ndarray
    mean_constraint: bool = False
    normal_constrained: bool = False
    tangential_constrained: bool = False
    _mean_weights: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def n_free(self) -> int:
        """Число свободных степеней свободы (формулы размерностей пространств)."""
        return len(self.free)

    def mean_weights(self) -> np.ndarray:
        """Вектор c_i = интеграл базисной функции i по области."""
        if "c" not in self._mean_weights:
            if self.kind is SpaceKind.CONST_P0:
                weights = np.array(self.mesh.volumes, dtype=float)
            elif self.kind is SpaceKind.PRESSURE_P1:
                weights = np.bincount(
                    self.cell_dofs.ravel(),
                    weights=np.repeat(self.mesh.volumes / 4.0, 4),
                    minlength=self.n_dofs,
                )
            else:
                raise SpaceError(f"среднее не определено для {self.kind.value}")
            weights.setflags(write=False)
            self._mean_weights["c"] = weights
        return self._mean_weights["c"]

    def __repr__(self) -> str:
        return (
            f"DofMap(kind={self.kind.value}, n_dofs={self.n_dofs}, "
            f"n_free={self.n_free}, mean={self.mean_constraint})"
        )


def build_dofmap(
    kind: SpaceKind,
    mesh: Mesh,
    constrain_normal: bool = True,
    constrain_tangential: bool = True,
) -> DofMap:
    """
    Построить нумерацию степеней свободы.

    Args:
        kind: Тип пространства
        mesh: Сетка
        constrain_normal: Для FACE_RT0 - закреплять ли нормальный след
        constrain_tangential: Для EDGE_NE0 - закреплять ли касательный след

    Returns:
        DofMap с закреплёнными степенями свободы на границе
    """
    nv, nc = mesh.n_vertices, mesh.n_cells
    cells = np.asarray(mesh.cells)
    bverts = np.flatnonzero(mesh.boundary_vertex_mask)
    signs = None
    mean = False
    normal_constrained = False
    tangential_constrained = False

    if kind is SpaceKind.VELOCITY_MINI:
        stride = nv + nc
        scalar = np.concatenate([cells, nv + np.arange(nc)[:, None]], axis=1)
        cell_dofs = np.concatenate([c * stride + scalar for c in range(3)], axis=1)
        n_dofs = 3 * stride
        constrained = np.concatenate([c * stride + bverts for c in range(3)])
    elif kind is SpaceKind.ANGULAR_P1:
        cell_dofs = np.concatenate([c * nv + cells for c in range(3)], axis=1)
        n_dofs = 3 * nv
        constrained = np.concatenate([c * nv + bverts for c in range(3)])
    elif kind is SpaceKind.PRESSURE_P1:
        cell_dofs = cells.copy()
        n_dofs = nv
        constrained = np.array([], dtype=int)
        mean = True
    elif kind is SpaceKind.EDGE_NE0:
        cell_dofs = np.array(mesh.cell_edges)
        signs = np.array(mesh.cell_edge_signs, dtype=float)
        n_dofs = mesh.n_edges
        tangential_constrained = bool(constrain_tangential)
        if tangential_constrained:
            constrained = np.flatnonzero(mesh.boundary_edge_mask)
        else:
            constrained = np.array([], dtype=int)
    elif kind is SpaceKind.FACE_RT0:
        cell_dofs = np.array(mesh.cell_faces)
        signs = np.array(mesh.cell_face_signs, dtype=float)
        n_dofs = mesh.n_faces
        normal_constrained = bool(constrain_normal)
        if normal_constrained:
            constrained = np.flatnonzero(mesh.boundary_face_mask)
        else:
            constrained = np.array([], dtype=int)
    elif kind is SpaceKind.CONST_P0:
        cell_dofs = np.arange(nc)[:, None]
        n_dofs = nc
        constrained = np.array([], dtype=int)
        mean = True
    else:
        raise SpaceError(f"неизвестный тип пространства {kind!r}")

    if signs is None:
        signs = np.ones(cell_dofs.shape)
    constrained = np.unique(constrained).astype(int)
    free = np.setdiff1d(np.arange(n_dofs), constrained)
    for array in (cell_dofs, signs, constrained, free):
        array.setflags(write=False)
    return DofMap(
        kind=kind,
        mesh=mesh,
        n_dofs=int(n_dofs),
        cell_dofs=cell_dofs,
        cell_signs=signs,
        constrained=constrained,
        free=free,
        mean_constraint=mean,
        normal_constrained=normal_constrained,
        tangential_constrained=tangential_constrained,
    )


# --- табулирование базисов -------------------------------------------------

def _vector_of_scalars(values, grads, op):
    """Векторное пространство (s e_c) из скалярных функций; индекс c * ns + s."""
    eye = np.eye(3)
    ns = values.shape[-1]
    if op == "value":
        out = np.einsum("qs,cd->qcsd", values, eye)
        return out.reshape(values.shape[0], 3 * ns, 3)[None]
    if op == "grad":
        out = np.einsum("xqsj,ci->xqcsij", grads, eye)
        return out.reshape(grads.shape[0], grads.shape[1], 3 * ns, 3, 3)
    if op == "curl":
        out = np.cross(grads[:, :, None, :, :], eye[None, None, :, None, :])
        return out.reshape(grads.shape[0], grads.shape[1], 3 * ns, 3)
    if op == "div":
        out = np.transpose(grads, (0, 1, 3, 2))
        return out.reshape(grads.shape[0], grads.shape[1], 3 * ns)
    raise SpaceError(f"неизвестный оператор '{op}'")


def _mini_scalars(points, gl):
    """Значения и градиенты P1 + пузырь: (nq, 5) и (nc, nq, 5, 3)."""
    nq = len(points)
    partial = np.empty((nq, 4))
    for j in range(4):
        partial[:, j] = np.prod(np.delete(points, j, axis=1), axis=1)
    bubble = 256.0 * np.prod(points, axis=1)
    values = np.concatenate([points, bubble[:, None]], axis=1)
    p1_grads = np.broadcast_to(gl[:, None, :, :], (gl.shape[0], nq, 4, 3))
    bubble_grad = 256.0 * np.einsum("qj,cjd->cqd", partial, gl)
    grads = np.concatenate([p1_grads, bubble_grad[:, :, None, :]], axis=2)
    return values, grads


def tabulate(
    dofmap: DofMap,
    points: np.ndarray,
    op: str = "value",
    cells=slice(None),
) -> np.ndarray:
    """
    Значения оператора op от локальных базисных функций.

    Args:
        dofmap: Нумерация пространства
        points: Барицентрические точки (nq, 4)
        op: "value", "grad", "curl" или "div"
        cells: Срез или индексы ячеек

    Returns:
        Массив (nc, nq, nloc, *shape) с учётом знаков ориентации;
        shape = () для скаляров и дивергенции, (3,) для векторов,
        (3, 3) для градиента векторного поля
    """
    kind = dofmap.kind
    kind.degree(op)
    mesh = dofmap.mesh
    gl = np.asarray(mesh.grad_lambda[cells])
    nc, nq = gl.shape[0], len(points)

    if kind is SpaceKind.PRESSURE_P1:
        if op == "value":
            out = np.broadcast_to(points[None], (nc, nq, 4))
        else:
            out = np.broadcast_to(gl[:, None], (nc, nq, 4, 3))
    elif kind is SpaceKind.CONST_P0:
        out = np.ones((nc, nq, 1))
    elif kind is SpaceKind.ANGULAR_P1:
        grads = np.broadcast_to(gl[:, None], (nc, nq, 4, 3))
        out = _vector_of_scalars(points, grads, op)
    elif kind is SpaceKind.VELOCITY_MINI:
        values, grads = _mini_scalars(points, gl)
        out = _vector_of_scalars(values, grads, op)
    elif kind is SpaceKind.EDGE_NE0:
        a, b = LOCAL_EDGES[:, 0], LOCAL_EDGES[:, 1]
        if op == "value":
            out = (points[None, :, a, None] * gl[:, None, b, :]
                   - points[None, :, b, None] * gl[:, None, a, :])
        else:
            curl = 2.0 * np.cross(gl[:, a, :], gl[:, b, :])
            out = np.broadcast_to(curl[:, None], (nc, nq, 6, 3))
    elif kind is SpaceKind.FACE_RT0:
        volumes = np.asarray(mesh.volumes[cells])
        if op == "value":
            corners = mesh.vertices[mesh.cells[cells]]
            x = np.einsum("qa,cad->cqd", points, corners)
            out = (x[:, :, None, :] - corners[:, None, :, :]) / (
                3.0 * volumes[:, None, None, None]
            )
        else:
            out = np.broadcast_to((1.0 / volumes)[:, None, None], (nc, nq, 4))
    else:
        raise SpaceError(f"неизвестный тип пространства {kind!r}")

    out = np.broadcast_to(out, (nc,) + out.shape[1:])
    signs = np.asarray(dofmap.cell_signs[cells])
    signs = signs.reshape(signs.shape[:1] + (1,) + signs.shape[1:]
                          + (1,) * (out.ndim - 3))
    return out * signs


def cell_chunks(n_cells: int, chunk: int) -> Iterable[slice]:
    """Блоки ячеек фиксированного размера в порядке возрастания."""
    for start in range(0, n_cells, chunk):
        yield slice(start, min(start + chunk, n_cells))


# --- конечно-элементные функции ---------------------------------------------

@dataclass(frozen=True, eq=False)
class FeFunction:
    """Дискретное поле: пространство и вектор коэффициентов."""

    dofmap: DofMap
    coeffs: np.ndarray
    t: Optional[float] = None

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.shape != (self.dofmap.n_dofs,):
            raise SpaceError(
                f"длина коэффициентов {coeffs.shape} не равна "
                f"{self.dofmap.n_dofs} для {self.dofmap.kind.value}"
            )
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def kind(self) -> SpaceKind:
        return self.dofmap.kind

    @classmethod
    def zeros(cls, dofmap: DofMap, t: Optional[float] = None) -> "FeFunction":
        return cls(dofmap, np.zeros(dofmap.n_dofs), t)

    def at_points(self, points: np.ndarray, op: str = "value",
                  cells=slice(None)) -> np.ndarray:
        """Значения оператора op в точках (nq, 4) каждой ячейки: (nc, nq, ...)."""
        basis = tabulate(self.dofmap, points, op, cells)
        local = self.coeffs[self.dofmap.cell_dofs[cells]]
        return np.einsum("cqi...,ci->cq...", basis, local)

    def zero_constrained(self) -> "FeFunction":
        """Копия с нулевыми закреплёнными степенями свободы."""
        coeffs = np.array(self.coeffs)
        coeffs[self.dofmap.constrained] = 0.0
        return FeFunction(self.dofmap, coeffs, self.t)

    def with_coeffs(self, coeffs: np.ndarray, t: Optional[float] = None):
        return FeFunction(self.dofmap, coeffs, self.t if t is None else t)


def _as_vector_field(values: np.ndarray, n: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(values, dtype=float), (n, 3))


def interpolate(
    dofmap: DofMap,
    f: Field,
    t: float = 0.0,
    zero_mean: Optional[bool] = None,
) -> FeFunction:
    """
    Классическая интерполяция гладкого поля f(x, t).

    P1 и MINI - значения в вершинах (коэффициенты пузырей равны нулю),
    NE0 - циркуляции по рёбрам, RT0 - потоки через грани, P0 - средние
    по ячейкам (моменты считаются квадратурой степени 8). Закреплённые
    степени свободы не обнуляются.

    Args:
        dofmap: Нумерация пространства
        f: Поле, принимающее точки (..., 3) и время
        t: Момент времени
        zero_mean: Для P0 - вычитать ли среднее (по умолчанию - если
            пространство с условием нулевого среднего)

    Returns:
        FeFunction с полным вектором коэффициентов
    """
    mesh = dofmap.mesh
    kind = dofmap.kind
    verts = np.asarray(mesh.vertices)

    if kind is SpaceKind.PRESSURE_P1:
        coeffs = np.broadcast_to(np.asarray(f(verts, t), float), (len(verts),))
    elif kind in (SpaceKind.ANGULAR_P1, SpaceKind.VELOCITY_MINI):
        nodal = _as_vector_field(f(verts, t), len(verts))
        if kind is SpaceKind.ANGULAR_P1:
            coeffs = nodal.T.ravel()
        else:
            blocks = np.zeros((3, mesh.n_vertices + mesh.n_cells))
            blocks[:, :mesh.n_vertices] = nodal.T
            coeffs = blocks.ravel()
    elif kind is SpaceKind.EDGE_NE0:
        s, w = edge_rule((INTERPOLATION_QUAD_DEGREE + 2) // 2)
        xa, xb = verts[mesh.edges[:, 0]], verts[mesh.edges[:, 1]]
        tangent = xb - xa
        pts = xa[:, None, :] + s[None, :, None] * tangent[:, None, :]
        vals = np.broadcast_to(np.asarray(f(pts, t), float), pts.shape)
        coeffs = np.einsum("g,egd,ed->e", w, vals, tangent)
    elif kind is SpaceKind.FACE_RT0:
        bary, w = triangle_rule(INTERPOLATION_QUAD_DEGREE)
        fv = verts[mesh.faces]
        normal = 0.5 * np.cross(fv[:, 1] - fv[:, 0], fv[:, 2] - fv[:, 0])
        pts = np.einsum("ga,fad->fgd", bary, fv)
        vals = np.broadcast_to(np.asarray(f(pts, t), float), pts.shape)
        coeffs = np.einsum("g,fgd,fd->f", w, vals, normal)
    elif kind is SpaceKind.CONST_P0:
        rule = tetrahedron_rule(INTERPOLATION_QUAD_DEGREE)
        pts = mesh.physical_points(rule.points)
        vals = np.broadcast_to(np.asarray(f(pts, t), float), pts.shape[:2])
        coeffs = np.einsum("q,cq->c", rule.weights, vals) * 6.0
        if dofmap.mean_constraint if zero_mean is None else zero_mean:
            coeffs = coeffs - np.dot(coeffs, mesh.volumes) / mesh.volumes.sum()
    else:
        raise SpaceError(f"неизвестный тип пространства {kind!r}")
    return FeFunction(dofmap, np.array(coeffs, dtype=float), t)


def evaluate(
    fe: FeFunction,
    cell: int,
    bary: Sequence[float],
    ops: Sequence[str] = ("value",),
) -> Dict[str, np.ndarray]:
    """
    Вычислить конечно-элементную функцию в точке ячейки.

    Args:
        fe: Функция
        cell: Индекс ячейки
        bary: Барицентрическая точка (4,)
        ops: Набор операторов ("value", "grad", "curl", "div")

    Returns:
        Словарь op -> значение
    """
    if not 0 <= cell < fe.dofmap.mesh.n_cells:
        raise SpaceError(f"неверный индекс ячейки {cell}")
    point = np.asarray(bary, dtype=float).reshape(1, 4)
    if abs(point.sum() - 1.0) > 1e-12:
        raise SpaceError("барицентрические координаты должны давать в сумме 1")
    cells = slice(cell, cell + 1)
    return {op: fe.at_points(point, op, cells)[0, 0] for op in ops}


# --- матрицы инцидентности точной последовательности ------------------------

def grad_incidence(mesh: Mesh) -> sparse.csr_matrix:
    """G: скалярный P1 -> NE0, (G f)_e = f(b) - f(a)."""
    ne = mesh.n_edges
    rows = np.repeat(np.arange(ne), 2)
    cols = np.asarray(mesh.edges).ravel()
    data = np.tile([-1, 1], ne)
    return sparse.csr_matrix((data, (rows, cols)), shape=(ne, mesh.n_vertices))


def curl_incidence(mesh: Mesh) -> sparse.csr_matrix:
    """C: NE0 -> RT0, циркуляция по границе грани a -> b -> c -> a."""
    nf = mesh.n_faces
    rows = np.repeat(np.arange(nf), 3)
    cols = np.asarray(mesh.face_edges).ravel()
    data = np.tile([1, 1, -1], nf)
    return sparse.csr_matrix((data, (rows, cols)), shape=(nf, mesh.n_edges))


def div_incidence(mesh: Mesh) -> sparse.csr_matrix:
    """D: RT0 -> P0, сумма потоков наружу из ячейки."""
    nc = mesh.n_cells
    rows = np.repeat(np.arange(nc), 4)
    cols = np.asarray(mesh.cell_faces).ravel()
    data = np.asarray(mesh.cell_face_signs).ravel()
    return sparse.csr_matrix((data, (rows, cols)), shape=(nc, mesh.n_faces))
