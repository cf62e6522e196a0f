"""
Сборка билинейных, нелинейных (с замороженным аргументом) и правых частей.

Матрицы собираются по всем степеням свободы, включая закреплённые;
исключение граничных условий выполняется в linsolve. Строки матрицы
отвечают тестовому пространству, столбцы - пробному.
"""

from typing import Callable, Optional, Tuple

import numpy as np
from scipy import sparse

from .constants import CELL_CHUNK, NONLINEAR_QUAD_DEGREE
from .decorators import create_cacher
from .errors import SpaceError
from .mesh import Mesh
from .quadrature import tetrahedron_rule
from .spaces import (
    DofMap,
    FeFunction,
    SpaceKind,
    cell_chunks,
    div_incidence,
    tabulate,
)

Integrand = Callable[[np.ndarray, slice], np.ndarray]

K = SpaceKind

# Пары пространств и операторы для каждого вида формы: kind -> оператор
_COUPLING_FORMS = {
    "pressure_div": {K.VELOCITY_MINI: "div", K.PRESSURE_P1: "value"},
    "p0_div": {K.FACE_RT0: "div", K.CONST_P0: "value"},
    "curl_rt": {K.EDGE_NE0: "curl", K.FACE_RT0: "value"},
    "angular_curl": {K.VELOCITY_MINI: "curl", K.ANGULAR_P1: "value"},
}

_DIAGONAL_FORMS = {
    "mass": ("value", set(SpaceKind)),
    "grad_grad": ("grad", {K.VELOCITY_MINI, K.ANGULAR_P1, K.PRESSURE_P1}),
    "curl_curl": ("curl", {K.VELOCITY_MINI, K.ANGULAR_P1, K.EDGE_NE0}),
    "div_div": ("div", {K.VELOCITY_MINI, K.ANGULAR_P1, K.FACE_RT0}),
}

FORM_KINDS = tuple(_DIAGONAL_FORMS) + tuple(_COUPLING_FORMS)


def _flat(values: np.ndarray) -> np.ndarray:
    """(nc, nq, nloc, ...) -> (nc, nq, nloc, ncomp)."""
    return values.reshape(values.shape[:3] + (-1,))


def _weights(mesh: Mesh, rule, chunk: slice) -> np.ndarray:
    """Веса квадратуры в физической ячейке: (nc, nq)."""
    return 6.0 * mesh.volumes[chunk][:, None] * rule.weights[None, :]


def _scatter(
    test: DofMap,
    trial: DofMap,
    blocks,
) -> sparse.csr_matrix:
    """Сложить локальные матрицы в глобальную; дубликаты суммируются."""
    rows, cols, data = [], [], []
    for chunk, local in blocks:
        test_dofs = test.cell_dofs[chunk]
        trial_dofs = trial.cell_dofs[chunk]
        rows.append(np.broadcast_to(test_dofs[:, :, None], local.shape).ravel())
        cols.append(np.broadcast_to(trial_dofs[:, None, :], local.shape).ravel())
        data.append(local.ravel())
    matrix = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(test.n_dofs, trial.n_dofs),
    )
    return matrix.tocsr()


def _check_same_mesh(*dofmaps: DofMap) -> Mesh:
    mesh = dofmaps[0].mesh
    if any(dm.mesh is not mesh for dm in dofmaps[1:]):
        raise SpaceError("пространства построены на разных сетках")
    return mesh


def _resolve_ops(form: str, trial: DofMap, test: DofMap) -> Tuple[str, str]:
    if form in _DIAGONAL_FORMS:
        op, allowed = _DIAGONAL_FORMS[form]
        if trial.kind is not test.kind or trial.kind not in allowed:
            raise SpaceError(
                f"форма '{form}' не определена для пары "
                f"{trial.kind.value} / {test.kind.value}"
            )
        return op, op
    if form in _COUPLING_FORMS:
        ops = _COUPLING_FORMS[form]
        if trial.kind is test.kind or trial.kind not in ops or test.kind not in ops:
            raise SpaceError(
                f"форма '{form}' не определена для пары "
                f"{trial.kind.value} / {test.kind.value}"
            )
        return ops[trial.kind], ops[test.kind]
    raise SpaceError(f"неизвестная форма '{form}'")


def assemble_bilinear(
    form: str,
    trial: DofMap,
    test: DofMap,
    degree: Optional[int] = None,
) -> sparse.csr_matrix:
    """
    Собрать матрицу билинейной формы.

    Args:
        form: Вид формы: mass, grad_grad, curl_curl, div_div, pressure_div,
            p0_div, curl_rt, angular_curl
        trial: Пробное пространство (столбцы)
        test: Тестовое пространство (строки)
        degree: Степень квадратуры; по умолчанию точная для формы

    Returns:
        CSR матрица (test.n_dofs, trial.n_dofs)

    Raises:
        SpaceError: Для несовместимой пары пространств
    """
    trial_op, test_op = _resolve_ops(form, trial, test)
    mesh = _check_same_mesh(trial, test)
    if degree is None:
        degree = trial.kind.degree(trial_op) + test.kind.degree(test_op)
    rule = tetrahedron_rule(degree)

    def blocks():
        for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
            phi = _flat(tabulate(trial, rule.points, trial_op, chunk))
            psi = _flat(tabulate(test, rule.points, test_op, chunk))
            weights = _weights(mesh, rule, chunk)
            yield chunk, np.einsum("cq,cqik,cqjk->cij", weights, psi, phi)

    return _scatter(test, trial, blocks())


def assemble_convection(
    w: FeFunction,
    space: DofMap,
    degree: int = NONLINEAR_QUAD_DEGREE,
) -> sparse.csr_matrix:
    """
    Кососимметризованная конвекция N(w): (N x, y) = b(w, x, y).

    b(w, v, s) = 1/2 [((w . grad) v, s) - ((w . grad) s, v)],
    поэтому N = (L - L^T) / 2 и x^T N x = 0 при любой квадратуре.
    """
    if space.kind not in (K.VELOCITY_MINI, K.ANGULAR_P1):
        raise SpaceError(f"конвекция не определена для {space.kind.value}")
    mesh = _check_same_mesh(w.dofmap, space)
    rule = tetrahedron_rule(degree)

    def blocks():
        for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
            wq = w.at_points(rule.points, "value", chunk)
            values = tabulate(space, rule.points, "value", chunk)
            grads = tabulate(space, rule.points, "grad", chunk)
            advected = np.einsum("cqjab,cqb->cqja", grads, wq)
            weights = _weights(mesh, rule, chunk)
            yield chunk, np.einsum("cq,cqia,cqja->cij", weights, values, advected)

    lower = _scatter(space, space, blocks())
    return ((lower - lower.T) * 0.5).tocsr()


def assemble_c_form(
    v: FeFunction,
    space: DofMap,
    degree: int = NONLINEAR_QUAD_DEGREE,
) -> sparse.csr_matrix:
    """
    Матрица X(v) формы c(v, m, F) = 1/2 [(m . v, div F) - (F . v, div m)].

    Строки - тестовое F, столбцы - пробное m.
    """
    if space.kind is not K.FACE_RT0:
        raise SpaceError("c-форма определена только для граневых элементов")
    mesh = _check_same_mesh(v.dofmap, space)
    rule = tetrahedron_rule(degree)

    def blocks():
        for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
            vq = v.at_points(rule.points, "value", chunk)
            values = tabulate(space, rule.points, "value", chunk)
            divs = tabulate(space, rule.points, "div", chunk)
            projected = np.einsum("cqja,cqa->cqj", values, vq)
            weights = _weights(mesh, rule, chunk)
            yield chunk, np.einsum("cq,cqi,cqj->cij", weights, divs, projected)

    half = _scatter(space, space, blocks())
    return ((half - half.T) * 0.5).tocsr()


def assemble_cross(
    w: FeFunction,
    a_space: DofMap,
    b_space: DofMap,
    a_op: str = "value",
    b_op: str = "value",
    degree: int = NONLINEAR_QUAD_DEGREE,
) -> sparse.csr_matrix:
    """
    Матрица перекрёстного члена: элемент (i, j) = (w x op_a phi_j, op_b psi_i).

    Args:
        w: Замороженное векторное поле
        a_space: Пробное пространство (столбцы)
        b_space: Тестовое пространство (строки)
        a_op: "value" или "curl" (ротор скорости MINI)
        b_op: "value" или "curl"
        degree: Степень квадратуры

    Raises:
        SpaceError: Для скалярных пространств или неподдерживаемого оператора
    """
    for space, op in ((a_space, a_op), (b_space, b_op)):
        if not space.kind.is_vector:
            raise SpaceError(f"векторное произведение со скаляром {space.kind.value}")
        if op not in ("value", "curl"):
            raise SpaceError(f"оператор '{op}' не поддерживается")
        space.kind.degree(op)
    if not w.kind.is_vector:
        raise SpaceError("замороженное поле должно быть векторным")
    mesh = _check_same_mesh(w.dofmap, a_space, b_space)
    rule = tetrahedron_rule(degree)

    def blocks():
        for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
            wq = w.at_points(rule.points, "value", chunk)
            phi = tabulate(a_space, rule.points, a_op, chunk)
            psi = tabulate(b_space, rule.points, b_op, chunk)
            crossed = np.cross(wq[:, :, None, :], phi)
            weights = _weights(mesh, rule, chunk)
            yield chunk, np.einsum("cq,cqia,cqja->cij", weights, psi, crossed)

    return _scatter(b_space, a_space, blocks())


def assemble_functional(
    integrand: Integrand,
    test: DofMap,
    op: str = "value",
    degree: int = NONLINEAR_QUAD_DEGREE,
) -> np.ndarray:
    """
    Вектор (g, op psi_i), где g задано в квадратурных точках.

    Args:
        integrand: Функция (points, chunk) -> значения (nc, nq[, 3])
        test: Тестовое пространство
        op: Оператор над тестовыми функциями
        degree: Степень квадратуры

    Returns:
        Вектор длины test.n_dofs
    """
    mesh = test.mesh
    rule = tetrahedron_rule(degree)
    out = np.zeros(test.n_dofs)
    for chunk in cell_chunks(mesh.n_cells, CELL_CHUNK):
        psi = _flat(tabulate(test, rule.points, op, chunk))
        g = np.asarray(integrand(rule.points, chunk), dtype=float)
        g = g.reshape(g.shape[:2] + (-1,))
        if g.shape[-1] != psi.shape[-1]:
            raise SpaceError(
                f"размерность подынтегрального выражения {g.shape[-1]} "
                f"не совпадает с {psi.shape[-1]}"
            )
        weights = _weights(mesh, rule, chunk)
        local = np.einsum("cq,cqik,cqk->ci", weights, psi, g)
        np.add.at(out, test.cell_dofs[chunk].ravel(), local.ravel())
    return out


def assemble_load(
    f: Callable[[np.ndarray, float], np.ndarray],
    test: DofMap,
    t: float,
    degree: int = 8,
) -> np.ndarray:
    """Вектор (f(., t), psi_i) для аналитического поля f."""
    mesh = test.mesh

    def integrand(points, chunk):
        x = mesh.physical_points(points, chunk)
        values = np.asarray(f(x, t), dtype=float)
        shape = x.shape if test.kind.is_vector else x.shape[:2]
        return np.broadcast_to(values, shape)

    return assemble_functional(integrand, test, "value", degree)


def fe_product(fn: Callable[..., np.ndarray], *fields, ops=None) -> Integrand:
    """
    Подынтегральное выражение из конечно-элементных полей.

    fn получает значения полей в квадратурных точках в порядке аргументов.
    """
    ops = ops or ("value",) * len(fields)

    def integrand(points, chunk):
        values = [fe.at_points(points, op, chunk) for fe, op in zip(fields, ops)]
        return fn(*values)

    return integrand


class Operators:
    """
    Постоянные матрицы дискретизации с кешированием по ключу.

    Матрицы не зависят от выбора закреплённых степеней свободы,
    поэтому одна матрица массы RT0 служит и для m, и для H.
    """

    def __init__(self, dofmaps):
        self.dofmaps = dofmaps
        self.mesh = next(iter(dofmaps.values())).mesh
        self._cache = create_cacher()

    def _space(self, kind: SpaceKind) -> DofMap:
        try:
            return self.dofmaps[kind]
        except KeyError:
            raise SpaceError(f"пространство {kind.value} не зарегистрировано")

    def bilinear(self, form: str, trial: SpaceKind, test: SpaceKind):
        """Закешированная матрица assemble_bilinear(form, trial, test)."""
        return self._cache(
            (form, trial, test),
            lambda: assemble_bilinear(form, self._space(trial), self._space(test)),
        )

    def mass(self, kind: SpaceKind):
        return self.bilinear("mass", kind, kind)

    def grad_grad(self, kind: SpaceKind):
        return self.bilinear("grad_grad", kind, kind)

    def curl_curl(self, kind: SpaceKind):
        return self.bilinear("curl_curl", kind, kind)

    def div_div(self, kind: SpaceKind):
        return self.bilinear("div_div", kind, kind)

    def div(self):
        """D: RT0 -> P0, (div G, r) = D для базиса r = 1 на ячейке."""
        return self._cache("div_incidence", lambda: div_incidence(self.mesh))

    def stats(self):
        return self._cache.stats()
