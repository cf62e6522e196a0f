"""
Решение разреженных систем подшагов.

Условия нулевого среднего добавляются окаймлением: столбец и строка
с интегралами базисных функций и один скалярный множитель Лагранжа.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as spla

from .errors import SingularMatrixError, SolverError
from .models import SolverOptions
from .spaces import DofMap

REFINEMENT_STEPS = 2


@dataclass
class LinearSystem:
    """
    Разреженная система A x = b с окаймляющими ограничениями.

    Attributes:
        matrix: Квадратная матрица
        rhs: Правая часть
        constraints: Векторы c_k; добавляются условия c_k . x = 0
        options: Настройки решателя
    """

    matrix: sparse.spmatrix
    rhs: np.ndarray
    constraints: List[np.ndarray] = field(default_factory=list)
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        n_rows, n_cols = self.matrix.shape
        if n_rows != n_cols:
            raise SolverError(f"матрица не квадратная: {self.matrix.shape}")
        if len(self.rhs) != n_rows:
            raise SolverError(
                f"длина правой части {len(self.rhs)} не равна {n_rows}"
            )
        for vector in self.constraints:
            if len(vector) != n_rows:
                raise SolverError("длина вектора ограничения не совпадает")

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def augmented(self):
        """Матрица и правая часть с окаймлением."""
        if not self.constraints:
            return sparse.csc_matrix(self.matrix), np.asarray(self.rhs, float)
        border = sparse.csc_matrix(np.column_stack(self.constraints))
        n_extra = border.shape[1]
        corner = sparse.csc_matrix((n_extra, n_extra))
        matrix = sparse.bmat(
            [[self.matrix, border], [border.T, corner]],
            format="csc",
        )
        rhs = np.concatenate([self.rhs, np.zeros(n_extra)])
        return matrix, rhs


def _relative_residual(matrix, x, rhs, rhs_norm) -> float:
    return float(np.linalg.norm(matrix @ x - rhs) / rhs_norm)


def _solve_direct(matrix, rhs, options: SolverOptions, rhs_norm: float):
    try:
        lu = spla.splu(matrix)
    except RuntimeError as e:
        raise SingularMatrixError(f"факторизация не удалась: {e}")
    x = lu.solve(rhs)
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("решение содержит нечисловые значения")
    residual = _relative_residual(matrix, x, rhs, rhs_norm)
    for _ in range(REFINEMENT_STEPS):
        if residual <= options.tol:
            break
        x = x + lu.solve(rhs - matrix @ x)
        residual = _relative_residual(matrix, x, rhs, rhs_norm)
    return x, residual


def _solve_iterative(matrix, rhs, options: SolverOptions, rhs_norm: float):
    try:
        ilu = spla.spilu(matrix, drop_tol=1e-5, fill_factor=20)
    except RuntimeError as e:
        raise SingularMatrixError(f"неполная факторизация не удалась: {e}")
    preconditioner = spla.LinearOperator(matrix.shape, ilu.solve)
    x, info = spla.gmres(
        matrix,
        rhs,
        M=preconditioner,
        rtol=options.tol,
        atol=0.0,
        restart=200,
        maxiter=options.max_iter,
    )
    residual = _relative_residual(matrix, x, rhs, rhs_norm)
    if info < 0:
        raise SolverError("GMRES: некорректный ввод или срыв", residual)
    return x, residual


def solve(system: LinearSystem) -> np.ndarray:
    """
    Решить систему с окаймляющими ограничениями.

    Args:
        system: Линейная система

    Returns:
        Решение x длины system.size (множители отброшены)

    Raises:
        SingularMatrixError: Если матрица структурно вырождена
        SolverError: Если относительная невязка выше допуска
    """
    matrix, rhs = system.augmented()
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros(system.size)

    if system.options.method == "direct":
        x, residual = _solve_direct(matrix, rhs, system.options, rhs_norm)
    else:
        x, residual = _solve_iterative(matrix, rhs, system.options, rhs_norm)

    if not residual <= system.options.tol:
        raise SolverError(
            f"метод '{system.options.method}' не достиг допуска "
            f"{system.options.tol:.1e}",
            residual,
        )
    return x[:system.size]


def solve_saddle(
    blocks: Sequence[Sequence[Optional[sparse.spmatrix]]],
    rhs: Sequence[np.ndarray],
    dofmaps: Sequence[DofMap],
    fixed: Optional[Sequence[Optional[np.ndarray]]] = None,
    mean_blocks: Optional[Sequence[int]] = None,
    options: Optional[SolverOptions] = None,
) -> List[np.ndarray]:
    """
    Решить блочную систему с исключением закреплённых степеней свободы.

    Строки и столбцы закреплённых степеней свободы удаляются; их заданные
    значения переносятся в правую часть. Для блоков из mean_blocks
    добавляется условие нулевого среднего.

    Args:
        blocks: Матрица блоков (None - нулевой блок); блок (i, j)
            имеет размер (dofmaps[i].n_dofs, dofmaps[j].n_dofs)
        rhs: Правые части по блокам (полной длины)
        dofmaps: Пространства неизвестных по блокам
        fixed: Полные векторы заданных значений по блокам (None - нули)
        mean_blocks: Номера блоков с условием среднего; по умолчанию
            блоки, у пространства которых mean_constraint
        options: Настройки решателя

    Returns:
        Список полных векторов коэффициентов по блокам
    """
    sizes = [dm.n_dofs for dm in dofmaps]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    if len(blocks) != len(dofmaps) or len(rhs) != len(dofmaps):
        raise SolverError("число блоков не совпадает с числом пространств")
    fixed = fixed or [None] * len(dofmaps)
    if mean_blocks is None:
        mean_blocks = [i for i, dm in enumerate(dofmaps) if dm.mean_constraint]

    sized_blocks = [
        [
            blocks[i][j]
            if blocks[i][j] is not None
            else (sparse.csr_matrix((sizes[i], sizes[j])) if i == j else None)
            for j in range(len(dofmaps))
        ]
        for i in range(len(dofmaps))
    ]
    matrix = sparse.bmat(sized_blocks, format="csr")
    b = np.concatenate([np.asarray(r, dtype=float) for r in rhs])

    free = np.concatenate([offsets[i] + dm.free for i, dm in enumerate(dofmaps)])
    fixed_idx = np.concatenate(
        [offsets[i] + dm.constrained for i, dm in enumerate(dofmaps)]
    ).astype(int)
    values = np.zeros(offsets[-1])
    for i, dm in enumerate(dofmaps):
        if fixed[i] is not None:
            values[offsets[i]:offsets[i + 1]] = fixed[i]
    x_fixed = values[fixed_idx]

    reduced = matrix[free][:, free]
    b_free = b[free]
    if len(fixed_idx) and np.any(x_fixed):
        b_free = b_free - matrix[free][:, fixed_idx] @ x_fixed

    constraints = []
    for i in mean_blocks:
        full = np.zeros(offsets[-1])
        full[offsets[i]:offsets[i + 1]] = dofmaps[i].mean_weights()
        constraints.append(full[free])

    system = LinearSystem(
        matrix=reduced,
        rhs=b_free,
        constraints=constraints,
        options=options or SolverOptions(),
    )
    x = values.copy()
    x[free] = solve(system)
    return [x[offsets[i]:offsets[i + 1]] for i in range(len(dofmaps))]
