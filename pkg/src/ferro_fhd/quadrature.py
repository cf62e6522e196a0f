"""
Квадратурные формулы на эталонных симплексах.

Объёмные формулы тетраэдра строятся как коническое произведение
Гаусса - Якоби (схема Строуда): все веса положительны, точность 2n - 1.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@dataclass(frozen=True)
class QuadratureRule:
    """
    Квадратурная формула на эталонном тетраэдре.

    Attributes:
        points: Барицентрические координаты (nq, 4)
        weights: Веса (nq,), сумма равна объёму 1/6
        degree: Степень точности
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def size(self) -> int:
        return len(self.weights)


def _gauss_jacobi_01(n: int, alpha: float):
    """Узлы и веса на [0,1] с весом (1-s)^alpha."""
    t, w = roots_jacobi(n, alpha, 0.0)
    s = (1.0 + t) / 2.0
    return s, w / 2.0 ** (alpha + 1.0)


@lru_cache(maxsize=None)
def tetrahedron_rule(degree: int) -> QuadratureRule:
    """
    Формула для тетраэдра, точная для многочленов степени degree.

    Args:
        degree: Требуемая степень точности (>= 0)

    Returns:
        Правило коническое произведение с n = ceil((degree + 1) / 2) узлами
        на направление
    """
    n = max(1, (degree + 2) // 2)
    a, wa = _gauss_jacobi_01(n, 2.0)
    b, wb = _gauss_jacobi_01(n, 1.0)
    c, wc = _gauss_jacobi_01(n, 0.0)

    A, B, C = np.meshgrid(a, b, c, indexing="ij")
    W = np.einsum("i,j,k->ijk", wa, wb, wc)
    x = A
    y = B * (1.0 - A)
    z = C * (1.0 - A) * (1.0 - B)
    ref = np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1)
    bary = np.concatenate([1.0 - ref.sum(axis=1, keepdims=True), ref], axis=1)
    points = np.ascontiguousarray(bary)
    weights = W.ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, degree=2 * n - 1)


@lru_cache(maxsize=None)
def triangle_rule(degree: int = 2) -> tuple:
    """
    Формула на треугольнике: барицентрические точки (nq, 3) и веса
    в долях площади (сумма 1).

    Для degree <= 2 - симметричная 3-точечная формула, иначе
    коническое произведение Гаусса - Якоби.
    """
    if degree <= 2:
        points = np.array([
            [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
            [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
        ])
        weights = np.full(3, 1.0 / 3.0)
    else:
        n = (degree + 2) // 2
        a, wa = _gauss_jacobi_01(n, 1.0)
        b, wb = _gauss_jacobi_01(n, 0.0)
        A, B = np.meshgrid(a, b, indexing="ij")
        x, y = A.ravel(), (B * (1.0 - A)).ravel()
        points = np.stack([1.0 - x - y, x, y], axis=1)
        weights = 2.0 * np.outer(wa, wb).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


@lru_cache(maxsize=None)
def edge_rule(n_points: int = 2) -> tuple:
    """Формула Гаусса на ребре: параметры s на [0,1] и веса (сумма 1)."""
    t, w = np.polynomial.legendre.leggauss(n_points)
    points, weights = (1.0 + t) / 2.0, w / 2.0
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights
