from math import factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.ferro_fhd.quadrature import edge_rule, tetrahedron_rule, triangle_rule


def _monomial_integral(a: int, b: int, c: int) -> float:
    """Интеграл x^a y^b z^c по эталонному тетраэдру."""
    return factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)


@pytest.mark.parametrize("degree", range(0, 10))
def test_weights_sum_to_volume(degree):
    rule = tetrahedron_rule(degree)
    assert rule.weights.sum() == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert np.all(rule.weights > 0)
    assert rule.degree >= degree


@given(st.integers(min_value=1, max_value=8))
@settings(max_examples=8, deadline=None)
def test_exact_for_monomials(degree):
    rule = tetrahedron_rule(degree)
    x, y, z = rule.points[:, 1], rule.points[:, 2], rule.points[:, 3]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            for c in range(degree + 1 - a - b):
                value = np.sum(rule.weights * x**a * y**b * z**c)
                assert value == pytest.approx(_monomial_integral(a, b, c),
                                              rel=1e-12)


def test_points_are_barycentric():
    rule = tetrahedron_rule(8)
    np.testing.assert_allclose(rule.points.sum(axis=1), 1.0, atol=1e-14)
    assert np.all(rule.points >= 0)
    assert rule.size == 125


def test_rules_are_cached():
    assert tetrahedron_rule(6) is tetrahedron_rule(6)


def test_triangle_rule_quadratic():
    points, weights = triangle_rule()
    assert weights.sum() == pytest.approx(1.0)
    # среднее lambda_0^2 и lambda_0 lambda_1 по треугольнику
    assert np.sum(weights * points[:, 0] ** 2) == pytest.approx(1.0 / 6.0)
    assert np.sum(weights * points[:, 0] * points[:, 1]) == pytest.approx(1.0 / 12.0)


@pytest.mark.parametrize("degree", [3, 6, 8])
def test_triangle_rule_high_degree(degree):
    points, weights = triangle_rule(degree)
    assert weights.sum() == pytest.approx(1.0, rel=1e-14)
    np.testing.assert_allclose(points.sum(axis=1), 1.0, atol=1e-14)
    x, y = points[:, 1], points[:, 2]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            # 2 a! b! / (a + b + 2)! в долях площади
            expected = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2)
            assert np.sum(weights * x**a * y**b) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("n_points", [1, 2, 5])
def test_edge_rule(n_points):
    points, weights = edge_rule(n_points)
    assert len(points) == n_points
    for power in range(2 * n_points):
        assert np.sum(weights * points**power) == pytest.approx(1.0 / (power + 1))
