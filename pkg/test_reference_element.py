#!/usr/bin/env python3
"""
测试参考单元：Gauss 求积、Lagrange 基函数、仿射映射
"""
import math

import numpy as np
import pytest

from fosls.errors import InvalidArgumentError
from fosls.reference_element import ReferenceBasis, eval_basis, gauss_rule, lagrange_1d, push_forward


def test_gauss_rule_single_point():
    rule = gauss_rule(1)
    np.testing.assert_allclose(rule.points, [[0.0, 0.0]])
    np.testing.assert_allclose(rule.weights, [4.0])


def test_gauss_rule_two_points():
    rule = gauss_rule(2)
    np.testing.assert_allclose(np.sort(rule.points_1d), [-1 / math.sqrt(3), 1 / math.sqrt(3)])
    np.testing.assert_allclose(rule.weights, np.ones(4))
    assert rule.n_points == 4


def test_gauss_rule_integrates_polynomials():
    """∫x²y² = 4/9，q 点规则对每方向 2q−1 次多项式精确"""
    rule = gauss_rule(2)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.sum(rule.weights * x ** 2 * y ** 2) == pytest.approx(4.0 / 9.0, rel=1e-14)
    rule = gauss_rule(6)
    x, y = rule.points[:, 0], rule.points[:, 1]
    assert np.sum(rule.weights * x ** 10 * y ** 4) == pytest.approx((2 / 11) * (2 / 5), rel=1e-13)


def test_gauss_rule_points_are_x_fastest():
    rule = gauss_rule(3)
    np.testing.assert_allclose(rule.points[:3, 1], rule.points_1d[0])
    np.testing.assert_allclose(rule.points[:3, 0], rule.points_1d)


@pytest.mark.parametrize("q", [0, 13, 2.5])
def test_gauss_rule_rejects_bad_count(q):
    with pytest.raises(InvalidArgumentError):
        gauss_rule(q)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_lagrange_kronecker_property(p):
    nodes = np.linspace(-1, 1, p + 1)
    values, _ = lagrange_1d(p, nodes)
    np.testing.assert_allclose(values, np.eye(p + 1), atol=1e-14)


def test_eval_basis_corner_and_center():
    values, _ = eval_basis(1, (-1.0, -1.0))
    np.testing.assert_allclose(values, [1.0, 0.0, 0.0, 0.0], atol=1e-15)
    values, _ = eval_basis(2, (0.0, 0.0))
    expected = np.zeros(9)
    expected[4] = 1.0
    np.testing.assert_allclose(values, expected, atol=1e-15)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_eval_basis_partition_of_unity(p):
    rng = np.random.default_rng(1)
    for point in rng.uniform(-1, 1, size=(10, 2)):
        values, grads = eval_basis(p, point)
        assert values.sum() == pytest.approx(1.0, abs=1e-13)
        np.testing.assert_allclose(grads.sum(axis=0), [0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_eval_basis_gradient_matches_finite_differences(p):
    h = 1e-5
    rng = np.random.default_rng(7)
    for xi, eta in rng.uniform(-0.9, 0.9, size=(5, 2)):
        _, grads = eval_basis(p, (xi, eta))
        dx = (eval_basis(p, (xi + h, eta))[0] - eval_basis(p, (xi - h, eta))[0]) / (2 * h)
        dy = (eval_basis(p, (xi, eta + h))[0] - eval_basis(p, (xi, eta - h))[0]) / (2 * h)
        np.testing.assert_allclose(grads[:, 0], dx, atol=1e-7)
        np.testing.assert_allclose(grads[:, 1], dy, atol=1e-7)


def test_eval_basis_rejects_bad_input():
    with pytest.raises(InvalidArgumentError):
        eval_basis(4, (0.0, 0.0))
    with pytest.raises(InvalidArgumentError):
        eval_basis(1, (1.5, 0.0))


def test_reference_basis_tables_match_eval_basis():
    rule = gauss_rule(4)
    basis = ReferenceBasis(2, rule)
    assert basis.values.shape == (16, 9)
    for i, point in enumerate(rule.points):
        values, grads = eval_basis(2, point)
        np.testing.assert_allclose(basis.values[i], values, atol=1e-14)
        np.testing.assert_allclose(basis.d_xi[i], grads[:, 0], atol=1e-13)
        np.testing.assert_allclose(basis.d_eta[i], grads[:, 1], atol=1e-13)


def test_push_forward_scaling():
    grads = np.ones((3, 2))
    physical, measure = push_forward(2.0, 2.0, grads)
    np.testing.assert_allclose(physical, grads)
    assert measure == pytest.approx(1.0)
    physical, measure = push_forward(0.5, 0.25, grads)
    np.testing.assert_allclose(physical[:, 0], 4.0)
    np.testing.assert_allclose(physical[:, 1], 8.0)
    assert measure == pytest.approx(1.0 / 32.0)


def test_push_forward_integrates_element_area():
    rule = gauss_rule(2)
    hx, hy = np.array([0.1, 0.3]), np.array([0.2, 0.05])
    _, measure = push_forward(hx, hy, np.zeros((1, 4, 1, 2)))
    np.testing.assert_allclose(measure * rule.weights.sum(), hx * hy)


def test_push_forward_rejects_degenerate_element():
    with pytest.raises(InvalidArgumentError):
        push_forward(0.0, 1.0, np.ones((1, 2)))
