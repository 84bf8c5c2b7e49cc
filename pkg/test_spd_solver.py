#!/usr/bin/env python3
"""
测试对称正定求解器：CG、直接法、稠密法与异常路径
"""
import numpy as np
import pytest
import scipy.sparse as sp

from fosls.errors import InvalidArgumentError, NumericalBreakdownError, SolverConvergenceError
from fosls.spd_solver import DENSE_LIMIT, SolverConfig, solve_spd


def _random_spd(n: int, seed: int = 0) -> np.ndarray:
    g = np.random.default_rng(seed).standard_normal((n, n))
    return g.T @ g + np.eye(n)


def test_identity_system():
    rhs = np.arange(1.0, 6.0)
    result = solve_spd(sp.identity(5, format='csr'), rhs)
    np.testing.assert_allclose(result.solution, rhs)
    assert result.iterations == 1
    assert result.method == 'cg'


def test_diagonal_two_by_two():
    result = solve_spd(sp.csr_matrix(np.diag([2.0, 3.0])), np.array([2.0, 3.0]))
    np.testing.assert_allclose(result.solution, [1.0, 1.0])


@pytest.mark.parametrize("method", ['cg', 'direct', 'dense'])
def test_random_spd_matches_dense_solve(method):
    a = _random_spd(50)
    rhs = np.random.default_rng(1).standard_normal(50)
    expected = np.linalg.solve(a, rhs)
    config = SolverConfig(method=method, tolerance=1e-13)
    result = solve_spd(sp.csr_matrix(a), rhs, config)
    np.testing.assert_allclose(result.solution, expected, rtol=1e-9, atol=1e-9)
    assert result.residual < 1e-10


def test_cg_energy_error_is_monotone():
    """CG 的 A 范数误差单调不增"""
    a = _random_spd(40, seed=3)
    rhs = np.random.default_rng(4).standard_normal(40)
    exact = np.linalg.solve(a, rhs)
    energies = []

    def record(k, x, residual):
        e = x - exact
        energies.append(float(e @ a @ e))

    solve_spd(a, rhs, SolverConfig(tolerance=1e-12), callback=record)
    assert len(energies) > 1
    for previous, current in zip(energies[:-1], energies[1:]):
        assert current <= previous * (1 + 1e-10) + 1e-20


def test_preconditioner_does_not_change_solution():
    a = sp.csr_matrix(_random_spd(30, seed=5) + np.diag(np.linspace(1, 100, 30)))
    rhs = np.ones(30)
    plain = solve_spd(a, rhs, SolverConfig(preconditioner='none', tolerance=1e-12))
    jacobi = solve_spd(a, rhs, SolverConfig(preconditioner='diagonal', tolerance=1e-12))
    np.testing.assert_allclose(plain.solution, jacobi.solution, rtol=1e-8, atol=1e-10)


def test_zero_rhs_returns_zero_without_iterations():
    result = solve_spd(sp.identity(4, format='csr'), np.zeros(4))
    np.testing.assert_array_equal(result.solution, 0.0)
    assert result.iterations == 0


def test_iteration_limit_raises():
    a = sp.csr_matrix(_random_spd(20, seed=6))
    with pytest.raises(SolverConvergenceError) as info:
        solve_spd(a, np.ones(20), SolverConfig(max_iterations=1, preconditioner='none'))
    assert info.value.iterations == 1
    assert info.value.residual > 0


def test_non_finite_input_raises():
    with pytest.raises(NumericalBreakdownError):
        solve_spd(sp.identity(3, format='csr'), np.array([1.0, np.nan, 0.0]))
    with pytest.raises(NumericalBreakdownError):
        solve_spd(sp.csr_matrix(np.diag([1.0, np.inf])), np.ones(2))


def test_indefinite_matrix_breaks_down():
    a = sp.csr_matrix(np.diag([1.0, -1.0]))
    with pytest.raises(NumericalBreakdownError):
        solve_spd(a, np.ones(2), SolverConfig(preconditioner='none'))
    with pytest.raises(NumericalBreakdownError):
        solve_spd(a, np.ones(2), SolverConfig(method='dense'))


@pytest.mark.parametrize("kwargs", [
    dict(method='gmres'),
    dict(preconditioner='ilu'),
    dict(tolerance=0.0),
    dict(tolerance=1.5),
    dict(max_iterations=0),
])
def test_config_validation(kwargs):
    with pytest.raises(InvalidArgumentError):
        SolverConfig(**kwargs)


def test_shape_mismatch_and_dense_limit():
    with pytest.raises(InvalidArgumentError):
        solve_spd(sp.identity(3, format='csr'), np.ones(4))
    n = DENSE_LIMIT + 1
    with pytest.raises(InvalidArgumentError):
        solve_spd(sp.identity(n, format='csr'), np.ones(n), SolverConfig(method='dense'))
