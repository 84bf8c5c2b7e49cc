#!/usr/bin/env python3
"""
测试加权 FOSLS 组装：局部残差、对称正定性、边界消去、最小二乘性质、并行一致性
"""
import dataclasses
import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from fosls.convergence_study import DiscretizationSettings, build_operator
from fosls.errors import InvalidArgumentError
from fosls.fe_space import FluxBoundary, SystemField, interpolate
from fosls.fosls_assembly import (FoslsOperatorSpec, apply_dirichlet, assemble_norm_gram, assemble_system,
                                  export_coordinate, least_squares_functional, local_residual_rows,
                                  norm_weights, restrict_to_free)
from fosls.spd_solver import SolverConfig, solve_spd
from fosls.weight_function import WeightSpec, coercivity_constants


def _operator(epsilon=1e-2, n=4, p=1, **kwargs):
    return build_operator(epsilon, n, DiscretizationSettings(degree=p, **kwargs))


def _max_asymmetry(matrix):
    diff = matrix - matrix.T
    return 0.0 if diff.nnz == 0 else float(abs(diff).max())


def test_spec_validation():
    spec = _operator()
    with pytest.raises(InvalidArgumentError):
        dataclasses.replace(spec, k=math.inf)
    with pytest.raises(InvalidArgumentError):
        dataclasses.replace(spec, weight=WeightSpec.from_gamma(1e-4, 0.5))
    with pytest.raises(InvalidArgumentError):
        dataclasses.replace(spec, workers=0)


def test_norm_weights():
    eps = 1e-4
    rescaled = _operator(epsilon=eps, k=3.0)
    np.testing.assert_allclose(norm_weights(rescaled), [1.0, eps, 1.0, eps, eps ** 2], rtol=1e-12)
    plain = _operator(epsilon=eps, rescaled=False)
    np.testing.assert_allclose(norm_weights(plain), [1.0, eps, eps, eps ** 2, eps ** 2], rtol=1e-12)


def test_constant_u_gives_unit_reaction_residual():
    """u ≡ 1，w̃ ≡ 0：r₁ = 0，r₂ = b^{1/2} = 1，r₃ = 0"""
    spec = _operator()
    nb = spec.space.n_local
    rows = local_residual_rows(spec, 5, (0.3, -0.2))
    assert rows.shape == (3 * nb, 4)
    np.testing.assert_allclose(rows[:nb].sum(axis=0), [0.0, 0.0, 1.0, 0.0], atol=1e-12)


def test_constant_flux_residual():
    """w̃ ≡ (1, 0)：r₁ = (1, 0)，散度与旋度为零"""
    spec = _operator()
    nb = spec.space.n_local
    rows = local_residual_rows(spec, 0, (0.0, 0.0))
    np.testing.assert_allclose(rows[nb:2 * nb].sum(axis=0), [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_curl_sign():
    """w̃ = (−y, x) 的旋度为 +2，按 ε^{(k−1)/2} 缩放"""
    epsilon = 1e-2
    spec = _operator(epsilon=epsilon, p=2)
    nb = spec.space.n_local
    element = 6
    x, y = spec.space.node_coordinates()
    nodes = spec.space.element_nodes[element]
    coefficients = np.concatenate((np.zeros(nb), -y[nodes], x[nodes]))
    rows = local_residual_rows(spec, element, (0.4, 0.1))
    residual = coefficients @ rows
    assert residual[3] == pytest.approx(2.0 * math.sqrt(epsilon), rel=1e-10)
    # 散度为零
    assert residual[2] == pytest.approx(0.0, abs=1e-12)


def test_local_residual_rows_rejects_bad_element():
    spec = _operator()
    with pytest.raises(InvalidArgumentError):
        local_residual_rows(spec, spec.space.mesh.n_elements, (0.0, 0.0))


@pytest.mark.parametrize("rescaled", [True, False])
@pytest.mark.parametrize("flux_boundary", list(FluxBoundary))
def test_system_is_symmetric_positive_definite(rescaled, flux_boundary):
    spec = _operator(epsilon=1e-4, rescaled=rescaled, flux_boundary=flux_boundary)
    system = assemble_system(spec)
    assert system.n_dofs == spec.space.n_dofs
    assert _max_asymmetry(system.matrix) == 0.0
    assert _max_asymmetry(system.raw_matrix) == 0.0
    eigenvalues = np.linalg.eigvalsh(restrict_to_free(system.matrix, spec.space).toarray())
    assert eigenvalues[0] > 0.0
    np.testing.assert_array_equal(system.rhs[spec.space.constrained_dofs], 0.0)


def test_norm_gram_is_symmetric_positive_definite():
    spec = _operator(epsilon=1e-4, p=2)
    gram = assemble_norm_gram(spec)
    assert _max_asymmetry(gram) == 0.0
    assert np.linalg.eigvalsh(gram.toarray())[0] > 0.0


def test_apply_dirichlet_all_dofs_gives_identity():
    rng = np.random.default_rng(2)
    g = rng.standard_normal((6, 6))
    matrix = sp.csr_matrix(g @ g.T)
    eliminated, rhs = apply_dirichlet(matrix, np.ones(6), np.arange(6))
    np.testing.assert_array_equal(eliminated.toarray(), np.eye(6))
    np.testing.assert_array_equal(rhs, 0.0)


def test_apply_dirichlet_keeps_symmetry():
    rng = np.random.default_rng(4)
    g = rng.standard_normal((8, 8))
    matrix = sp.csr_matrix(g @ g.T + np.eye(8))
    eliminated, rhs = apply_dirichlet(matrix, np.arange(8.0), np.array([0, 3]))
    dense = eliminated.toarray()
    np.testing.assert_array_equal(dense, dense.T)
    assert dense[3, 3] == 1.0 and dense[3, 5] == 0.0
    assert rhs[0] == 0.0 and rhs[4] == 4.0
    with pytest.raises(InvalidArgumentError):
        apply_dirichlet(matrix, None, np.array([8]))


def test_zero_source_gives_zero_solution():
    spec = _operator(epsilon=1e-6, problem='zero')
    system = assemble_system(spec)
    np.testing.assert_array_equal(system.rhs, 0.0)
    assert system.load_norm_sq == 0.0
    result = solve_spd(system.matrix, system.rhs)
    np.testing.assert_array_equal(result.solution, 0.0)


def test_discrete_solution_minimizes_functional():
    """离散解处 J 最小：任意满足边界条件的扰动都使 J 增大"""
    spec = _operator(epsilon=1e-3, n=8)
    system = assemble_system(spec)
    x = solve_spd(system.matrix, system.rhs, SolverConfig(method='dense')).solution
    base = least_squares_functional(system, x)
    assert base >= 0.0
    rng = np.random.default_rng(8)
    for _ in range(5):
        delta = 1e-3 * rng.standard_normal(x.size)
        delta[spec.space.constrained_dofs] = 0.0
        assert least_squares_functional(system, x + delta) > base


def test_interpolant_residual_decreases_with_refinement():
    epsilon = 1e-2
    values = []
    for n in (4, 8, 16):
        spec = _operator(epsilon=epsilon, n=n)
        system = assemble_system(spec)
        exact = spec.problem.exact
        field = interpolate(spec.space, exact, epsilon)
        values.append(least_squares_functional(system, field.coefficients))
    assert values[0] > values[1] > values[2] > 0.0


def test_functional_rejects_wrong_shape():
    system = assemble_system(_operator())
    with pytest.raises(InvalidArgumentError):
        least_squares_functional(system, np.zeros(3))


def test_threaded_assembly_is_bit_identical():
    spec = dataclasses.replace(_operator(epsilon=1e-6, n=8, p=2), chunk_size=5)
    threaded = dataclasses.replace(spec, workers=4)
    serial_system = assemble_system(spec)
    threaded_system = assemble_system(threaded)
    np.testing.assert_array_equal(serial_system.matrix.indptr, threaded_system.matrix.indptr)
    np.testing.assert_array_equal(serial_system.matrix.indices, threaded_system.matrix.indices)
    np.testing.assert_array_equal(serial_system.matrix.data, threaded_system.matrix.data)
    np.testing.assert_array_equal(serial_system.rhs, threaded_system.rhs)
    assert serial_system.load_norm_sq == threaded_system.load_norm_sq


def test_export_coordinate(tmp_path):
    matrix = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 3.0]]))
    path = tmp_path / 'matrix.txt'
    assert export_coordinate(matrix, str(path)) == 4
    assert path.read_text().splitlines() == ['0 0 2', '0 1 1', '1 0 1', '1 1 3']


def test_rayleigh_quotients_within_coercivity_bounds():
    """随机向量上 xᵀAx/xᵀMx ∈ [c_min, 2]；广义特征值为正"""
    spec = _operator(epsilon=1e-4, n=8)
    system = assemble_system(spec)
    gram = assemble_norm_gram(spec)
    c_min, c_cont = coercivity_constants(1.0, 1.0, spec.weight.C)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.standard_normal(spec.space.n_dofs)
        x[spec.space.constrained_dofs] = 0.0
        quotient = (x @ (system.matrix @ x)) / (x @ (gram @ x))
        assert c_min <= quotient <= 2.0 + 1e-12
        assert quotient <= c_cont
    free_a = restrict_to_free(system.matrix, spec.space).toarray()
    free_m = restrict_to_free(gram, spec.space).toarray()
    assert scipy.linalg.eigh(free_a, free_m, eigvals_only=True)[0] > 0.0


def test_system_field_from_solution():
    spec = _operator()
    system = assemble_system(spec)
    result = solve_spd(system.matrix, system.rhs, SolverConfig(method='direct'))
    field = SystemField(spec.space, result.solution)
    np.testing.assert_allclose(field.coefficients[spec.space.constrained_dofs], 0.0, atol=1e-14)


def test_tangential_flux_boundary_restricts_minimization():
    """切向约束缩小试探空间：J 的最小值不降，约束自由度上解为零"""
    epsilon = 1e-6
    outcomes = {}
    for flux_boundary in FluxBoundary:
        spec = _operator(epsilon=epsilon, n=16, flux_boundary=flux_boundary)
        system = assemble_system(spec)
        x = solve_spd(system.matrix, system.rhs, SolverConfig(method='direct')).solution
        outcomes[flux_boundary] = (least_squares_functional(system, x), spec, x)
    natural_j, natural_spec, _ = outcomes[FluxBoundary.NATURAL]
    tangential_j, tangential_spec, tangential_x = outcomes[FluxBoundary.TANGENTIAL]
    assert tangential_j >= natural_j * (1 - 1e-10)
    assert tangential_spec.space.free_dofs.size < natural_spec.space.free_dofs.size
    np.testing.assert_allclose(tangential_x[tangential_spec.space.constrained_dofs], 0.0, atol=1e-14)
