"""
误差测量与收敛率
- 平衡 β 范数误差（五项分解），求积阶比组装高 2
- 节点最大模误差
- 相邻 N 的误差缩减率与 (N⁻¹ln N)^m 理论值
- 矫顽/连续常数的 Rayleigh 商审计
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import InvalidArgumentError, UnsupportedOperationError
from .fe_space import FeSpace, SystemField
from .fosls_assembly import FoslsOperatorSpec, element_chunks, element_geometry, norm_weights, restrict_to_free
from .reference_element import MAX_GAUSS_POINTS, ReferenceBasis, gauss_rule
from .spd_solver import DENSE_LIMIT
from .weight_function import beta_eval

logger = logging.getLogger(__name__)

NORM_COMPONENTS = ('u', 'grad_u', 'flux', 'div', 'curl')
ERROR_QUADRATURE_INCREMENT = 2


@dataclass
class ErrorReport:
    """单个 (ε, N, p) 计算的结果"""
    epsilon: float
    n: int
    degree: int
    beta_norm_error: float = math.nan
    max_norm_error: float = math.nan
    components: Dict[str, float] = field(default_factory=dict)  # 五项平方范数
    iterations: int = 0
    residual: float = math.nan
    solve_seconds: float = math.nan
    status: str = 'ok'
    message: str = ''

    @property
    def failed(self) -> bool:
        return self.status != 'ok'

    @classmethod
    def failure(cls, epsilon: float, n: int, degree: int, message: str, iterations: int = 0,
                residual: float = math.nan) -> 'ErrorReport':
        return cls(epsilon=epsilon, n=n, degree=degree, iterations=iterations, residual=residual,
                   status='failed', message=message)


def _error_rule(spec: FoslsOperatorSpec, q: Optional[int]):
    if q is None:
        q = min(spec.rule.q + ERROR_QUADRATURE_INCREMENT, MAX_GAUSS_POINTS)
    return gauss_rule(q)


def beta_norm_error(field_h: SystemField, spec: FoslsOperatorSpec,
                    q: Optional[int] = None) -> Tuple[float, Dict[str, float]]:
    """
    |||U* − U_h|||_β 及其五项平方分量
    精确通量：重标度时 w̃* = √ε∇u*，否则 w* = ∇u*；精确旋度为零
    :param q: 每方向积分点数，默认组装阶 + 2
    :return: (范数, {分量名: 加权平方积分})
    """
    exact = spec.problem.exact
    if exact is None:
        raise UnsupportedOperationError(f"problem {spec.problem.name!r} has no exact solution")
    space = spec.space
    if field_h.space is not space:
        raise InvalidArgumentError("discrete field belongs to a different FE space")
    rule = _error_rule(spec, q)
    basis = ReferenceBasis(space.degree, rule)
    coefficients = field_h.coefficients
    nb = space.n_local
    scale = math.sqrt(spec.epsilon) if spec.rescaled else 1.0
    weights = norm_weights(spec)
    totals = np.zeros(len(NORM_COMPONENTS))

    for elements in element_chunks(space.mesh.n_elements, spec.chunk_size):
        geo = element_geometry(space, elements, rule.points, rule.weights,
                               basis.values, basis.d_xi, basis.d_eta)
        local = coefficients[space.element_dofs(elements)]
        cu, c1, c2 = local[:, :nb], local[:, nb:2 * nb], local[:, 2 * nb:]

        uh = cu @ basis.values.T
        uh_x = np.einsum('eqb,eb->eq', geo.dx, cu)
        uh_y = np.einsum('eqb,eb->eq', geo.dy, cu)
        w1h = c1 @ basis.values.T
        w2h = c2 @ basis.values.T
        div_h = np.einsum('eqb,eb->eq', geo.dx, c1) + np.einsum('eqb,eb->eq', geo.dy, c2)
        curl_h = np.einsum('eqb,eb->eq', geo.dx, c2) - np.einsum('eqb,eb->eq', geo.dy, c1)

        u = exact.value(geo.x, geo.y)
        gx, gy = exact.gradient(geo.x, geo.y)
        lap = exact.laplacian(geo.x, geo.y)

        weight = beta_eval(spec.weight, np.stack((geo.x, geo.y), axis=-1)) * geo.jxw
        squares = (
            (u - uh) ** 2,
            (gx - uh_x) ** 2 + (gy - uh_y) ** 2,
            (scale * gx - w1h) ** 2 + (scale * gy - w2h) ** 2,
            (scale * lap - div_h) ** 2,
            curl_h ** 2,
        )
        totals += [float(np.sum(weight * sq)) for sq in squares]

    components = {name: coef * value for name, coef, value in zip(NORM_COMPONENTS, weights, totals)}
    norm = math.sqrt(math.fsum(components.values()))
    return norm, components


def max_norm_error(u_h: np.ndarray, exact, space: FeSpace) -> float:
    """全部 u 场节点（含 p>=2 的单元内部节点）上的最大绝对误差"""
    u_h = np.asarray(u_h, dtype=float)
    if u_h.shape != (space.n_field,):
        raise InvalidArgumentError(f"expected {space.n_field} nodal values, got {u_h.shape}")
    x, y = space.node_coordinates()
    return float(np.max(np.abs(exact.value(x, y) - u_h)))


def reduction_rates(errors: Sequence[float]) -> List[float]:
    """相邻误差之比 err(N_i)/err(N_{i−1})"""
    errors = [float(e) for e in errors]
    if len(errors) < 2:
        raise InvalidArgumentError(f"need at least two errors to form a rate, got {len(errors)}")
    rates = []
    for previous, current in zip(errors[:-1], errors[1:]):
        if previous == 0.0:
            raise InvalidArgumentError("zero error cannot be used as a rate denominator")
        rates.append(current / previous)
    return rates


def expected_rate(m: int, n: int) -> float:
    """
    (N⁻¹ln N)^m 模型在 N/2 → N 时的理论缩减率
    """
    if m not in (1, 2, 3, 4):
        raise InvalidArgumentError(f"rate exponent must be in 1..4, got {m}")
    if n < 4:
        raise InvalidArgumentError(f"N must be >= 4, got {n}")
    half = n / 2.0
    return ((math.log(n) / n) / (math.log(half) / half)) ** m


@dataclass
class RayleighAudit:
    """随机向量上的 xᵀAx / xᵀMx 及 xᵀAy / (‖x‖_M‖y‖_M)"""
    samples: int
    min_quotient: float
    max_quotient: float
    max_continuity_ratio: float


def rayleigh_quotient_audit(A: sp.spmatrix, M: sp.spmatrix, space: FeSpace,
                            rng: np.random.Generator, samples: int = 100) -> RayleighAudit:
    """约束自由度为零的随机向量上的广义 Rayleigh 商"""
    if samples < 1:
        raise InvalidArgumentError(f"samples must be >= 1, got {samples}")
    A = sp.csr_matrix(A)
    M = sp.csr_matrix(M)
    n = A.shape[0]
    quotients = np.empty(samples)
    continuity = np.empty(samples)
    for i in range(samples):
        x = rng.standard_normal(n)
        y = rng.standard_normal(n)
        x[space.constrained_dofs] = 0.0
        y[space.constrained_dofs] = 0.0
        xm = float(x @ (M @ x))
        ym = float(y @ (M @ y))
        quotients[i] = float(x @ (A @ x)) / xm
        continuity[i] = abs(float(x @ (A @ y))) / math.sqrt(xm * ym)
    audit = RayleighAudit(samples=samples, min_quotient=float(quotients.min()),
                          max_quotient=float(quotients.max()),
                          max_continuity_ratio=float(continuity.max()))
    logger.debug(f"Rayleigh audit: {audit}")
    return audit


def generalized_eigenvalue_bounds(A: sp.spmatrix, M: sp.spmatrix, space: FeSpace) -> Tuple[float, float]:
    """自由自由度上 Ax = λMx 的最小与最大特征值（稠密，小规模）"""
    free_a = restrict_to_free(A, space)
    free_m = restrict_to_free(M, space)
    n = free_a.shape[0]
    if n > DENSE_LIMIT:
        raise InvalidArgumentError(f"dense eigensolve refused for {n} unknowns (limit {DENSE_LIMIT})")
    eigenvalues = scipy.linalg.eigh(free_a.toarray(), free_m.toarray(), eigvals_only=True)
    return float(eigenvalues[0]), float(eigenvalues[-1])
