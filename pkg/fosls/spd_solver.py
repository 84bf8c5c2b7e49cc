"""
对称正定线性系统求解
默认对角（Jacobi）预条件共轭梯度；另有稀疏 LU 直接法和小规模稠密 Cholesky
"""
import logging
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import InvalidArgumentError, NumericalBreakdownError, SolverConvergenceError

logger = logging.getLogger(__name__)

SOLVER_METHODS = ('cg', 'direct', 'dense')
PRECONDITIONERS = ('none', 'diagonal')
DENSE_LIMIT = 6000  # 三场各 2000 个自由度

IterationCallback = Callable[[int, np.ndarray, float], None]


@dataclass(frozen=True)
class SolverConfig:
    """求解器配置"""
    method: str = 'cg'
    tolerance: float = 1e-10  # 相对残差 ‖Ax−b‖/‖b‖
    max_iterations: int = 20000
    preconditioner: str = 'diagonal'

    def __post_init__(self):
        if self.method not in SOLVER_METHODS:
            raise InvalidArgumentError(f"unknown solver method {self.method!r}, expected one of {SOLVER_METHODS}")
        if self.preconditioner not in PRECONDITIONERS:
            raise InvalidArgumentError(
                f"unknown preconditioner {self.preconditioner!r}, expected one of {PRECONDITIONERS}")
        if not (0.0 < self.tolerance < 1.0):
            raise InvalidArgumentError(f"tolerance must lie in (0, 1), got {self.tolerance}")
        if self.max_iterations < 1:
            raise InvalidArgumentError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass
class SolveResult:
    solution: np.ndarray
    iterations: int
    residual: float  # 达到的相对残差
    seconds: float
    method: str


def _check_finite(value, what: str, iterations: Optional[int] = None) -> None:
    if not np.all(np.isfinite(value)):
        raise NumericalBreakdownError(f"non-finite values in {what}", iterations)


def _relative_residual(A, x: np.ndarray, rhs: np.ndarray, rhs_norm: float) -> float:
    r = np.linalg.norm(rhs - A @ x)
    return float(r / rhs_norm) if rhs_norm > 0 else float(r)


def _conjugate_gradient(A, rhs: np.ndarray, config: SolverConfig,
                        callback: Optional[IterationCallback]):
    n = rhs.size
    if config.preconditioner == 'diagonal':
        diagonal = A.diagonal() if sp.issparse(A) else np.diag(A)
        if np.any(~(diagonal > 0)):
            raise NumericalBreakdownError("diagonal preconditioner needs a positive diagonal")
        inv_diag = 1.0 / diagonal
    else:
        inv_diag = np.ones(n)

    rhs_norm = float(np.linalg.norm(rhs))
    x = np.zeros(n)
    if rhs_norm == 0.0:
        return x, 0, 0.0

    r = rhs.copy()
    z = inv_diag * r
    d = z.copy()
    rz = float(r @ z)
    k = 0
    residual = 1.0
    while k < config.max_iterations:
        Ad = A @ d
        curvature = float(d @ Ad)
        if not np.isfinite(curvature) or curvature <= 0.0:
            raise NumericalBreakdownError(f"non-positive curvature {curvature} at CG iteration {k}", k)
        alpha = rz / curvature
        x = x + alpha * d
        r = r - alpha * Ad
        k += 1
        residual = float(np.linalg.norm(r)) / rhs_norm
        _check_finite(residual, "CG residual", k)
        if callback is not None:
            callback(k, x, residual)
        if residual <= config.tolerance:
            return x, k, residual
        z = inv_diag * r
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new

    raise SolverConvergenceError(
        f"CG did not reach tolerance {config.tolerance:g} in {k} iterations (residual {residual:.3e})",
        iterations=k, residual=residual)


def _direct(A, rhs: np.ndarray):
    lu = splu(sp.csc_matrix(A))
    return lu.solve(rhs)


def _dense(A, rhs: np.ndarray):
    n = rhs.size
    if n > DENSE_LIMIT:
        raise InvalidArgumentError(f"dense solver refused for {n} unknowns (limit {DENSE_LIMIT})")
    dense = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
    try:
        factor = scipy.linalg.cho_factor(dense)
    except np.linalg.LinAlgError as e:
        raise NumericalBreakdownError(f"Cholesky factorization failed: {e}")
    return scipy.linalg.cho_solve(factor, rhs)


def solve_spd(A, rhs, config: Optional[SolverConfig] = None,
              callback: Optional[IterationCallback] = None) -> SolveResult:
    """
    求解 Ax = rhs，A 对称正定
    :param callback: 仅 CG 使用，每次迭代调用 callback(iteration, x, relative_residual)
    """
    config = config or SolverConfig()
    rhs = np.asarray(rhs, dtype=float)
    if A.shape != (rhs.size, rhs.size):
        raise InvalidArgumentError(f"matrix shape {A.shape} does not match right-hand side of length {rhs.size}")
    _check_finite(rhs, "right-hand side")
    if sp.issparse(A):
        _check_finite(A.data, "system matrix")
    else:
        _check_finite(A, "system matrix")

    start = time.perf_counter()
    if config.method == 'cg':
        solution, iterations, residual = _conjugate_gradient(A, rhs, config, callback)
    else:
        solution = _direct(A, rhs) if config.method == 'direct' else _dense(A, rhs)
        _check_finite(solution, "solution")
        iterations = 0
        residual = _relative_residual(A, solution, rhs, float(np.linalg.norm(rhs)))
    elapsed = time.perf_counter() - start
    logger.debug(f"{config.method} solve of {rhs.size} unknowns: {iterations} iterations, "
                 f"residual {residual:.3e}, {elapsed:.3f}s")
    return SolveResult(solution=solution, iterations=iterations, residual=residual,
                       seconds=elapsed, method=config.method)
