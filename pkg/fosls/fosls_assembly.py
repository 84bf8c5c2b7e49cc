"""
加权 FOSLS 系统组装
a(U,V) = <ℒU, ℒV>_β，右端 <ℱ, ℒV>_β，ℱ = (0, b^{-1/2} f, 0)

重标度（默认）未知量为 (u, w̃)，w̃ = √ε∇u：
    r₁ = w̃ − √ε∇u
    r₂ = −√ε b^{-1/2} ∇·w̃ + b^{1/2} u
    r₃ = ε^{(k−1)/2} (∂w̃₂/∂x − ∂w̃₁/∂y)
不重标度时未知量为 (u, w)，w = ∇u：
    r₁ = √ε(w − ∇u)，r₂ = −ε b^{-1/2} ∇·w + b^{1/2} u，r₃ = ε^{k/2} ∇×w
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgumentError
from .fe_space import FeSpace
from .problem_interface import ProblemSpec
from .reference_element import QuadratureRule, ReferenceBasis, eval_basis, push_forward
from .weight_function import WeightSpec, beta_eval

logger = logging.getLogger(__name__)

N_RESIDUAL_COMPONENTS = 4  # r₁ₓ, r₁ᵧ, r₂, r₃
N_NORM_COMPONENTS = 7  # u, √ε∂ₓu, √ε∂ᵧu, w₁, w₂, div, curl
DEFAULT_CHUNK_SIZE = 1024


class Scalings(NamedTuple):
    """残差各行中 w 项的系数"""
    gradient: float  # ∇u 前的 √ε
    flux: float  # r₁ 中 w 的系数
    divergence: float  # r₂ 中 ∇·w 的系数（不含 b^{-1/2}）
    curl: float  # r₃ 的系数


@dataclass(frozen=True, eq=False)
class FoslsOperatorSpec:
    """一次组装所需的全部输入"""
    problem: ProblemSpec
    weight: WeightSpec
    space: FeSpace
    rule: QuadratureRule
    k: float = 2.0
    rescaled: bool = True
    workers: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE

    def __post_init__(self):
        if not math.isfinite(self.k):
            raise InvalidArgumentError(f"curl weight exponent k must be a real number, got {self.k}")
        if not math.isclose(self.weight.epsilon, self.problem.epsilon, rel_tol=1e-12):
            raise InvalidArgumentError(
                f"weight epsilon {self.weight.epsilon} does not match problem epsilon {self.problem.epsilon}")
        if self.weight.dims != 2:
            raise InvalidArgumentError(f"assembly needs a two-dimensional weight, got dims={self.weight.dims}")
        if self.workers < 1:
            raise InvalidArgumentError(f"workers must be >= 1, got {self.workers}")
        if self.chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size must be >= 1, got {self.chunk_size}")

    @property
    def epsilon(self) -> float:
        return self.problem.epsilon

    @property
    def scalings(self) -> Scalings:
        eps = self.epsilon
        root = math.sqrt(eps)
        if self.rescaled:
            return Scalings(gradient=root, flux=1.0, divergence=root, curl=eps ** ((self.k - 1.0) / 2.0))
        return Scalings(gradient=root, flux=root, divergence=eps, curl=eps ** (self.k / 2.0))


def norm_weights(spec: FoslsOperatorSpec) -> Tuple[float, float, float, float, float]:
    """
    平衡范数五项 (u, ∇u, w, ∇·w, ∇×w) 的系数
    重标度时为 (1, ε, 1, ε, ε^{k−1})，否则为 (1, ε, ε, ε², ε^k)
    """
    s = spec.scalings
    return 1.0, s.gradient ** 2, s.flux ** 2, s.divergence ** 2, s.curl ** 2


@dataclass
class AssembledSystem:
    """
    组装结果
    matrix/rhs 已消去约束自由度；raw_* 为消去前的量，用于最小二乘泛函
    """
    matrix: sp.csr_matrix
    rhs: np.ndarray
    raw_matrix: sp.csr_matrix
    raw_rhs: np.ndarray
    load_norm_sq: float  # ‖ℱ‖²_β
    constrained_dofs: np.ndarray
    seconds: float = 0.0

    @property
    def n_dofs(self) -> int:
        return self.matrix.shape[0]


class ElementGeometry(NamedTuple):
    x: np.ndarray  # (ne, nq) 物理坐标
    y: np.ndarray
    values: np.ndarray  # (nq, nb)
    dx: np.ndarray  # (ne, nq, nb) 物理导数
    dy: np.ndarray
    jxw: np.ndarray  # (ne, nq) Jacobian 测度 × 求积权


def element_geometry(space: FeSpace, elements: np.ndarray, ref_points: np.ndarray,
                     ref_weights: np.ndarray, values: np.ndarray, d_xi: np.ndarray,
                     d_eta: np.ndarray) -> ElementGeometry:
    mesh = space.mesh
    hx = mesh.hx[elements]
    hy = mesh.hy[elements]
    ref_grads = np.stack((d_xi, d_eta), axis=-1)
    grads, measure = push_forward(hx, hy, ref_grads[None])
    x = mesh.x0[elements][:, None] + 0.5 * hx[:, None] * (ref_points[None, :, 0] + 1.0)
    y = mesh.y0[elements][:, None] + 0.5 * hy[:, None] * (ref_points[None, :, 1] + 1.0)
    jxw = measure[:, None] * ref_weights[None, :]
    return ElementGeometry(x, y, values, grads[..., 0], grads[..., 1], jxw)


def _reaction_at(problem: ProblemSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    b = np.broadcast_to(np.asarray(problem.reaction(x, y), dtype=float), x.shape)
    if np.any(~(b > 0)):
        raise InvalidArgumentError("reaction coefficient must be positive at every quadrature point")
    return b


def _residual_rows(spec: FoslsOperatorSpec, geo: ElementGeometry, reaction: np.ndarray) -> np.ndarray:
    """
    每个局部基函数（三场共 3·nb 个）在每个积分点上的残差分量
    :return: (ne, nq, 3·nb, 4)
    """
    s = spec.scalings
    ne, nq, nb = geo.dx.shape
    sqrt_b = np.sqrt(reaction)[..., None]
    inv_sqrt_b = 1.0 / sqrt_b
    phi = np.broadcast_to(geo.values[None], (ne, nq, nb))
    rows = np.zeros((ne, nq, 3 * nb, N_RESIDUAL_COMPONENTS))
    u, w1, w2 = slice(0, nb), slice(nb, 2 * nb), slice(2 * nb, 3 * nb)

    rows[:, :, u, 0] = -s.gradient * geo.dx
    rows[:, :, u, 1] = -s.gradient * geo.dy
    rows[:, :, u, 2] = sqrt_b * phi

    rows[:, :, w1, 0] = s.flux * phi
    rows[:, :, w1, 2] = -s.divergence * inv_sqrt_b * geo.dx
    rows[:, :, w1, 3] = -s.curl * geo.dy

    rows[:, :, w2, 1] = s.flux * phi
    rows[:, :, w2, 2] = -s.divergence * inv_sqrt_b * geo.dy
    rows[:, :, w2, 3] = s.curl * geo.dx
    return rows


def _norm_rows(spec: FoslsOperatorSpec, geo: ElementGeometry) -> np.ndarray:
    """范数 Gram 矩阵的分量行，平方和即为五项加权范数 :return: (ne, nq, 3·nb, 7)"""
    s = spec.scalings
    ne, nq, nb = geo.dx.shape
    phi = np.broadcast_to(geo.values[None], (ne, nq, nb))
    rows = np.zeros((ne, nq, 3 * nb, N_NORM_COMPONENTS))
    u, w1, w2 = slice(0, nb), slice(nb, 2 * nb), slice(2 * nb, 3 * nb)

    rows[:, :, u, 0] = phi
    rows[:, :, u, 1] = s.gradient * geo.dx
    rows[:, :, u, 2] = s.gradient * geo.dy

    rows[:, :, w1, 3] = s.flux * phi
    rows[:, :, w1, 5] = s.divergence * geo.dx
    rows[:, :, w1, 6] = -s.curl * geo.dy

    rows[:, :, w2, 4] = s.flux * phi
    rows[:, :, w2, 5] = s.divergence * geo.dy
    rows[:, :, w2, 6] = s.curl * geo.dx
    return rows


def _local_matrices(rows: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """Σ_q Σ_c weight·rows_i·rows_j，按单元批量 :return: (ne, 3nb, 3nb)"""
    ne, nq, nl, nc = rows.shape
    flat = rows.transpose(0, 2, 1, 3).reshape(ne, nl, nq * nc)
    weighted = (rows * weight[:, :, None, None]).transpose(0, 2, 1, 3).reshape(ne, nl, nq * nc)
    return np.matmul(weighted, flat.transpose(0, 2, 1))


def local_residual_rows(spec: FoslsOperatorSpec, element: int, point: Sequence[float]) -> np.ndarray:
    """
    单元 element 上参考坐标 point 处，ℒ 作用于每个局部基向量的残差分量
    局部顺序与 FeSpace.element_dofs 一致：[u 基函数, w₁ 基函数, w₂ 基函数]
    :return: (3·(p+1)², 4)，列为 (r₁ₓ, r₁ᵧ, r₂, r₃)
    """
    space = spec.space
    if not (0 <= element < space.mesh.n_elements):
        raise InvalidArgumentError(f"element {element} outside mesh with {space.mesh.n_elements} elements")
    values, grads = eval_basis(space.degree, point)
    geo = element_geometry(space, np.array([element]), np.asarray(point, dtype=float)[None, :],
                           np.ones(1), values[None, :], grads[None, :, 0], grads[None, :, 1])
    reaction = _reaction_at(spec.problem, geo.x, geo.y)
    return _residual_rows(spec, geo, reaction)[0, 0]


def element_chunks(n_elements: int, chunk_size: int) -> List[np.ndarray]:
    return [np.arange(start, min(start + chunk_size, n_elements))
            for start in range(0, n_elements, chunk_size)]


def _scatter(space: FeSpace, elements: np.ndarray, local: np.ndarray) -> sp.coo_matrix:
    dofs = space.element_dofs(elements)
    nl = dofs.shape[1]
    rows = np.repeat(dofs, nl, axis=1).ravel()
    cols = np.tile(dofs, (1, nl)).ravel()
    chunk = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(space.n_dofs, space.n_dofs))
    chunk.sum_duplicates()
    return chunk


def _run_chunks(spec: FoslsOperatorSpec, kernel: Callable[[np.ndarray], tuple]) -> list:
    """按单元块执行 kernel；结果按块顺序返回，与线程数无关"""
    chunks = element_chunks(spec.space.mesh.n_elements, spec.chunk_size)
    if spec.workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as executor:
            return list(executor.map(kernel, chunks))
    return [kernel(chunk) for chunk in chunks]


def _merge(space: FeSpace, parts: Sequence[sp.coo_matrix]) -> sp.csr_matrix:
    """按块顺序合并，并以上三角镜像保证严格对称"""
    data = np.concatenate([part.data for part in parts])
    rows = np.concatenate([part.row for part in parts])
    cols = np.concatenate([part.col for part in parts])
    matrix = sp.coo_matrix((data, (rows, cols)), shape=(space.n_dofs, space.n_dofs)).tocsr()
    upper = sp.triu(matrix, format='csr')
    return (upper + sp.triu(matrix, k=1, format='csr').T).tocsr()


def _assembly_basis(spec: FoslsOperatorSpec) -> ReferenceBasis:
    return ReferenceBasis(spec.space.degree, spec.rule)


def _raw_system(spec: FoslsOperatorSpec) -> Tuple[sp.csr_matrix, np.ndarray, float]:
    basis = _assembly_basis(spec)
    space = spec.space

    def kernel(elements: np.ndarray):
        geo = element_geometry(space, elements, spec.rule.points, spec.rule.weights,
                              basis.values, basis.d_xi, basis.d_eta)
        reaction = _reaction_at(spec.problem, geo.x, geo.y)
        beta = beta_eval(spec.weight, np.stack((geo.x, geo.y), axis=-1))
        weight = beta * geo.jxw
        rows = _residual_rows(spec, geo, reaction)
        source = np.broadcast_to(np.asarray(spec.problem.source(geo.x, geo.y), dtype=float), geo.x.shape)
        load = weight * source / np.sqrt(reaction)  # β·b^{-1/2}f·|J|·w
        local_rhs = np.einsum('eqi,eq->ei', rows[..., 2], load)
        load_norm = float(np.sum(weight * source ** 2 / reaction))
        return _scatter(space, elements, _local_matrices(rows, weight)), elements, local_rhs, load_norm

    parts = _run_chunks(spec, kernel)
    matrix = _merge(space, [part[0] for part in parts])
    rhs = np.zeros(space.n_dofs)
    for _, elements, local_rhs, _ in parts:
        np.add.at(rhs, space.element_dofs(elements).ravel(), local_rhs.ravel())
    load_norm_sq = math.fsum(part[3] for part in parts)
    return matrix, rhs, load_norm_sq


def apply_dirichlet(matrix: sp.spmatrix, rhs: Optional[np.ndarray],
                    boundary: np.ndarray) -> Tuple[sp.csr_matrix, Optional[np.ndarray]]:
    """
    对称消去：边界行列置零，对角置 1，右端置零（齐次边界值）
    """
    n = matrix.shape[0]
    boundary = np.asarray(boundary, dtype=int)
    if boundary.size and (boundary.min() < 0 or boundary.max() >= n):
        raise InvalidArgumentError(f"boundary index out of range for system of size {n}")
    keep = np.ones(n)
    keep[boundary] = 0.0
    mask = sp.diags(keep)
    eliminated = (mask @ matrix @ mask + sp.diags(1.0 - keep)).tocsr()
    eliminated.eliminate_zeros()
    if rhs is None:
        return eliminated, None
    return eliminated, np.asarray(rhs, dtype=float) * keep


def assemble_system(spec: FoslsOperatorSpec) -> AssembledSystem:
    """
    组装 A 与右端，并消去 u 场边界与切向通量自由度
    """
    start = time.perf_counter()
    raw_matrix, raw_rhs, load_norm_sq = _raw_system(spec)
    matrix, rhs = apply_dirichlet(raw_matrix, raw_rhs, spec.space.constrained_dofs)
    elapsed = time.perf_counter() - start
    logger.info(f"Assembled FOSLS system: {matrix.shape[0]} DOFs, {matrix.nnz} nonzeros, "
                f"eps={spec.epsilon:g}, p={spec.space.degree}, q={spec.rule.q}, {elapsed:.2f}s")
    return AssembledSystem(matrix=matrix, rhs=rhs, raw_matrix=raw_matrix, raw_rhs=raw_rhs,
                           load_norm_sq=load_norm_sq, constrained_dofs=spec.space.constrained_dofs,
                           seconds=elapsed)


def assemble_norm_gram(spec: FoslsOperatorSpec, eliminate: bool = True) -> sp.csr_matrix:
    """
    平衡范数的 Gram 矩阵 M：xᵀMx = |||U|||²_β，消去方式与 A 相同
    """
    basis = _assembly_basis(spec)
    space = spec.space

    def kernel(elements: np.ndarray):
        geo = element_geometry(space, elements, spec.rule.points, spec.rule.weights,
                              basis.values, basis.d_xi, basis.d_eta)
        beta = beta_eval(spec.weight, np.stack((geo.x, geo.y), axis=-1))
        return _scatter(space, elements, _local_matrices(_norm_rows(spec, geo), beta * geo.jxw))

    gram = _merge(space, _run_chunks(spec, kernel))
    if eliminate:
        gram, _ = apply_dirichlet(gram, None, space.constrained_dofs)
    logger.debug(f"Assembled norm Gram matrix: {gram.shape[0]} DOFs, {gram.nnz} nonzeros")
    return gram


def least_squares_functional(system: AssembledSystem, x: np.ndarray) -> float:
    """J(x) = ‖ℒx − ℱ‖²_β = xᵀAx − 2 rhsᵀx + ‖ℱ‖²_β，用消去前的矩阵"""
    x = np.asarray(x, dtype=float)
    if x.shape != system.raw_rhs.shape:
        raise InvalidArgumentError(f"vector has shape {x.shape}, expected {system.raw_rhs.shape}")
    return float(x @ (system.raw_matrix @ x) - 2.0 * (system.raw_rhs @ x) + system.load_norm_sq)


def restrict_to_free(matrix: sp.spmatrix, space: FeSpace) -> sp.csr_matrix:
    """取非边界自由度对应的子矩阵"""
    free = space.free_dofs
    return sp.csr_matrix(matrix)[free][:, free]


def export_coordinate(matrix: sp.spmatrix, path: str) -> int:
    """
    坐标格式导出：每行 `row col value`，0 起始，上下三角都写出
    :return: 写出的非零元数
    """
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, 'w') as f:
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            f.write(f"{r} {c} {v:.17g}\n")
    logger.info(f"Exported {coo.nnz} entries of {matrix.shape[0]}x{matrix.shape[1]} matrix to {path}")
    return int(coo.nnz)
