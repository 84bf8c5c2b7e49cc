"""
参考单元 [-1,1]²
张量积 Gauss-Legendre 求积、等距节点 Qp Lagrange 基函数 (p = 1,2,3) 及仿射映射
"""
import logging
from dataclasses import dataclass
from typing import Tuple, Sequence

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

SUPPORTED_DEGREES = (1, 2, 3)
MAX_GAUSS_POINTS = 12


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """二维张量积 Gauss-Legendre 求积规则，积分点按 x 方向最快排列"""
    q: int  # 每个方向的积分点数
    points_1d: np.ndarray  # (q,)
    weights_1d: np.ndarray  # (q,)
    points: np.ndarray  # (q², 2)
    weights: np.ndarray  # (q²,)

    @property
    def n_points(self) -> int:
        return self.q * self.q


def gauss_rule(q: int) -> QuadratureRule:
    """
    生成每个方向 q 个点的张量积 Gauss 规则，对每个方向次数 <= 2q-1 的多项式精确
    :param q: 每个方向的积分点数 (1..12)
    """
    if int(q) != q or not (1 <= q <= MAX_GAUSS_POINTS):
        raise InvalidArgumentError(f"Gauss points per direction must be in 1..{MAX_GAUSS_POINTS}, got {q}")
    q = int(q)
    xi, w = np.polynomial.legendre.leggauss(q)
    px, py = np.meshgrid(xi, xi, indexing='xy')
    points = np.column_stack((px.ravel(), py.ravel()))
    weights = np.outer(w, w).ravel()  # w_y[b]·w_x[a]，a 变化最快
    for arr in (xi, w, points, weights):
        arr.setflags(write=False)
    return QuadratureRule(q=q, points_1d=xi, weights_1d=w, points=points, weights=weights)


def check_degree(p: int) -> int:
    if int(p) != p or int(p) not in SUPPORTED_DEGREES:
        raise InvalidArgumentError(f"unsupported polynomial degree {p}, expected one of {SUPPORTED_DEGREES}")
    return int(p)


def lagrange_nodes(p: int) -> np.ndarray:
    """[-1,1] 上的 p+1 个等距节点"""
    return np.linspace(-1.0, 1.0, check_degree(p) + 1)


def lagrange_1d(p: int, xi) -> Tuple[np.ndarray, np.ndarray]:
    """
    一维 Lagrange 基函数及其导数
    :return: (values, derivatives)，形状均为 (len(xi), p+1)
    """
    nodes = lagrange_nodes(p)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = p + 1
    values = np.ones((xi.size, n))
    derivs = np.zeros((xi.size, n))
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for j in others:
            values[:, i] *= (xi - nodes[j]) / (nodes[i] - nodes[j])
        # 乘积法则：对每个因子求导，其余因子保持不变
        for k in others:
            term = np.full(xi.size, 1.0 / (nodes[i] - nodes[k]))
            for j in others:
                if j != k:
                    term = term * (xi - nodes[j]) / (nodes[i] - nodes[j])
            derivs[:, i] += term
    return values, derivs


def _tensorize(vx: np.ndarray, dx: np.ndarray, vy: np.ndarray, dy: np.ndarray):
    # 局部编号 index = k + l·(p+1)，k 为 x 方向节点
    values = np.einsum('nl,nk->nlk', vy, vx).reshape(vx.shape[0], -1)
    d_xi = np.einsum('nl,nk->nlk', vy, dx).reshape(vx.shape[0], -1)
    d_eta = np.einsum('nl,nk->nlk', dy, vx).reshape(vx.shape[0], -1)
    return values, d_xi, d_eta


def eval_basis(p: int, point: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    在参考坐标 point 处计算全部 (p+1)² 个张量积基函数的值和梯度
    :return: (values (nb,), gradients (nb, 2))
    """
    p = check_degree(p)
    xi, eta = float(point[0]), float(point[1])
    if not (-1.0 <= xi <= 1.0 and -1.0 <= eta <= 1.0):
        raise InvalidArgumentError(f"reference point {point} outside [-1,1]^2")
    vx, dx = lagrange_1d(p, [xi])
    vy, dy = lagrange_1d(p, [eta])
    values, d_xi, d_eta = _tensorize(vx, dx, vy, dy)
    return values[0], np.column_stack((d_xi[0], d_eta[0]))


class ReferenceBasis:
    """
    参考单元上的基函数表
    在给定求积规则的所有积分点上预先计算基函数值与参考梯度，构建后只读
    """

    def __init__(self, p: int, rule: QuadratureRule):
        self.degree = check_degree(p)
        self.rule = rule
        self.nodes = lagrange_nodes(self.degree)
        vx, dx = lagrange_1d(self.degree, rule.points[:, 0])
        vy, dy = lagrange_1d(self.degree, rule.points[:, 1])
        self.values, self.d_xi, self.d_eta = _tensorize(vx, dx, vy, dy)  # 各 (nq, nb)
        for arr in (self.nodes, self.values, self.d_xi, self.d_eta):
            arr.setflags(write=False)

    @property
    def n_basis(self) -> int:
        return (self.degree + 1) ** 2

    def node_coordinates(self) -> np.ndarray:
        """局部节点的参考坐标 (nb, 2)，编号与基函数一致"""
        kx, ky = np.meshgrid(self.nodes, self.nodes, indexing='xy')
        return np.column_stack((kx.ravel(), ky.ravel()))


def push_forward(hx, hy, ref_gradients: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    矩形单元的仿射映射
    物理梯度 = 参考梯度 × (2/hx, 2/hy)，Jacobian 测度 = hx·hy/4
    :param hx: x 方向边长（标量或每个单元一个值）
    :param hy: y 方向边长
    :param ref_gradients: 参考梯度，最后一维为 2
    :return: (physical_gradients, measure)
    """
    hx = np.asarray(hx, dtype=float)
    hy = np.asarray(hy, dtype=float)
    if np.any(~(hx > 0)) or np.any(~(hy > 0)):
        raise InvalidArgumentError("degenerate element: side lengths must be positive")
    scale = np.stack(np.broadcast_arrays(2.0 / hx, 2.0 / hy), axis=-1)
    ref_gradients = np.asarray(ref_gradients, dtype=float)
    if scale.ndim == 1:
        physical = ref_gradients * scale
    else:
        # 每个单元一组缩放系数，插入基函数维度
        extra = ref_gradients.ndim - scale.ndim
        physical = ref_gradients * scale.reshape(scale.shape[:-1] + (1,) * extra + (2,))
    return physical, hx * hy / 4.0
