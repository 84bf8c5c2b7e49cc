"""
Shishkin 网格
一维分段均匀网格（过渡点 τ 两侧各 N/2 个等宽单元）及其张量积二维矩形网格
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import InvalidArgumentError

logger = logging.getLogger(__name__)

# 低于该值时 √ε 级别的单元宽度接近机器精度
MIN_SUPPORTED_EPSILON = 1e-14


def _check_element_count(n: int) -> None:
    if isinstance(n, bool) or int(n) != n:
        raise InvalidArgumentError(f"N must be an integer, got {n!r}")
    if n < 4 or n % 2 != 0:
        raise InvalidArgumentError(f"N must be an even integer >= 4, got {n}")


def transition_point(epsilon: float, b0: float, gamma: float, p: int, n: int) -> float:
    """
    计算过渡点 τ = min{1/2, (p+1)·√(2ε/b0)·γ⁻¹·ln N}
    :param epsilon: 扩散参数 ε
    :param b0: 反应系数下界
    :param gamma: 权函数衰减率 γ
    :param p: 多项式次数
    :param n: 单元数 N（偶数，>= 4）
    :return: 过渡点 τ
    """
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
    if not b0 > 0:
        raise InvalidArgumentError(f"b0 must be positive, got {b0}")
    if not gamma > 0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma}")
    if int(p) != p or p < 1:
        raise InvalidArgumentError(f"polynomial degree must be >= 1, got {p}")
    _check_element_count(n)
    if epsilon < MIN_SUPPORTED_EPSILON:
        logger.warning(f"epsilon={epsilon:g} is below the supported range (>= {MIN_SUPPORTED_EPSILON:g})")

    layer_width = (p + 1) * math.sqrt(2.0 * epsilon / b0) / gamma * math.log(n)
    tau = min(0.5, layer_width)
    if tau == 0.5:
        logger.debug(f"Transition point clamped to 1/2 (layer term {layer_width:.4e})")
    return tau


@dataclass(frozen=True, eq=False)
class ShishkinMesh1D:
    """一维 Shishkin 网格，构建后不可变"""
    breakpoints: np.ndarray  # 递增节点，首 0 尾 1，共 N+1 个
    tau: float  # 过渡点
    n_elements: int  # 单元数 N
    layer_at_zero: bool = True  # 细网格区域是否在 0 端

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __len__(self) -> int:
        return self.n_elements


def build_shishkin_1d(n: int, tau: float, layer_at_zero: bool = True) -> ShishkinMesh1D:
    """
    构建一维 Shishkin 网格
    [0,τ] 与 [τ,1] 上各 N/2 个等宽单元；layer_at_zero 为 False 时镜像到 1 端
    """
    _check_element_count(n)
    if not (0.0 < tau <= 0.5):
        raise InvalidArgumentError(f"transition point must satisfy 0 < tau <= 1/2, got {tau}")

    half = n // 2
    fine = np.full(half, 2.0 * tau / n)
    coarse = np.full(half, 2.0 * (1.0 - tau) / n)
    points = np.concatenate(([0.0], np.cumsum(np.concatenate((fine, coarse)))))
    # 端点吸附，消除累加误差
    points[0] = 0.0
    points[half] = tau
    points[-1] = 1.0

    if not layer_at_zero:
        points = 1.0 - points[::-1]

    if not np.all(np.diff(points) > 0):
        raise InvalidArgumentError(f"degenerate mesh for N={n}, tau={tau}")

    points.setflags(write=False)
    return ShishkinMesh1D(breakpoints=points, tau=float(tau), n_elements=int(n), layer_at_zero=bool(layer_at_zero))


def shishkin_mesh(epsilon: float, b0: float, gamma: float, p: int, n: int,
                  layer_at_zero: bool = True) -> ShishkinMesh1D:
    """按过渡点公式直接构建一维网格"""
    tau = transition_point(epsilon, b0, gamma, p, n)
    return build_shishkin_1d(n, tau, layer_at_zero)


@dataclass(frozen=True, eq=False)
class TensorMesh2D:
    """
    张量积矩形网格
    单元按字典序编号（x 方向最快）：单元 e = i + j·Nx 占据 [x_i,x_{i+1}]×[y_j,y_{j+1}]
    """
    x_mesh: ShishkinMesh1D
    y_mesh: ShishkinMesh1D
    hx: np.ndarray = field(init=False, repr=False)  # 每个单元的 x 方向边长
    hy: np.ndarray = field(init=False, repr=False)
    x0: np.ndarray = field(init=False, repr=False)  # 每个单元左下角
    y0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        wx = self.x_mesh.widths
        wy = self.y_mesh.widths
        nx, ny = len(wx), len(wy)
        hx = np.tile(wx, ny)
        hy = np.repeat(wy, nx)
        x0 = np.tile(self.x_mesh.breakpoints[:-1], ny)
        y0 = np.repeat(self.y_mesh.breakpoints[:-1], nx)
        for arr in (hx, hy, x0, y0):
            arr.setflags(write=False)
        object.__setattr__(self, 'hx', hx)
        object.__setattr__(self, 'hy', hy)
        object.__setattr__(self, 'x0', x0)
        object.__setattr__(self, 'y0', y0)

    @property
    def nx(self) -> int:
        return self.x_mesh.n_elements

    @property
    def ny(self) -> int:
        return self.y_mesh.n_elements

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def areas(self) -> np.ndarray:
        return self.hx * self.hy

    def element_index(self, i: int, j: int) -> int:
        """(i,j) 单元 -> 单元编号"""
        if not (0 <= i < self.nx and 0 <= j < self.ny):
            raise InvalidArgumentError(f"cell ({i},{j}) outside {self.nx}x{self.ny} mesh")
        return i + j * self.nx

    def cell(self, element: int) -> Tuple[int, int]:
        """单元编号 -> (i,j)"""
        if not (0 <= element < self.n_elements):
            raise InvalidArgumentError(f"element {element} outside mesh with {self.n_elements} elements")
        return element % self.nx, element // self.nx

    def element_bounds(self, element: int) -> Tuple[float, float, float, float]:
        """返回 (x_left, x_right, y_bottom, y_top)"""
        i, j = self.cell(element)
        xb = self.x_mesh.breakpoints
        yb = self.y_mesh.breakpoints
        return float(xb[i]), float(xb[i + 1]), float(yb[j]), float(yb[j + 1])


def tensor_mesh(x: ShishkinMesh1D, y: ShishkinMesh1D) -> TensorMesh2D:
    """两个一维网格的张量积"""
    mesh = TensorMesh2D(x, y)
    logger.debug(f"Tensor mesh built: {mesh.nx}x{mesh.ny} elements, tau=({x.tau:.4e}, {y.tau:.4e})")
    return mesh
