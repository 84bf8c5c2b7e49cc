"""
三场 (u, w₁, w₂) 连续 Qp 有限元空间
全局自由度按场优先编号（先全部 u，再 w₁，再 w₂），场内按节点字典序（x 方向最快）
本质边界条件：u = 0；默认另加切向通量 w̃·t = 0（u = 0 时精确解满足）
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from .errors import InvalidArgumentError
from .reference_element import lagrange_1d, check_degree
from .shishkin_mesh import TensorMesh2D

logger = logging.getLogger(__name__)

N_FIELDS = 3
FIELD_NAMES = ('u', 'w1', 'w2')


class FluxBoundary(Enum):
    """通量场在 ∂Ω 上的处理方式"""
    NATURAL = 'natural'  # 不加约束
    TANGENTIAL = 'tangential'  # y = 0,1 上 w₁ = 0，x = 0,1 上 w₂ = 0


def _node_coordinates_1d(breakpoints: np.ndarray, p: int) -> np.ndarray:
    """单元内等距节点，长度 p·N+1"""
    left = breakpoints[:-1]
    width = np.diff(breakpoints)
    interior = left[:, None] + width[:, None] * (np.arange(p) / p)[None, :]
    return np.concatenate((interior.ravel(), breakpoints[-1:]))


@dataclass(frozen=True, eq=False)
class FeSpace:
    """网格上三场共用的 Qp 空间"""
    mesh: TensorMesh2D
    degree: int
    flux_boundary: FluxBoundary = FluxBoundary.TANGENTIAL
    nodes_x: np.ndarray = field(init=False, repr=False)  # x 方向节点坐标 (pNx+1,)
    nodes_y: np.ndarray = field(init=False, repr=False)
    element_nodes: np.ndarray = field(init=False, repr=False)  # (ne, (p+1)²) 单场全局编号
    boundary_dofs: np.ndarray = field(init=False, repr=False)  # u 场边界自由度
    constrained_dofs: np.ndarray = field(init=False, repr=False)  # 全部消去的全局自由度，升序

    def __post_init__(self):
        object.__setattr__(self, 'flux_boundary', FluxBoundary(self.flux_boundary))
        p = self.degree
        nodes_x = _node_coordinates_1d(self.mesh.x_mesh.breakpoints, p)
        nodes_y = _node_coordinates_1d(self.mesh.y_mesh.breakpoints, p)
        npx = nodes_x.size

        # 单元 (i,j) 的局部节点 (k,l) -> 全局节点 (p·i+k) + (p·j+l)·npx
        i, j = np.meshgrid(np.arange(self.mesh.nx), np.arange(self.mesh.ny), indexing='xy')
        k, l = np.meshgrid(np.arange(p + 1), np.arange(p + 1), indexing='xy')
        gx = p * i.ravel()[:, None] + k.ravel()[None, :]
        gy = p * j.ravel()[:, None] + l.ravel()[None, :]
        element_nodes = gx + gy * npx

        ix, iy = np.meshgrid(np.arange(npx), np.arange(nodes_y.size), indexing='xy')
        on_vertical = ((ix == 0) | (ix == npx - 1)).ravel()
        on_horizontal = ((iy == 0) | (iy == nodes_y.size - 1)).ravel()
        boundary = np.flatnonzero(on_vertical | on_horizontal)
        n_field = on_vertical.size
        constrained = boundary
        if self.flux_boundary is FluxBoundary.TANGENTIAL:
            constrained = np.concatenate((boundary, n_field + np.flatnonzero(on_horizontal),
                                          2 * n_field + np.flatnonzero(on_vertical)))

        for arr in (nodes_x, nodes_y, element_nodes, boundary, constrained):
            arr.setflags(write=False)
        object.__setattr__(self, 'nodes_x', nodes_x)
        object.__setattr__(self, 'nodes_y', nodes_y)
        object.__setattr__(self, 'element_nodes', element_nodes)
        object.__setattr__(self, 'boundary_dofs', boundary)
        object.__setattr__(self, 'constrained_dofs', constrained)

    @property
    def n_field(self) -> int:
        """单场自由度数 (pNx+1)(pNy+1)"""
        return self.nodes_x.size * self.nodes_y.size

    @property
    def n_dofs(self) -> int:
        return N_FIELDS * self.n_field

    @property
    def n_local(self) -> int:
        return (self.degree + 1) ** 2

    @property
    def free_dofs(self) -> np.ndarray:
        """消去全部约束自由度后剩余的全局自由度"""
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained_dofs] = False
        return np.flatnonzero(mask)

    def node_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        """单场全部节点坐标 (x, y)，按全局编号"""
        gx, gy = np.meshgrid(self.nodes_x, self.nodes_y, indexing='xy')
        return gx.ravel(), gy.ravel()

    def field_offset(self, name: str) -> int:
        if name not in FIELD_NAMES:
            raise InvalidArgumentError(f"unknown field {name!r}, expected one of {FIELD_NAMES}")
        return FIELD_NAMES.index(name) * self.n_field

    def element_dofs(self, elements=None) -> np.ndarray:
        """
        单元局部到全局自由度映射，局部顺序为 [u 基函数, w₁ 基函数, w₂ 基函数]
        :return: (ne, 3·(p+1)²)
        """
        nodes = self.element_nodes if elements is None else self.element_nodes[elements]
        return np.concatenate([nodes + f * self.n_field for f in range(N_FIELDS)], axis=1)

    def locate(self, x, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        查找物理点所在单元，返回 (单元编号, ξ, η)
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
            raise InvalidArgumentError("evaluation points must lie in the unit square")
        xb = self.mesh.x_mesh.breakpoints
        yb = self.mesh.y_mesh.breakpoints
        i = np.clip(np.searchsorted(xb, x, side='right') - 1, 0, self.mesh.nx - 1)
        j = np.clip(np.searchsorted(yb, y, side='right') - 1, 0, self.mesh.ny - 1)
        xi = np.clip(2.0 * (x - xb[i]) / (xb[i + 1] - xb[i]) - 1.0, -1.0, 1.0)
        eta = np.clip(2.0 * (y - yb[j]) / (yb[j + 1] - yb[j]) - 1.0, -1.0, 1.0)
        return i + j * self.mesh.nx, xi, eta

    def evaluate(self, field_values: np.ndarray, x, y) -> np.ndarray:
        """在任意点计算单场有限元函数的值"""
        field_values = np.asarray(field_values, dtype=float)
        if field_values.shape != (self.n_field,):
            raise InvalidArgumentError(f"expected {self.n_field} field coefficients, got {field_values.shape}")
        elements, xi, eta = self.locate(x, y)
        vx, _ = lagrange_1d(self.degree, xi)
        vy, _ = lagrange_1d(self.degree, eta)
        phi = np.einsum('nl,nk->nlk', vy, vx).reshape(xi.size, -1)
        return np.einsum('nb,nb->n', phi, field_values[self.element_nodes[elements]])


def build_space(mesh: TensorMesh2D, p: int,
                flux_boundary: FluxBoundary = FluxBoundary.TANGENTIAL) -> FeSpace:
    """
    在张量积网格上构建三场 Qp 空间
    :param mesh: 二维网格
    :param p: 多项式次数 (1,2,3)
    :param flux_boundary: 通量场是否施加切向零边界条件
    """
    space = FeSpace(mesh=mesh, degree=check_degree(p), flux_boundary=flux_boundary)
    logger.debug(f"FE space built: p={space.degree}, {space.n_field} DOFs per field, "
                 f"{space.boundary_dofs.size} boundary u-DOFs, "
                 f"{space.constrained_dofs.size - space.boundary_dofs.size} tangential flux DOFs")
    return space


@dataclass
class SystemField:
    """按 FeSpace 编号排列的 (u, w₁, w₂) 系数向量"""
    space: FeSpace
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.space.n_dofs,):
            raise InvalidArgumentError(
                f"coefficient vector has shape {self.coefficients.shape}, expected ({self.space.n_dofs},)")

    def block(self, name: str) -> np.ndarray:
        start = self.space.field_offset(name)
        return self.coefficients[start:start + self.space.n_field]

    @property
    def u(self) -> np.ndarray:
        return self.block('u')

    @property
    def w1(self) -> np.ndarray:
        return self.block('w1')

    @property
    def w2(self) -> np.ndarray:
        return self.block('w2')


def interpolate(space: FeSpace, exact, epsilon: float, rescaled: bool = True) -> SystemField:
    """
    精确解的节点插值：u*，以及 w̃* = √ε∇u*（rescaled）或 w* = ∇u*
    :param exact: 提供 value(x, y) 与 gradient(x, y) 的精确解对象
    """
    x, y = space.node_coordinates()
    u = exact.value(x, y)
    gx, gy = exact.gradient(x, y)
    scale = np.sqrt(epsilon) if rescaled else 1.0
    return SystemField(space, np.concatenate((u, scale * gx, scale * gy)))
