"""
边界层加权函数 β
β(x) = Π_i (1 + ε^{-1/2} e^{-γ x_i/√ε})，以及梯度、系数界审计与平衡性积分
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from .errors import InvalidArgumentError
from .reference_element import gauss_rule
from .shishkin_mesh import ShishkinMesh1D

logger = logging.getLogger(__name__)

# 复合积分在层尺度 √ε/γ 上的细分次数，e^{-64}/√ε 在 ε >= 1e-14 时低于 1e-20
LAYER_SUBDIVISION_DEPTH = 64


class LayerSide(Enum):
    """某一坐标方向上边界层所在的一侧"""
    NONE = 0
    ZERO = 1  # x_i = 0 处
    ONE = 2  # x_i = 1 处
    BOTH = 3


@dataclass(frozen=True)
class WeightSpec:
    """
    权函数参数
    γ 与 C 满足 γ = √b0 / ((1+C)√d)；两者都保存，C 用于矫顽常数
    """
    epsilon: float
    gamma: float
    C: float  # 矫顽余量常数
    dims: int = 2
    layers: Tuple[LayerSide, ...] = (LayerSide.ZERO, LayerSide.ZERO)
    b0: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma > 0:
            raise InvalidArgumentError(f"gamma must be positive, got {self.gamma}")
        if not self.C > 0:
            raise InvalidArgumentError(
                f"coercivity margin C must be positive, got {self.C} (gamma={self.gamma} too large)")
        if self.dims not in (1, 2):
            raise InvalidArgumentError(f"dims must be 1 or 2, got {self.dims}")
        if len(self.layers) != self.dims:
            raise InvalidArgumentError(f"expected {self.dims} layer flags, got {len(self.layers)}")

    @classmethod
    def from_gamma(cls, epsilon: float, gamma: float, b0: float = 1.0, dims: int = 2,
                   layers: Optional[Sequence[LayerSide]] = None) -> 'WeightSpec':
        """由用户给定的 γ 反推 C = √b0/(γ√d) − 1"""
        if not gamma > 0 or not b0 > 0:
            raise InvalidArgumentError(f"gamma and b0 must be positive, got gamma={gamma}, b0={b0}")
        C = math.sqrt(b0) / (gamma * math.sqrt(dims)) - 1.0
        layers = tuple(layers) if layers is not None else (LayerSide.ZERO,) * dims
        return cls(epsilon=epsilon, gamma=gamma, C=C, dims=dims, layers=layers, b0=b0)

    @classmethod
    def from_margin(cls, epsilon: float, C: float, b0: float = 1.0, dims: int = 2,
                    layers: Optional[Sequence[LayerSide]] = None) -> 'WeightSpec':
        """由 C 构造 γ = √b0/((1+C)√d)"""
        if not C > 0 or not b0 > 0:
            raise InvalidArgumentError(f"C and b0 must be positive, got C={C}, b0={b0}")
        gamma = math.sqrt(b0) / ((1.0 + C) * math.sqrt(dims))
        layers = tuple(layers) if layers is not None else (LayerSide.ZERO,) * dims
        return cls(epsilon=epsilon, gamma=gamma, C=C, dims=dims, layers=layers, b0=b0)


def beta_1d(gamma: float, epsilon: float, x) -> np.ndarray:
    """单方向因子 β₁(x) = 1 + ε^{-1/2} e^{-γx/√ε}"""
    root = math.sqrt(epsilon)
    return 1.0 + np.exp(-gamma * np.asarray(x, dtype=float) / root) / root


def _as_points(spec: WeightSpec, point) -> np.ndarray:
    pts = np.asarray(point, dtype=float)
    if pts.shape[-1] != spec.dims:
        raise InvalidArgumentError(f"points must have last dimension {spec.dims}, got shape {pts.shape}")
    return pts


def _axis_factor(spec: WeightSpec, side: LayerSide, x: np.ndarray) -> np.ndarray:
    factor = np.ones_like(x)
    if side in (LayerSide.ZERO, LayerSide.BOTH):
        factor = factor * beta_1d(spec.gamma, spec.epsilon, x)
    if side in (LayerSide.ONE, LayerSide.BOTH):
        factor = factor * beta_1d(spec.gamma, spec.epsilon, 1.0 - x)
    return factor


def _log_slope(spec: WeightSpec, side: LayerSide, x: np.ndarray) -> np.ndarray:
    """
    ∂ ln β / ∂x_i 除以 γ/√ε 后的无量纲部分
    t = ε^{-1/2} e^{-γx/√ε}，t/(1+t) 用 logistic 函数避免上溢
    """
    log_shift = -0.5 * math.log(spec.epsilon)
    scale = spec.gamma / math.sqrt(spec.epsilon)
    slope = np.zeros_like(x)
    if side in (LayerSide.ZERO, LayerSide.BOTH):
        slope = slope - expit(log_shift - scale * x)
    if side in (LayerSide.ONE, LayerSide.BOTH):
        slope = slope + expit(log_shift - scale * (1.0 - x))
    return slope


def beta_eval(spec: WeightSpec, point) -> np.ndarray:
    """
    计算 β；point 的最后一维为空间维数，可批量
    没有边界层的方向贡献因子 1，结果 >= 1
    """
    pts = _as_points(spec, point)
    value = np.ones(pts.shape[:-1])
    for axis, side in enumerate(spec.layers):
        if side is not LayerSide.NONE:
            value = value * _axis_factor(spec, side, pts[..., axis])
    return value


def grad_beta(spec: WeightSpec, point) -> np.ndarray:
    """
    ∂β/∂x_i = −(γ/ε) e^{-γx_i/√ε} / (1 + ε^{-1/2} e^{-γx_i/√ε}) · β
    :return: 与 point 同形状的梯度
    """
    pts = _as_points(spec, point)
    beta = beta_eval(spec, pts)
    scale = spec.gamma / math.sqrt(spec.epsilon)
    grad = np.zeros(pts.shape)
    for axis, side in enumerate(spec.layers):
        if side is not LayerSide.NONE:
            grad[..., axis] = scale * _log_slope(spec, side, pts[..., axis]) * beta
    return grad


def layer_refined_grid(spec: WeightSpec, n: int = 200) -> np.ndarray:
    """
    审计用采样网格：每个方向 n 个点，一半落在层内（宽度约 40√ε/γ），一半覆盖全区间
    :return: (n^d, d)
    """
    if n < 4:
        raise InvalidArgumentError(f"sample grid needs at least 4 points per axis, got {n}")
    width = min(0.5, 40.0 * math.sqrt(spec.epsilon) / spec.gamma)
    inner = np.linspace(0.0, width, n // 2, endpoint=False)
    outer = np.linspace(width, 1.0, n - n // 2)
    axis = np.concatenate((inner, outer))
    if any(side in (LayerSide.ONE, LayerSide.BOTH) for side in spec.layers):
        axis = np.unique(np.concatenate((axis, 1.0 - axis)))
    if spec.dims == 1:
        return axis[:, None]
    gx, gy = np.meshgrid(axis, axis, indexing='xy')
    return np.column_stack((gx.ravel(), gy.ravel()))


def audit_weight_bound(spec: WeightSpec, b0: Optional[float] = None, sample_grid=None) -> float:
    """
    检查矫顽性假设 ∇β·∇β < b0 β² / (ε(1+C)²)
    :return: 采样点上 ε(1+C)²(∇β·∇β)/(b0β²) 的最大值，小于 1 表示满足
    """
    b0 = spec.b0 if b0 is None else b0
    if not b0 > 0:
        raise InvalidArgumentError(f"b0 must be positive, got {b0}")
    pts = layer_refined_grid(spec) if sample_grid is None else _as_points(spec, sample_grid)
    # ε(1+C)²/b0 · (γ/√ε)² Σ slope_i² ，直接用比值形式避免 β² 上溢
    total = np.zeros(pts.shape[:-1])
    for axis, side in enumerate(spec.layers):
        if side is not LayerSide.NONE:
            total = total + _log_slope(spec, side, pts[..., axis]) ** 2
    ratio = (1.0 + spec.C) ** 2 * spec.gamma ** 2 / b0 * total
    worst = float(np.max(ratio)) if ratio.size else 0.0
    if worst >= 1.0:
        logger.warning(f"Weight bound violated: max ratio {worst:.6f} >= 1")
    logger.debug(f"Weight bound audit over {ratio.size} samples: max ratio {worst:.6f}")
    return worst


def coercivity_constants(b0: float, b1: float, C: float) -> Tuple[float, float]:
    """
    连续层面的矫顽与连续常数
    :return: (min(C·min(1,b0)/(1+C), 1/b1, 1), 3 + 2·max(1/b0, b1))
    """
    if not (b0 > 0 and b1 > 0 and C > 0):
        raise InvalidArgumentError(f"b0, b1 and C must be positive, got {b0}, {b1}, {C}")
    c_min = min(C * min(1.0, b0) / (1.0 + C), 1.0 / b1, 1.0)
    c_cont = 3.0 + 2.0 * max(1.0 / b0, b1)
    return c_min, c_cont


class BalanceIntegrals(NamedTuple):
    """∫₀¹β₁ 与 ∫₀¹β₁·(e^{-x√(b0/(2ε))})²"""
    weight_integral: float
    layer_integral: float


def _check_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise InvalidArgumentError(f"{name} must be positive, got {value}")


def balance_integrals(gamma: float, epsilon: float, b0: float) -> BalanceIntegrals:
    """
    两个闭式积分，保留指数小量
    ∫β₁ = 1 + γ⁻¹(1 − e^{−γ/√ε})
    ∫β₁e² = (1 − e^{−γ/√ε − √(2b0/ε)})/(γ + √(2b0)) + √(ε/(2b0))(1 − e^{−√(2b0/ε)})
    """
    _check_positive(gamma=gamma, epsilon=epsilon, b0=b0)
    root = math.sqrt(epsilon)
    first = 1.0 - math.expm1(-gamma / root) / gamma
    decay = math.sqrt(2.0 * b0 / epsilon)
    second = (-math.expm1(-gamma / root - decay) / (gamma + math.sqrt(2.0 * b0))
              - math.sqrt(epsilon / (2.0 * b0)) * math.expm1(-decay))
    return BalanceIntegrals(first, second)


def layer_subdivision(breakpoints: np.ndarray, gamma: float, epsilon: float,
                      depth: int = LAYER_SUBDIVISION_DEPTH) -> np.ndarray:
    """
    网格节点并上 x = j·√ε/γ (j = 1..depth)
    每个子区间上 β 的层项至多衰减 e 倍；x > depth·√ε/γ 处层项相对 1 已低于舍入误差
    """
    scale = math.sqrt(epsilon) / gamma
    extra = scale * np.arange(1, depth + 1)
    extra = extra[(extra > breakpoints[0]) & (extra < breakpoints[-1])]
    return np.union1d(breakpoints, extra)


def balance_integrals_by_quadrature(gamma: float, epsilon: float, b0: float,
                                    mesh: ShishkinMesh1D, q: int = 12) -> BalanceIntegrals:
    """
    在一维 Shishkin 网格上复合 Gauss 积分，与闭式结果比对
    粗单元按 layer_subdivision 细分，β 的尾部落在第一个粗单元内时仍能分辨
    """
    _check_positive(gamma=gamma, epsilon=epsilon, b0=b0)
    rule = gauss_rule(q)
    points = layer_subdivision(mesh.breakpoints, gamma, epsilon)
    left = points[:-1]
    width = np.diff(points)
    x = left[:, None] + 0.5 * width[:, None] * (rule.points_1d[None, :] + 1.0)
    w = 0.5 * width[:, None] * rule.weights_1d[None, :]
    beta = beta_1d(gamma, epsilon, x)
    layer = np.exp(-2.0 * x * math.sqrt(b0 / (2.0 * epsilon)))
    return BalanceIntegrals(float(np.sum(w * beta)), float(np.sum(w * beta * layer)))


@dataclass
class StereotypicalNormReport:
    """典型分解各部分在平衡范数下的大小"""
    epsilon: float
    regular_closed_form: float  # (∫β₁)²
    regular_quadrature: float
    regular_limit: float  # (1 + 1/γ)²
    layer_closed_form: float  # (1 + b0 + (b0/2)²)·∫β₁·∫β₁e²
    layer_quadrature: float
    layer_limit: float  # (1 + b0 + (b0/2)²)(1 + 1/γ)/(γ + √(2b0))


def stereotypical_norm_audit(gamma: float, epsilon: float, b0: float,
                             mesh: ShishkinMesh1D, q: int = 12) -> StereotypicalNormReport:
    """
    平衡性检查：常数正则部分与 x=0 边界层项 e^{-x√(b0/(2ε))} 的平方范数
    均应有与 ε 无关的上下界
    """
    exact = balance_integrals(gamma, epsilon, b0)
    approx = balance_integrals_by_quadrature(gamma, epsilon, b0, mesh, q)
    # 层函数各阶导数为 (−√(b0/(2ε)))^ℓ 倍，重标度后 u、∇u、w̃、∇·w̃ 四项系数
    factor = 1.0 + b0 / 2.0 + b0 / 2.0 + (b0 / 2.0) ** 2
    report = StereotypicalNormReport(
        epsilon=epsilon,
        regular_closed_form=exact.weight_integral ** 2,
        regular_quadrature=approx.weight_integral ** 2,
        regular_limit=(1.0 + 1.0 / gamma) ** 2,
        layer_closed_form=factor * exact.weight_integral * exact.layer_integral,
        layer_quadrature=factor * approx.weight_integral * approx.layer_integral,
        layer_limit=factor * (1.0 + 1.0 / gamma) / (gamma + math.sqrt(2.0 * b0)),
    )
    logger.debug(f"Stereotypical norm audit at eps={epsilon:g}: {report}")
    return report
