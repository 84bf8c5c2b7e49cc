"""
问题定义接口 - 抽象基类
-ε Δu + b u = f 于 (0,1)²，u|∂Ω = 0；精确解（可选）用于误差测量
"""
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Tuple

import numpy as np

from .errors import InvalidArgumentError, UnsupportedOperationError
from .weight_function import LayerSide

logger = logging.getLogger(__name__)

CoefficientFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ExactSolution(ABC):
    """
    精确解接口
    所有方法接受同形状的坐标数组 x, y，并逐点返回
    """

    @abstractmethod
    def value(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        u*(x, y)
        """
        pass

    @abstractmethod
    def gradient(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        ∇u*(x, y)
        :return: (∂u*/∂x, ∂u*/∂y)
        """
        pass

    @abstractmethod
    def laplacian(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """
        Δu*(x, y)
        """
        pass


class ExactFields(NamedTuple):
    """误差测量用的精确场"""
    u: np.ndarray
    grad_u: Tuple[np.ndarray, np.ndarray]
    w_tilde: Tuple[np.ndarray, np.ndarray]  # √ε∇u*


@dataclass
class ProblemSpec:
    """反应扩散问题数据"""
    epsilon: float
    reaction: CoefficientFunction  # b(x, y)
    b0: float  # b 的下界
    b1: float  # b 的上界
    source: CoefficientFunction  # f(x, y)
    exact: Optional[ExactSolution] = None
    layers: Tuple[LayerSide, LayerSide] = (LayerSide.ZERO, LayerSide.ZERO)
    name: str = 'custom'

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        if not (0 < self.b0 <= self.b1):
            raise InvalidArgumentError(f"reaction bounds must satisfy 0 < b0 <= b1, got b0={self.b0}, b1={self.b1}")

    @property
    def has_exact_solution(self) -> bool:
        return self.exact is not None

    def audit_reaction_bounds(self, n: int = 64) -> Tuple[float, float]:
        """
        在 n×n 网格上采样 b，检查 b0 <= b <= b1
        :return: 采样得到的 (min b, max b)
        """
        axis = np.linspace(0.0, 1.0, n)
        gx, gy = np.meshgrid(axis, axis, indexing='xy')
        values = np.broadcast_to(self.reaction(gx, gy), gx.shape)
        low, high = float(np.min(values)), float(np.max(values))
        if low < self.b0 or high > self.b1:
            raise InvalidArgumentError(
                f"reaction coefficient range [{low}, {high}] violates declared bounds [{self.b0}, {self.b1}]")
        return low, high


def eval_exact_fields(spec: ProblemSpec, x, y) -> ExactFields:
    """
    返回 (u*, ∇u*, w̃* = √ε∇u*)
    """
    if spec.exact is None:
        raise UnsupportedOperationError(f"problem {spec.name!r} has no exact solution")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = spec.exact.value(x, y)
    gx, gy = spec.exact.gradient(x, y)
    root = math.sqrt(spec.epsilon)
    return ExactFields(u=u, grad_u=(gx, gy), w_tilde=(root * gx, root * gy))
