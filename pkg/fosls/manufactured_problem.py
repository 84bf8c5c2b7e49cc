"""
制造解基准问题
b = 1，u*(x,y) = g(x)·h(y)，在 x=0、y=0 处有两条边界层及一个角层
"""
import logging
import math
from typing import Tuple

import numpy as np

from .errors import InvalidArgumentError
from .problem_interface import ExactSolution, ProblemSpec
from .weight_function import LayerSide

logger = logging.getLogger(__name__)


class ManufacturedSolution(ExactSolution):
    """
    g(x) = cos(πx/2) − E(x)，h(y) = 1 − y − E(y)
    E(s) = (e^{-s/√ε} − e^{-1/√ε}) / (1 − e^{-1/√ε})
    """

    def __init__(self, epsilon: float):
        if not epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = epsilon
        self.root = math.sqrt(epsilon)
        # 1 − e^{-1/√ε}，ε 很小时趋于 1
        self.denominator = -math.expm1(-1.0 / self.root)

    def _layer(self, s: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """E, E', ε·E''"""
        s = np.asarray(s, dtype=float)
        decay = np.exp(-s / self.root) / self.denominator
        value = -np.exp(-s / self.root) * np.expm1(-(1.0 - s) / self.root) / self.denominator
        return value, -decay / self.root, decay

    def g(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """g, g', ε·g''"""
        e, de, eps_dde = self._layer(x)
        half_pi = 0.5 * math.pi
        return (np.cos(half_pi * x) - e,
                -half_pi * np.sin(half_pi * x) - de,
                -self.epsilon * half_pi ** 2 * np.cos(half_pi * x) - eps_dde)

    def h(self, y) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """h, h', ε·h''"""
        e, de, eps_dde = self._layer(y)
        return 1.0 - y - e, -1.0 - de, -eps_dde

    def value(self, x, y):
        return self.g(x)[0] * self.h(y)[0]

    def gradient(self, x, y):
        gv, gd, _ = self.g(x)
        hv, hd, _ = self.h(y)
        return gd * hv, gv * hd

    def laplacian(self, x, y):
        return self.scaled_laplacian(x, y) / self.epsilon

    def scaled_laplacian(self, x, y):
        """ε·Δu*，ε 很小时仍保持 O(1)"""
        gv, _, g2 = self.g(x)
        hv, _, h2 = self.h(y)
        return g2 * hv + gv * h2

    def source(self, x, y):
        """f = −εΔu* + u*（b = 1）"""
        return -self.scaled_laplacian(x, y) + self.value(x, y)


def _unit_reaction(x, y):
    return np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)


def manufactured_problem(epsilon: float) -> ProblemSpec:
    """
    构造基准问题：b = 1，f 由闭式 g、g″、h、h″ 组装
    """
    solution = ManufacturedSolution(epsilon)
    logger.debug(f"Manufactured problem at eps={epsilon:g}")
    return ProblemSpec(
        epsilon=epsilon,
        reaction=_unit_reaction,
        b0=1.0,
        b1=1.0,
        source=solution.source,
        exact=solution,
        layers=(LayerSide.ZERO, LayerSide.ZERO),
        name='manufactured',
    )


class ZeroSolution(ExactSolution):
    """u* ≡ 0"""

    def value(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)

    def gradient(self, x, y):
        zero = self.value(x, y)
        return zero, zero.copy()

    def laplacian(self, x, y):
        return self.value(x, y)


def zero_problem(epsilon: float) -> ProblemSpec:
    """f ≡ 0 的问题，离散解应恒为零"""
    solution = ZeroSolution()
    return ProblemSpec(
        epsilon=epsilon,
        reaction=_unit_reaction,
        b0=1.0,
        b1=1.0,
        source=solution.value,
        exact=solution,
        name='zero',
    )


PROBLEMS = {
    'manufactured': manufactured_problem,
    'zero': zero_problem,
}


def make_problem(name: str, epsilon: float) -> ProblemSpec:
    """按名称构造问题"""
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise InvalidArgumentError(f"unknown problem {name!r}, expected one of {sorted(PROBLEMS)}")
    return factory(epsilon)
