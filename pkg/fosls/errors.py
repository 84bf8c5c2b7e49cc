"""
异常类型定义
参数错误沿用 ValueError，求解失败与数值崩溃单独区分，便于批量计算时按单元格记录失败
"""
from typing import Optional


class InvalidArgumentError(ValueError):
    """参数非法（ε、b0、γ 非正，N 为奇数等）"""


class UnsupportedOperationError(NotImplementedError):
    """当前对象不支持的操作，例如问题没有精确解时请求精确场"""


class SolverConvergenceError(RuntimeError):
    """迭代求解器达到最大迭代次数仍未收敛"""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual  # 达到的相对残差


class NumericalBreakdownError(RuntimeError):
    """出现非有限值或非正曲率"""

    def __init__(self, message: str, iterations: Optional[int] = None):
        super().__init__(message)
        self.iterations = iterations
