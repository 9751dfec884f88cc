"""
异常定义

单次优化运行的失败（预算耗尽、线搜索失败）作为 Trace.status 返回，
不通过异常传播；这里的异常只用于配置错误、前置条件违例和内部控制信号。
"""

from typing import Optional


class SubspaceBFGSError(Exception):
    """库内所有异常的基类"""


class ConfigurationError(SubspaceBFGSError, ValueError):
    """基准测试规格或运行配置无效（CLI 返回码 2）"""


class UnknownProblemError(ConfigurationError, LookupError):
    """问题名称未注册"""

    def __init__(self, name: str, available: Optional[list[str]] = None):
        self.name = name
        self.available = available or []
        message = f"未注册的测试问题: {name}"
        if self.available:
            message += f"（可用: {', '.join(self.available)}）"
        super().__init__(message)


class DimensionError(SubspaceBFGSError, ValueError):
    """维度不满足问题族规则或向量长度不匹配"""


class CurvatureSkip(SubspaceBFGSError):
    """|s^T y| 低于阈值，调用方保持状态不变"""

    def __init__(self, sty: float, threshold: float):
        self.sty = sty
        self.threshold = threshold
        super().__init__(f"曲率对被跳过: |s^T y|={abs(sty):.3e} < {threshold:.3e}")


class EmptyStateError(SubspaceBFGSError):
    """子空间状态中还没有任何列"""


class ZeroDirectionError(SubspaceBFGSError, ValueError):
    """Hessian-向量积的方向为零向量"""


class CapacityError(SubspaceBFGSError):
    """稠密 BFGS 的维度超过上限"""


class RankError(SubspaceBFGSError):
    """向量组数值秩不足"""

    def __init__(self, rank: int, expected: int):
        self.rank = rank
        self.expected = expected
        super().__init__(f"数值秩不足: rank={rank} < {expected}")


class BudgetExhausted(SubspaceBFGSError):
    """函数+梯度求值预算已用完"""
