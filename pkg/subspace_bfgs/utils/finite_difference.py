"""
有限差分工具

用于校验解析梯度（中心差分）。Hessian-向量积的前向差分在 core.correction 中。
"""

from typing import Callable

import numpy as np


def central_difference_gradient(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    step_scale: float = 1e-6,
) -> np.ndarray:
    """
    中心差分梯度，第 i 个分量的步长为 step_scale * (1 + |x_i|)

    Args:
        f: 标量目标函数
        x: 求导点
        step_scale: 相对步长

    Returns:
        梯度近似值
    """
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    point = x.copy()
    for i in range(x.size):
        h = step_scale * (1.0 + abs(x[i]))
        point[i] = x[i] + h
        f_plus = f(point)
        point[i] = x[i] - h
        f_minus = f(point)
        point[i] = x[i]
        grad[i] = (f_plus - f_minus) / (2.0 * h)
    return grad


def gradient_check(problem, x: np.ndarray, step_scale: float = 1e-6) -> float:
    """
    解析梯度与中心差分的相对误差 ||g - g_fd|| / max(1, ||g||)

    Args:
        problem: 带 f / grad 的测试问题
        x: 检查点
        step_scale: 差分相对步长

    Returns:
        相对误差
    """
    analytic = problem.grad(x)
    numeric = central_difference_gradient(problem.f, x, step_scale)
    return float(np.linalg.norm(analytic - numeric) / max(1.0, np.linalg.norm(analytic)))
