"""
修正方向

在子空间方向 −H̃g 之外加一项 −αv，使迭代点能离开当前子空间：
- ver_a: v 取 u1、u2 相互正交化后的单位方向之和，保证 α·vᵀg > 0
- ver_b: v 取 g/‖g‖，求值更少，但不保证单调下降
Hessian-向量积全部用梯度前向差分近似，每次消耗一次梯度求值。
∇²f 对称，∇²f·∇²f·H̃g 不单独求：u1 = ∇²f·(g − ∇²f·H̃g)。
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from subspace_bfgs.core.exceptions import ZeroDirectionError

GradientEvaluator = Callable[[np.ndarray], np.ndarray]

# ∇²f·d 的有限差分步长（按 ‖d‖ 归一）
HVP_EPS = 1e-6
# 分母保护
ALPHA_DENOM_FLOOR = 1e-300
# |cos(u1, u2)| 与 1 的距离小于此值视为平行
PARALLEL_TOL = 1e-12
# |α|·‖∇²f·v‖ ≤ ALPHA_TRUST·‖g‖
ALPHA_TRUST = 2.0
# |α| ≤ ALPHA_MAX_RATIO·‖g‖
ALPHA_MAX_RATIO = 100.0


@dataclass
class Correction:
    """修正项 α·v"""
    v: np.ndarray
    alpha: float
    hvp_evals: int

    @classmethod
    def zero(cls, n: int, hvp_evals: int = 0) -> "Correction":
        return cls(v=np.zeros(n), alpha=0.0, hvp_evals=hvp_evals)

    @property
    def step(self) -> np.ndarray:
        """α·v"""
        return self.alpha * self.v


def hvp(
    grad: GradientEvaluator,
    x: np.ndarray,
    d: np.ndarray,
    g0: np.ndarray,
    eps: float = HVP_EPS,
) -> np.ndarray:
    """
    (∇f(x + εd) − ∇f(x))/ε，ε = eps/‖d‖

    Args:
        grad: 梯度求值器（每次调用计入 nfg）
        x: 当前点
        d: 方向
        g0: 已缓存的 ∇f(x)
        eps: 沿单位方向的差分步长

    Raises:
        ZeroDirectionError: d = 0
    """
    norm = float(np.linalg.norm(d))
    if norm == 0.0 or not np.isfinite(norm):
        raise ZeroDirectionError("Hessian-向量积的方向不能为零向量")
    h = eps / norm
    return (grad(x + h * d) - g0) / h


def _newton_residual(
    g: np.ndarray,
    Hg: np.ndarray,
    grad: GradientEvaluator,
    x: np.ndarray,
    eps: float,
) -> tuple[np.ndarray, int]:
    """r = g − ∇²f·H̃g，H̃g = 0 时不求值"""
    if not np.any(Hg):
        return g.copy(), 0
    return g - hvp(grad, x, Hg, g, eps), 1


def build_u1_u2(
    g: np.ndarray,
    Hg: np.ndarray,
    grad: GradientEvaluator,
    x: np.ndarray,
    eps: float = HVP_EPS,
) -> tuple[np.ndarray, np.ndarray, int]:
    """
    u1 = ∇²f·g − ∇²f·(∇²f·H̃g)，u2 = g

    按 u1 = ∇²f·(g − ∇²f·H̃g) 计算，最多 2 次求值。
    g = 0 时不做任何求值；g − ∇²f·H̃g = 0 时 u1 = 0。

    Returns:
        (u1, u2, 梯度求值次数)
    """
    if not np.any(g):
        return np.zeros_like(g), np.zeros_like(g), 0
    r, evals = _newton_residual(g, Hg, grad, x, eps)
    if not np.any(r):
        return np.zeros_like(g), g.copy(), evals
    return hvp(grad, x, r, g, eps), g.copy(), evals + 1


def clip_alpha(
    alpha: float,
    gnorm: float,
    av_norm: float,
    trust: float = ALPHA_TRUST,
    max_ratio: float = ALPHA_MAX_RATIO,
) -> float:
    """
    |α| ≤ min(trust·‖g‖/‖∇²f·v‖, max_ratio·‖g‖)，保留符号

    差分 Hessian 沿 v 的曲率接近零时，最小二乘 α 没有意义，由这两个上界截断。
    """
    if not np.isfinite(alpha):
        return 0.0
    bound = max_ratio * gnorm
    if av_norm > 0.0:
        bound = min(bound, trust * gnorm / av_norm)
    return float(np.clip(alpha, -bound, bound))


def _alpha(
    v: np.ndarray,
    u1: np.ndarray,
    Av: np.ndarray,
    gnorm: float,
    trust: float,
    max_ratio: float,
) -> float:
    """α = vᵀu1 / ‖∇²f·v‖²，分母过小或非有限时为 0"""
    denom = float(Av @ Av)
    if not np.isfinite(denom) or denom < ALPHA_DENOM_FLOOR:
        return 0.0
    alpha = float(v @ u1) / denom
    return clip_alpha(alpha, gnorm, float(np.sqrt(denom)), trust, max_ratio)


def ver_a(
    g: np.ndarray,
    Hg: np.ndarray,
    grad: GradientEvaluator,
    x: np.ndarray,
    eps: float = HVP_EPS,
    *,
    trust: float = ALPHA_TRUST,
    max_ratio: float = ALPHA_MAX_RATIO,
) -> Correction:
    """
    ver-A 修正：最多 3 次梯度求值

    u1、u2 线性无关时，各自对另一方做 Gram–Schmidt 正交化，单位化后求和再单位化；
    正向平行时 v = (u1+u2)/‖u1+u2‖；反向平行时 v = 0, α = 0。
    截断只改变 |α|，α·vᵀg > 0 不受影响。
    """
    u1, u2, evals = build_u1_u2(g, Hg, grad, x, eps)
    n1 = float(np.linalg.norm(u1))
    n2 = float(np.linalg.norm(u2))
    if n1 == 0.0 or n2 == 0.0 or not np.isfinite(n1):
        return Correction.zero(g.size, evals)

    inner = float(u1 @ u2)
    cos = inner / (n1 * n2)
    if cos <= -1.0 + PARALLEL_TOL:
        return Correction.zero(g.size, evals)
    if cos >= 1.0 - PARALLEL_TOL:
        v = u1 + u2
    else:
        u1_perp = u1 - (inner / (n2 * n2)) * u2
        u2_perp = u2 - (inner / (n1 * n1)) * u1
        v = u1_perp / np.linalg.norm(u1_perp) + u2_perp / np.linalg.norm(u2_perp)
    v = v / np.linalg.norm(v)

    Av = hvp(grad, x, v, g, eps)
    evals += 1
    alpha = _alpha(v, u1, Av, n2, trust, max_ratio)
    return Correction(v=v, alpha=alpha, hvp_evals=evals)


def ver_b(
    g: np.ndarray,
    Hg: np.ndarray,
    grad: GradientEvaluator,
    x: np.ndarray,
    eps: float = HVP_EPS,
    *,
    trust: float = ALPHA_TRUST,
    max_ratio: float = ALPHA_MAX_RATIO,
) -> Correction:
    """
    ver-B 修正：v = g/‖g‖，最多 2 次梯度求值

    ∇²f·v 由 ∇²f·g 线性缩放得到；vᵀu1 = (∇²f·v)ᵀ(g − ∇²f·H̃g)。
    """
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return Correction.zero(g.size)
    Ag = hvp(grad, x, g, g, eps)
    r, evals = _newton_residual(g, Hg, grad, x, eps)
    v = g / gnorm
    Av = Ag / gnorm
    alpha = _alpha(Av, r, Av, gnorm, trust, max_ratio)
    return Correction(v=v, alpha=alpha, hvp_evals=evals + 1)
