"""
强 Wolfe 线搜索

括号扩张 + zoom 区间收缩，试探点依次尝试三次插值、二次插值、二分。
每个试探点同时求 φ 和 φ′，只计一次求值（与 nfg 计数口径一致）。
"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from subspace_bfgs.utils.logger import get_logger

logger = get_logger(__name__)

# zoom 中插值点离区间端点的最小相对距离
_CUBIC_MARGIN = 0.2
_QUAD_MARGIN = 0.1


class LineSearchStatus(str, Enum):
    """线搜索结束状态"""
    CONVERGED = "converged"
    MAX_EVALS = "max-evals"
    DEGENERATE = "degenerate-direction"
    STALLED = "stalled"


@dataclass
class LineSearchResult:
    """
    线搜索结果

    status 不是 converged 时，tau 为已找到的最好 Armijo 点（可能为 0）。
    """
    tau: float
    nfg_used: int
    status: LineSearchStatus
    phi: Optional[float] = None
    dphi: Optional[float] = None

    @property
    def converged(self) -> bool:
        return self.status is LineSearchStatus.CONVERGED


def _cubicmin(a, fa, fpa, b, fb, c, fc) -> Optional[float]:
    """过 (a,fa,fpa), (b,fb), (c,fc) 的三次插值极小点，失败返回 None"""
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            dc = c - a
            denom = (db * dc) ** 2 * (db - dc)
            d1 = np.array([[dc ** 2, -db ** 2], [-dc ** 3, db ** 3]])
            A, B = d1 @ np.array([fb - fa - fpa * db, fc - fa - fpa * dc])
            A /= denom
            B /= denom
            radical = B * B - 3.0 * A * fpa
            xmin = a + (-B + np.sqrt(radical)) / (3.0 * A)
        except (ArithmeticError, FloatingPointError):
            return None
    if not np.isfinite(xmin):
        return None
    return float(xmin)


def _quadmin(a, fa, fpa, b, fb) -> Optional[float]:
    """过 (a,fa,fpa), (b,fb) 的二次插值极小点，失败返回 None"""
    with np.errstate(divide="raise", over="raise", invalid="raise"):
        try:
            db = b - a
            B = (fb - fa - fpa * db) / (db * db)
            xmin = a - fpa / (2.0 * B)
        except (ArithmeticError, FloatingPointError):
            return None
    if not np.isfinite(xmin):
        return None
    return float(xmin)


def strong_wolfe(
    phi: Callable[[float], float],
    dphi: Callable[[float], float],
    tau_init: float = 1.0,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 60,
    *,
    phi0: Optional[float] = None,
    dphi0: Optional[float] = None,
) -> LineSearchResult:
    """
    寻找满足强 Wolfe 条件的步长

        φ(τ) ≤ φ(0) + c1·τ·φ′(0)   且   |φ′(τ)| ≤ c2·|φ′(0)|

    Args:
        phi: φ(τ) = f(x + τp)
        dphi: φ′(τ) = ∇f(x + τp)ᵀp
        tau_init: 初始试探步长
        c1: 充分下降常数
        c2: 曲率常数
        max_evals: 求值次数上限（含原点，若 phi0/dphi0 未给出）
        phi0: 已知的 φ(0)，给出时原点不再求值
        dphi0: 已知的 φ′(0)

    Returns:
        LineSearchResult

    Raises:
        ValueError: 不满足 0 < c1 < c2 < 1
    """
    if not 0.0 < c1 < c2 < 1.0:
        raise ValueError(f"需要 0 < c1 < c2 < 1，当前 c1={c1}, c2={c2}")

    used = 0

    def sample(tau: float) -> tuple[float, float]:
        nonlocal used
        used += 1
        return float(phi(tau)), float(dphi(tau))

    if phi0 is None or dphi0 is None:
        if max_evals < 1:
            return LineSearchResult(0.0, 0, LineSearchStatus.MAX_EVALS)
        phi0, dphi0 = sample(0.0)

    if not (np.isfinite(phi0) and np.isfinite(dphi0)) or dphi0 >= 0.0:
        logger.debug("非下降方向", dphi0=dphi0)
        return LineSearchResult(0.0, used, LineSearchStatus.DEGENERATE, phi0, dphi0)

    def armijo_fails(tau: float, value: float) -> bool:
        return not np.isfinite(value) or value > phi0 + c1 * tau * dphi0

    def curvature_holds(slope: float) -> bool:
        return abs(slope) <= -c2 * dphi0

    def zoom(a_lo, phi_lo, dphi_lo, a_hi, phi_hi) -> LineSearchResult:
        a_rec, phi_rec = 0.0, phi0
        i = 0
        while used < max_evals:
            dalpha = a_hi - a_lo
            if abs(dalpha) <= np.finfo(float).eps * max(abs(a_lo), abs(a_hi)):
                return LineSearchResult(a_lo, used, LineSearchStatus.STALLED, phi_lo, dphi_lo)
            a, b = (a_hi, a_lo) if dalpha < 0 else (a_lo, a_hi)

            a_j = None
            if i > 0:
                cchk = _CUBIC_MARGIN * abs(dalpha)
                a_j = _cubicmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi, a_rec, phi_rec)
                if a_j is not None and (a_j > b - cchk or a_j < a + cchk):
                    a_j = None
            if a_j is None:
                qchk = _QUAD_MARGIN * abs(dalpha)
                a_j = _quadmin(a_lo, phi_lo, dphi_lo, a_hi, phi_hi)
                if a_j is None or a_j > b - qchk or a_j < a + qchk:
                    a_j = a_lo + 0.5 * dalpha

            phi_j, dphi_j = sample(a_j)
            if armijo_fails(a_j, phi_j) or phi_j >= phi_lo:
                a_rec, phi_rec = a_hi, phi_hi
                a_hi, phi_hi = a_j, phi_j
            else:
                if curvature_holds(dphi_j):
                    return LineSearchResult(a_j, used, LineSearchStatus.CONVERGED, phi_j, dphi_j)
                if dphi_j * (a_hi - a_lo) >= 0.0:
                    a_rec, phi_rec = a_hi, phi_hi
                    a_hi, phi_hi = a_lo, phi_lo
                else:
                    a_rec, phi_rec = a_lo, phi_lo
                a_lo, phi_lo, dphi_lo = a_j, phi_j, dphi_j
            i += 1
        return LineSearchResult(a_lo, used, LineSearchStatus.MAX_EVALS, phi_lo, dphi_lo)

    tau_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    tau = float(tau_init)
    first = True
    while used < max_evals:
        phi_t, dphi_t = sample(tau)
        if armijo_fails(tau, phi_t) or (not first and phi_t >= phi_prev):
            return zoom(tau_prev, phi_prev, dphi_prev, tau, phi_t)
        if curvature_holds(dphi_t):
            return LineSearchResult(tau, used, LineSearchStatus.CONVERGED, phi_t, dphi_t)
        if dphi_t >= 0.0:
            return zoom(tau, phi_t, dphi_t, tau_prev, phi_prev)
        tau_prev, phi_prev, dphi_prev = tau, phi_t, dphi_t
        tau = 2.0 * tau
        first = False

    return LineSearchResult(tau_prev, used, LineSearchStatus.MAX_EVALS, phi_prev, dphi_prev)
