"""
子空间记忆（Fast-BFGS 的截断形式）

H̃_k = S̃ L̃ S̃ᵀ，S̃ 保存最近 m 个重标度步长，L̃ 为 m×m 对称矩阵。

索引约定：环形缓冲区逻辑顺序为从旧到新，L̃ 的行列顺序与之一致。
淘汰最旧列与 T_k 的移位结构按同一顺序对应。
"""

from dataclasses import dataclass
from typing import Any, Optional

import numpy as np
import scipy.linalg

from subspace_bfgs.core.exceptions import CurvatureSkip, DimensionError, EmptyStateError

# 最小二乘秩判定：相对最大列范数
LSTSQ_RANK_TOL = 1e-12


@dataclass(frozen=True)
class CurvaturePair:
    """重标度后的曲率对，s̃ᵀỹ = ±1"""
    s_tilde: np.ndarray
    y_tilde: np.ndarray
    sty: float


def rescale_pair(s: np.ndarray, y: np.ndarray, skip_tol: float = 1e-12) -> CurvaturePair:
    """
    s̃ = s/√|sᵀy|，ỹ = y/√|sᵀy|

    Raises:
        CurvatureSkip: |sᵀy| < skip_tol·‖s‖·‖y‖（含 sᵀy = 0）
    """
    sty = float(s @ y)
    threshold = skip_tol * float(np.linalg.norm(s)) * float(np.linalg.norm(y))
    if not np.isfinite(sty) or abs(sty) < threshold or sty == 0.0:
        raise CurvatureSkip(sty, threshold)
    scale = 1.0 / np.sqrt(abs(sty))
    return CurvaturePair(s_tilde=s * scale, y_tilde=y * scale, sty=sty)


class SubspaceState:
    """
    Fast-BFGS 记忆：最多 m 个 n 维列（环形缓冲区）加 L̃

    一个状态只属于一次优化运行；冻结后的 apply_h 可并发调用。
    """

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise DimensionError(f"需要 m >= 1 且 n >= 1，收到 m={m}, n={n}")
        self.m = int(m)
        self.n = int(n)
        self.count = 0
        self._buffer = np.zeros((self.m, self.n))
        self._head = 0
        self._size = 0
        self.L = np.zeros((0, 0))

    @property
    def size(self) -> int:
        """当前保存的列数 min(count, m)"""
        return self._size

    def _order(self) -> np.ndarray:
        return (self._head + np.arange(self._size)) % self.m

    @property
    def columns(self) -> np.ndarray:
        """保存的列（size × n，从旧到新，副本）"""
        return self._buffer[self._order()]

    def column(self, j: int) -> np.ndarray:
        """第 j 个列（0 为最旧），只读视图"""
        if not 0 <= j < self._size:
            raise IndexError(f"列下标越界: {j}（共 {self._size} 列）")
        view = self._buffer[(self._head + j) % self.m]
        view = view.view()
        view.flags.writeable = False
        return view

    def project(self, v: np.ndarray) -> np.ndarray:
        """S̃ᵀv（按从旧到新顺序），O(mn)"""
        return (self._buffer @ v)[self._order()]

    def expand(self, c: np.ndarray) -> np.ndarray:
        """S̃c，O(mn)"""
        w = np.zeros(self.m)
        w[self._order()] = c
        return self._buffer.T @ w

    def append(self, s_tilde: np.ndarray) -> Optional[np.ndarray]:
        """
        追加一列；缓冲区已满时覆盖最旧列

        Returns:
            被淘汰的列（副本），未淘汰时为 None
        """
        if self._size < self.m:
            self._buffer[(self._head + self._size) % self.m] = s_tilde
            self._size += 1
            return None
        evicted = self._buffer[self._head].copy()
        self._buffer[self._head] = s_tilde
        self._head = (self._head + 1) % self.m
        return evicted

    def apply_h(self, g: np.ndarray) -> np.ndarray:
        """S̃(L̃(S̃ᵀg))，不构造 n×n 矩阵"""
        if self._size == 0:
            raise EmptyStateError("子空间状态为空，无法计算 H̃g")
        return self.expand(self.L @ self.project(g))

    def dense_h(self) -> np.ndarray:
        """显式构造 H̃ = S̃ L̃ S̃ᵀ（仅测试/校验用）"""
        if self._size == 0:
            return np.zeros((self.n, self.n))
        S = self.columns.T
        return S @ self.L @ S.T

    def scalar_count(self) -> int:
        """状态持有的标量个数（存储审计）"""
        # 缓冲区 + L̃ + (m, n, count, head, size)
        return self._buffer.size + self.L.size + 5

    def copy(self) -> "SubspaceState":
        clone = SubspaceState(self.m, self.n)
        clone.count = self.count
        clone._buffer = self._buffer.copy()
        clone._head = self._head
        clone._size = self._size
        clone.L = self.L.copy()
        return clone

    def to_dict(self) -> dict[str, Any]:
        """
        JSON 快照：columns 为从旧到新的列表，L 为行主序展开
        """
        return {
            "m": self.m,
            "n": self.n,
            "count": self.count,
            "columns": self.columns.tolist(),
            "L": self.L.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SubspaceState":
        state = cls(int(data["m"]), int(data["n"]))
        columns = np.asarray(data["columns"], dtype=float).reshape(-1, state.n)
        if columns.shape[0] > state.m:
            raise DimensionError(f"快照列数 {columns.shape[0]} 超过 m={state.m}")
        for col in columns:
            state.append(col)
        side = columns.shape[0]
        state.L = np.asarray(data["L"], dtype=float).reshape(side, side)
        state.count = int(data.get("count", side))
        return state


def _symmetrize(L: np.ndarray) -> np.ndarray:
    return 0.5 * (L + L.T)


def build_tk(t: np.ndarray, yts: np.ndarray) -> np.ndarray:
    """
    构造 T_k(t)

    第 1 列为 (t_1, …, t_{m−1}, t_m − yts_1)；第 2…m 列在前 m−1 行为单位块，
    末行为 −yts_j。

    Raises:
        DimensionError: t 与 yts 长度不一致或为空
    """
    t = np.asarray(t, dtype=float)
    yts = np.asarray(yts, dtype=float)
    if t.ndim != 1 or t.shape != yts.shape or t.size == 0:
        raise DimensionError(f"t 与 yts 需为等长非空向量，收到 {t.shape} / {yts.shape}")
    m = t.size
    T = np.zeros((m, m))
    T[:, 0] = t
    T[m - 1, 0] -= yts[0]
    if m > 1:
        T[np.arange(m - 1), np.arange(1, m)] = 1.0
        T[m - 1, 1:] = -yts[1:]
    return T


def solve_t(S_next: np.ndarray, target: np.ndarray) -> np.ndarray:
    """
    argmin_t ‖S_next·t − target‖₂，秩亏时取最小范数解

    使用带列主元的正交分解（LAPACK gelsy），秩阈值为 1e-12 相对最大列范数。
    """
    S_next = np.asarray(S_next, dtype=float)
    if S_next.ndim == 1:
        S_next = S_next[:, None]
    col_norms = np.linalg.norm(S_next, axis=0)
    if S_next.size == 0 or not np.any(col_norms > 0.0):
        return np.zeros(S_next.shape[1])
    t, _, _, _ = scipy.linalg.lstsq(S_next, target, cond=LSTSQ_RANK_TOL, lapack_driver="gelsy")
    return np.asarray(t, dtype=float)


def update_l_growing(state: SubspaceState, pair: CurvaturePair) -> SubspaceState:
    """
    未满时的扩展更新：

        L̃′ = [[L̃, −L̃c], [−cᵀL̃, cᵀL̃c + 1]],  c = S̃ᵀỹ

    S̃ 追加 s̃，边长加 1。空状态时得到 L̃ = [1]。
    """
    if state.size >= state.m:
        raise DimensionError("子空间已满，应使用截断更新")
    k = state.size
    L_new = np.zeros((k + 1, k + 1))
    if k > 0:
        c = state.project(pair.y_tilde)
        Lc = state.L @ c
        L_new[:k, :k] = state.L
        L_new[:k, k] = -Lc
        L_new[k, :k] = -Lc
        L_new[k, k] = c @ Lc + 1.0
    else:
        L_new[0, 0] = 1.0
    state.L = _symmetrize(L_new)
    state.append(pair.s_tilde)
    state.count += 1
    return state


def update_l_truncated(
    state: SubspaceState,
    pair: CurvaturePair,
    t: np.ndarray,
    yts: np.ndarray,
) -> SubspaceState:
    """
    已满时的截断更新：L̃′ = T_k(t)·L̃·T_k(t)ᵀ + e_m e_mᵀ，淘汰最旧列、追加 s̃
    """
    if state.size < state.m:
        raise DimensionError("子空间未满，应使用扩展更新")
    T = build_tk(t, yts)
    if T.shape != state.L.shape:
        raise DimensionError(f"T_k 形状 {T.shape} 与 L̃ {state.L.shape} 不一致")
    L_new = T @ state.L @ T.T
    L_new[-1, -1] += 1.0
    state.L = _symmetrize(L_new)
    state.append(pair.s_tilde)
    state.count += 1
    return state


def absorb_pair(state: SubspaceState, pair: CurvaturePair) -> float:
    """
    吸收一个曲率对，自动选择扩展/截断更新

    Returns:
        截断时最小二乘的相对残差 ‖S_next·t − s̃_old‖/‖s̃_old‖；扩展时为 0
    """
    if state.size < state.m:
        update_l_growing(state, pair)
        return 0.0

    columns = state.columns
    oldest = columns[0]
    S_next = np.vstack([columns[1:], pair.s_tilde[None, :]]).T
    t = solve_t(S_next, oldest)
    yts = columns @ pair.y_tilde
    residual = float(np.linalg.norm(S_next @ t - oldest) / max(np.linalg.norm(oldest), 1e-300))
    update_l_truncated(state, pair, t, yts)
    return residual


def apply_h(state: SubspaceState, g: np.ndarray) -> np.ndarray:
    """H̃g = S̃(L̃(S̃ᵀg))，O(mn + m²)"""
    return state.apply_h(g)
