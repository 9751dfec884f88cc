"""
子空间等价性校验

在约束模式下（子空间填满后 α = 0），Fast-BFGS 的迭代点始终停留在
x0 + span(S̃)。这里把同一问题写成 m 维 ξ 坐标上的 BFGS，与 x 空间运行逐步对照：
- 迭代点：x_k 与 x0 + S_unit·ξ_k
- 逆 Hessian：S_unitᵀ H̃_k S_unit 与 H_k^ξ
- 步长范数：‖x_k − x_{k−1}‖ 与 ‖ξ_k − ξ_{k−1}‖
并检查割线方程 H̃_{k+1} y_k = s_k。
"""

import dataclasses
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field

from subspace_bfgs.config import OptimizerConfig
from subspace_bfgs.core.exceptions import RankError
from subspace_bfgs.core.linesearch import strong_wolfe
from subspace_bfgs.core.optimizers import FastBFGS, bfgs_inverse_update
from subspace_bfgs.core.problems import Problem
from subspace_bfgs.core.subspace import SubspaceState
from subspace_bfgs.utils.logger import get_logger, log_function_call

logger = get_logger(__name__)

# 投影后范数相对最大列范数低于此值判为秩亏
RANK_TOL = 1e-10
# 约化梯度下降到种子时刻的这个比例后停止对照
LOCKSTEP_GTOL = 1e-5
# 约化梯度相对全梯度低于此值时 y 的舍入误差开始主导，停止对照
LOCKSTEP_FULL_RATIO = 1e-6
# 逐步检查 H̃ 秩时允许的最大维度（稠密 SVD）
RANK_CHECK_MAX_N = 200
# 对照运行的求值预算（不参与判定）
_LOCKSTEP_BUDGET = 10 ** 6


@dataclass
class SubspaceBasis:
    """正交基 S_unit（n×m）与锚点 x0"""
    S_unit: np.ndarray
    x0: np.ndarray

    @property
    def m(self) -> int:
        return self.S_unit.shape[1]

    def point(self, xi: np.ndarray) -> np.ndarray:
        """x0 + S_unit·ξ"""
        return self.x0 + self.S_unit @ xi

    def coordinates(self, x: np.ndarray) -> np.ndarray:
        """S_unitᵀ(x − x0)"""
        return self.S_unit.T @ (x - self.x0)


def schmidt(S: np.ndarray, x0: Optional[np.ndarray] = None) -> SubspaceBasis:
    """
    修正 Gram–Schmidt 正交化（每列做两遍投影）

    Args:
        S: n×m 列向量组
        x0: 锚点，缺省为原点

    Raises:
        RankError: 某列投影后范数 < 1e-10·最大列范数
    """
    Q = np.array(S, dtype=float)
    if Q.ndim == 1:
        Q = Q[:, None]
    n, m = Q.shape
    largest = float(np.max(np.linalg.norm(Q, axis=0))) if m else 0.0
    if largest == 0.0:
        raise RankError(0, m)
    for k in range(m):
        v = Q[:, k]
        for _ in range(2):
            for i in range(k):
                v -= (Q[:, i] @ v) * Q[:, i]
        norm = float(np.linalg.norm(v))
        if norm < RANK_TOL * largest:
            raise RankError(k, m)
        Q[:, k] = v / norm
    anchor = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    return SubspaceBasis(S_unit=Q, x0=anchor)


class XiSpaceBFGS:
    """ξ 坐标上的稠密 BFGS：g(ξ) = f(x0 + S_unit·ξ)，∇g = S_unitᵀ∇f"""

    def __init__(
        self,
        problem: Problem,
        basis: SubspaceBasis,
        xi0: np.ndarray,
        H0_xi: np.ndarray,
        curvature_tol: float = 1e-12,
    ):
        H0_xi = np.array(H0_xi, dtype=float)
        try:
            np.linalg.cholesky(0.5 * (H0_xi + H0_xi.T))
        except np.linalg.LinAlgError as e:
            raise ValueError("H0_xi 必须对称正定") from e
        self.problem = problem
        self.basis = basis
        self.curvature_tol = curvature_tol
        self.xi = np.array(xi0, dtype=float)
        self.H = H0_xi
        self.f, self.g = self.value_and_grad(self.xi)

    def value_and_grad(self, xi: np.ndarray) -> tuple[float, np.ndarray]:
        f, g = self.problem.value_and_grad(self.basis.point(xi))
        return f, self.basis.S_unit.T @ g

    def direction(self) -> np.ndarray:
        return -(self.H @ self.g)

    def advance(self, tau: float) -> None:
        """以给定步长前进一步并做 BFGS 更新"""
        xi_new = self.xi + tau * self.direction()
        f_new, g_new = self.value_and_grad(xi_new)
        s = xi_new - self.xi
        y = g_new - self.g
        sty = float(s @ y)
        if sty > self.curvature_tol * np.linalg.norm(s) * np.linalg.norm(y):
            self.H = bfgs_inverse_update(self.H, s, y)
        self.xi, self.f, self.g = xi_new, f_new, g_new


def xi_bfgs(
    problem: Problem,
    basis: SubspaceBasis,
    xi0: np.ndarray,
    H0_xi: np.ndarray,
    steps: int,
    config: Optional[OptimizerConfig] = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    在 ξ 坐标上运行 BFGS（强 Wolfe 线搜索与主驱动一致）

    Returns:
        [(ξ_k, H_k^ξ)]，含初始点；收敛或线搜索失败时提前结束
    """
    cfg = config or OptimizerConfig()
    run = XiSpaceBFGS(problem, basis, xi0, H0_xi, cfg.curvature_tol)
    history = [(run.xi.copy(), run.H.copy())]
    for _ in range(steps):
        if np.linalg.norm(run.g) < cfg.tol:
            break
        d = run.direction()
        xi = run.xi

        def phi(tau):
            return run.value_and_grad(xi + tau * d)[0]

        def dphi(tau):
            return float(run.value_and_grad(xi + tau * d)[1] @ d)

        result = strong_wolfe(
            phi, dphi, cfg.tau_init, cfg.c1, cfg.c2, cfg.ls_max_evals,
            phi0=run.f, dphi0=float(run.g @ d),
        )
        if not result.converged:
            logger.warning("ξ 空间线搜索失败", status=result.status.value)
            break
        run.advance(result.tau)
        history.append((run.xi.copy(), run.H.copy()))
    return history


def check_secant(state: SubspaceState, s: np.ndarray, y: np.ndarray) -> float:
    """割线残差 ‖H̃y − s‖ / ‖s‖"""
    return float(np.linalg.norm(state.apply_h(y) - s) / np.linalg.norm(s))


def rank_profile(state: SubspaceState, tol: float = 1e-10) -> int:
    """稠密 H̃ 的数值秩（奇异值 > tol·σ_max 的个数）"""
    if state.size == 0:
        return 0
    sigma = np.linalg.svd(state.dense_h(), compute_uv=False)
    if sigma[0] == 0.0:
        return 0
    return int(np.sum(sigma > tol * sigma[0]))


def projected_inverse_hessian(state: SubspaceState, basis: SubspaceBasis) -> np.ndarray:
    """S_unitᵀ H̃ S_unit，逐列 apply_h，不构造 n×n 矩阵"""
    S = basis.S_unit
    HS = np.column_stack([state.apply_h(S[:, j]) for j in range(S.shape[1])])
    P = S.T @ HS
    return 0.5 * (P + P.T)


class EquivalenceReport(BaseModel):
    """对照运行的最大偏差报告"""
    problem: str
    n: int
    m: int
    steps_requested: int
    steps_run: int = 0
    iterate_deviation: float = 0.0
    hessian_deviation: float = 0.0
    step_norm_deviation: float = 0.0
    max_eviction_residual: float = 0.0
    max_secant_residual: float = 0.0
    rank_mismatches: int = Field(default=0, description="rank(H̃) != min(已吸收对数, m) 的步数")
    empirical_rate: Optional[float] = Field(default=None, description="末段约化梯度范数比")
    retries: int = 0

    @property
    def max_deviation(self) -> float:
        return max(self.iterate_deviation, self.hessian_deviation, self.step_norm_deviation)

    def passed(self, tol: float = 1e-8) -> bool:
        return (
            self.max_deviation <= tol
            and self.max_eviction_residual <= tol
            and self.rank_mismatches == 0
        )

    def to_json(self) -> str:
        return json.dumps(self.model_dump(), indent=2)

    def to_text(self) -> str:
        lines = [
            f"problem            {self.problem} (n={self.n}, m={self.m})",
            f"steps              {self.steps_run}/{self.steps_requested}",
            f"iterate deviation  {self.iterate_deviation:.3e}",
            f"H deviation        {self.hessian_deviation:.3e}",
            f"step-norm dev.     {self.step_norm_deviation:.3e}",
            f"eviction residual  {self.max_eviction_residual:.3e}",
            f"secant residual    {self.max_secant_residual:.3e}",
            f"rank mismatches    {self.rank_mismatches}",
        ]
        if self.empirical_rate is not None:
            lines.append(f"empirical rate     {self.empirical_rate:.3e}")
        return "\n".join(lines)


def _lockstep(problem: Problem, config: OptimizerConfig, steps: int) -> EquivalenceReport:
    m = config.m
    optimizer = FastBFGS(problem, config)
    iterator = optimizer.iterate()

    # 种子阶段：带修正项，直到吸收 m 个曲率对
    g_full = problem.grad(problem.x0)
    while optimizer.state.count < m:
        info = next(iterator, None)
        if info is None:
            raise RankError(optimizer.state.size, m)
        g_full = info.g
    fallbacks = optimizer.fallbacks
    check_rank = problem.n <= RANK_CHECK_MAX_N

    state = optimizer.state
    basis = schmidt(state.columns.T, x0=problem.x0)
    xi_run = XiSpaceBFGS(
        problem, basis, basis.coordinates(optimizer.x),
        projected_inverse_hessian(state, basis), config.curvature_tol,
    )
    report = EquivalenceReport(problem=problem.name, n=problem.n, m=m, steps_requested=steps)
    if check_rank and rank_profile(state) != m:
        report.rank_mismatches += 1
    g_seed = float(np.linalg.norm(xi_run.g))
    gnorms = [g_seed]

    for _ in range(steps):
        floor = max(LOCKSTEP_GTOL * g_seed, LOCKSTEP_FULL_RATIO * float(np.linalg.norm(g_full)))
        if gnorms[-1] <= floor:
            break
        info = next(iterator, None)
        if info is None:
            break
        if optimizer.fallbacks != fallbacks or info.alpha != 0.0:
            # 这一步离开了子空间，ξ 空间没有对应步
            logger.warning("对照步离开子空间，提前停止", k=info.k)
            break
        g_full = info.g
        xi_prev = xi_run.xi.copy()
        # 两边使用同一次线搜索得到的 τ
        xi_run.advance(info.tau)
        report.steps_run += 1

        report.iterate_deviation = max(
            report.iterate_deviation, float(np.linalg.norm(info.x - basis.point(xi_run.xi)))
        )
        report.hessian_deviation = max(
            report.hessian_deviation,
            float(np.max(np.abs(projected_inverse_hessian(state, basis) - xi_run.H))),
        )
        report.step_norm_deviation = max(
            report.step_norm_deviation,
            abs(float(np.linalg.norm(info.x - info.x_prev)) - float(np.linalg.norm(xi_run.xi - xi_prev))),
        )
        report.max_eviction_residual = max(report.max_eviction_residual, info.residual)
        if not info.skipped:
            report.max_secant_residual = max(
                report.max_secant_residual,
                check_secant(state, info.x - info.x_prev, info.g - info.g_prev),
            )
        if check_rank and rank_profile(state) != min(state.count, m):
            report.rank_mismatches += 1
        gnorms.append(float(np.linalg.norm(xi_run.g)))

    if len(gnorms) >= 3 and gnorms[-2] > 0.0:
        report.empirical_rate = gnorms[-1] / gnorms[-2]
    logger.info(
        "子空间对照完成", problem=problem.name, m=m, steps=report.steps_run,
        max_deviation=report.max_deviation, rate=report.empirical_rate,
    )
    return report


@log_function_call
def check_equivalence(
    problem: Problem,
    m: int,
    steps: int,
    config: Optional[OptimizerConfig] = None,
    seed: int = 0,
    max_retries: int = 5,
) -> EquivalenceReport:
    """
    约束模式 Fast-BFGS 与 ξ 空间 BFGS 逐步对照

    Args:
        problem: 光滑问题
        m: 子空间维度
        steps: 种子阶段之后的对照步数
        config: 线搜索等参数的来源（variant / m / constrained_mode 会被覆盖）
        seed: 秩亏重试时扰动 x0 的随机种子
        max_retries: 最大重试次数

    Raises:
        RankError: 重试后种子步仍然秩亏
    """
    base = config or OptimizerConfig()
    cfg = base.model_copy(update={
        "variant": "fast-a",
        "m": m,
        "constrained_mode": True,
        "max_nfg": _LOCKSTEP_BUDGET,
        "tol": np.finfo(float).tiny,
    })
    rng = np.random.default_rng(seed)
    current = problem
    for attempt in range(max_retries + 1):
        try:
            report = _lockstep(current, cfg, steps)
            report.retries = attempt
            return report
        except RankError as e:
            if attempt == max_retries:
                raise
            logger.warning("种子步秩亏，扰动初始点后重试", attempt=attempt + 1, rank=e.rank)
            jitter = 1e-3 * max(1.0, float(np.linalg.norm(problem.x0))) * rng.standard_normal(problem.n)
            current = dataclasses.replace(problem, x0=problem.x0 + jitter)
    raise RankError(0, m)
