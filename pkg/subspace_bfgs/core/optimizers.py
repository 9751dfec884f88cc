"""
优化器

提供统一的迭代驱动和五种搜索方向：
- gd: 最速下降
- bfgs: 稠密逆 Hessian BFGS（H₀ = I）
- lbfgs: 双循环 L-BFGS
- fast-a / fast-b: 子空间 Fast-BFGS 加 ver-A / ver-B 修正

所有求值（主循环、线搜索、Hessian-向量积）都经过同一个计数器，预算严格执行。
"""

from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import ClassVar, Iterator, Optional

import numpy as np

from subspace_bfgs.config import OptimizerConfig
from subspace_bfgs.core.correction import ver_a, ver_b
from subspace_bfgs.core.exceptions import (
    BudgetExhausted,
    CapacityError,
    ConfigurationError,
    CurvatureSkip,
)
from subspace_bfgs.core.linesearch import strong_wolfe
from subspace_bfgs.core.problems import Problem
from subspace_bfgs.core.subspace import SubspaceState, absorb_pair, rescale_pair
from subspace_bfgs.utils.logger import get_logger

logger = get_logger(__name__)

# 稠密 BFGS 允许的最大维度
DENSE_BFGS_MAX_N = 4096


class TraceStatus(str, Enum):
    """优化运行结束状态"""
    CONVERGED = "converged"
    BUDGET_EXHAUSTED = "budget-exhausted"
    LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass
class IterationRecord:
    """单次迭代记录"""
    k: int
    f: float
    gnorm: float
    tau: float
    alpha: float
    nfg: int


@dataclass
class Trace:
    """一次优化运行的完整记录"""
    problem: str
    variant: str
    m: int
    iterates: list[IterationRecord]
    final_x: np.ndarray
    status: TraceStatus
    nfg: int
    hvp_evals: int = 0
    skipped_pairs: int = 0
    fallbacks: int = 0

    @property
    def final_gnorm(self) -> float:
        return self.iterates[-1].gnorm if self.iterates else float("nan")

    @property
    def final_f(self) -> float:
        return self.iterates[-1].f if self.iterates else float("nan")

    @property
    def converged(self) -> bool:
        return self.status is TraceStatus.CONVERGED

    @property
    def line_search_nfg(self) -> int:
        """不含 Hessian-向量积的求值次数"""
        return self.nfg - self.hvp_evals


@dataclass
class StepInfo:
    """一次被接受的迭代步（供 iterate() 的调用方检查）"""
    k: int
    x_prev: np.ndarray
    g_prev: np.ndarray
    x: np.ndarray
    g: np.ndarray
    f: float
    tau: float
    alpha: float
    p: np.ndarray
    residual: float = 0.0
    skipped: bool = False


class CountingObjective:
    """
    带计数和预算的目标函数包装

    f 与 ∇f 同点求值记 1 次；单独的梯度求值（Hessian-向量积）也记 1 次。
    """

    def __init__(self, problem: Problem, max_nfg: int):
        self.problem = problem
        self.max_nfg = int(max_nfg)
        self.nfg = 0

    @property
    def remaining(self) -> int:
        return self.max_nfg - self.nfg

    def _charge(self) -> None:
        if self.nfg >= self.max_nfg:
            raise BudgetExhausted(f"{self.problem.name}: 求值预算 {self.max_nfg} 已用完")
        self.nfg += 1

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        self._charge()
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return self.problem.value_and_grad(x)

    def grad(self, x: np.ndarray) -> np.ndarray:
        self._charge()
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return np.asarray(self.problem.grad(x), dtype=float)


class BaseOptimizer(ABC):
    """
    优化器基类

    子类只需给出搜索方向和曲率对的吸收方式；主循环、线搜索、
    最速下降回退和 nfg 记账都在这里。
    """

    variant: ClassVar[str] = ""
    uses_memory: ClassVar[bool] = False

    def __init__(self, problem: Problem, config: OptimizerConfig):
        self.problem = problem
        self.config = config
        self.objective = CountingObjective(problem, config.max_nfg)
        self.records: list[IterationRecord] = []
        self.status: Optional[TraceStatus] = None
        self.x = problem.x0.copy()
        self.hvp_evals = 0
        self.skipped_pairs = 0
        self.fallbacks = 0
        self.f_prev: Optional[float] = None

    @abstractmethod
    def direction(self, k: int, x: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, float]:
        """
        计算搜索方向

        Returns:
            (p, alpha)，alpha 为修正长度（无修正时为 0）
        """

    @abstractmethod
    def update(self, s: np.ndarray, y: np.ndarray) -> float:
        """
        吸收曲率对 (s, y)

        Returns:
            截断最小二乘残差（无意义时为 0）

        Raises:
            CurvatureSkip: 曲率对被跳过
        """

    def initial_step(self, f: float, dphi0: float) -> float:
        """线搜索初始步长"""
        return self.config.tau_init

    def allows_fallback(self) -> bool:
        """方向失败时是否允许沿 −g 重试"""
        return True

    def _line_search(self, x, f, g, p) -> Optional[tuple[float, np.ndarray, float, np.ndarray]]:
        """沿 p 做强 Wolfe 线搜索，失败返回 None"""
        dphi0 = float(g @ p)
        if not np.isfinite(dphi0) or dphi0 >= 0.0:
            return None
        max_evals = min(self.config.ls_max_evals, self.objective.remaining)
        if max_evals < 1:
            raise BudgetExhausted("线搜索前预算已用完")

        cache: dict[float, tuple[float, np.ndarray]] = {}

        def evaluate(tau: float) -> tuple[float, np.ndarray]:
            if tau not in cache:
                cache[tau] = self.objective.value_and_grad(x + tau * p)
            return cache[tau]

        result = strong_wolfe(
            lambda tau: evaluate(tau)[0],
            lambda tau: float(evaluate(tau)[1] @ p),
            tau_init=self.initial_step(f, dphi0),
            c1=self.config.c1,
            c2=self.config.c2,
            max_evals=max_evals,
            phi0=f,
            dphi0=dphi0,
        )
        usable = result.converged or (
            result.tau > 0.0 and result.phi is not None and result.phi < f
        )
        if not usable:
            logger.debug("线搜索未找到可用步长", status=result.status.value, nfg_used=result.nfg_used)
            return None
        f_new, g_new = cache[result.tau]
        return result.tau, x + result.tau * p, f_new, g_new

    def _record(self, k: int, f: float, g: np.ndarray, tau: float, alpha: float) -> None:
        gnorm = float(np.linalg.norm(g))
        self.records.append(IterationRecord(k, float(f), gnorm, float(tau), float(alpha), self.objective.nfg))
        logger.debug("迭代", k=k, f=f, gnorm=gnorm, tau=tau, alpha=alpha, nfg=self.objective.nfg)

    def iterate(self) -> Iterator[StepInfo]:
        """
        逐步执行优化，每接受一步产出一个 StepInfo

        结束后 self.status 给出终止原因。
        """
        cfg = self.config
        try:
            f, g = self.objective.value_and_grad(self.x)
        except BudgetExhausted:
            self.status = TraceStatus.BUDGET_EXHAUSTED
            return
        x = self.x
        self._record(0, f, g, 0.0, 0.0)

        k = 0
        while True:
            gnorm = float(np.linalg.norm(g))
            if gnorm < cfg.tol:
                self.status = TraceStatus.CONVERGED
                return
            if not (np.isfinite(gnorm) and np.isfinite(f)):
                logger.warning("目标函数或梯度非有限", k=k)
                self.status = TraceStatus.LINE_SEARCH_FAILURE
                return

            try:
                p, alpha = self.direction(k, x, g)
                step = self._line_search(x, f, g, p) if np.all(np.isfinite(p)) else None
                if step is None:
                    if self.objective.remaining <= 0:
                        raise BudgetExhausted("线搜索耗尽预算")
                    if np.array_equal(p, -g) or not self.allows_fallback():
                        self.status = TraceStatus.LINE_SEARCH_FAILURE
                        return
                    self.fallbacks += 1
                    logger.warning("搜索方向失败，回退到最速下降", k=k, alpha=alpha)
                    p, alpha = -g, 0.0
                    step = self._line_search(x, f, g, p)
                    if step is None:
                        if self.objective.remaining <= 0:
                            raise BudgetExhausted("线搜索耗尽预算")
                        self.status = TraceStatus.LINE_SEARCH_FAILURE
                        return
            except BudgetExhausted:
                self.status = TraceStatus.BUDGET_EXHAUSTED
                return

            tau, x_new, f_new, g_new = step
            residual, skipped = 0.0, False
            try:
                residual = self.update(x_new - x, g_new - g)
            except CurvatureSkip as e:
                skipped = True
                self.skipped_pairs += 1
                logger.debug("跳过曲率对", k=k, sty=e.sty)

            info = StepInfo(
                k=k + 1, x_prev=x, g_prev=g, x=x_new, g=g_new, f=f_new,
                tau=tau, alpha=alpha, p=p, residual=residual, skipped=skipped,
            )
            k += 1
            self.f_prev = f
            x, f, g = x_new, f_new, g_new
            self.x = x
            self._record(k, f, g, tau, alpha)
            yield info

    def run(self) -> Trace:
        """执行到终止并返回 Trace"""
        logger.info(
            "优化开始", problem=self.problem.name, n=self.problem.n,
            variant=self.variant, m=self.config.m,
        )
        for _ in self.iterate():
            pass
        trace = self.trace()
        log = logger.info if trace.converged else logger.warning
        log(
            "优化结束", problem=self.problem.name, variant=self.variant,
            status=trace.status.value, nfg=trace.nfg, gnorm=trace.final_gnorm,
        )
        return trace

    def trace(self) -> Trace:
        return Trace(
            problem=self.problem.name,
            variant=self.variant,
            m=self.config.m,
            iterates=list(self.records),
            final_x=self.x.copy(),
            status=self.status or TraceStatus.BUDGET_EXHAUSTED,
            nfg=self.objective.nfg,
            hvp_evals=self.hvp_evals,
            skipped_pairs=self.skipped_pairs,
            fallbacks=self.fallbacks,
        )


class GradientDescent(BaseOptimizer):
    """最速下降：p = −∇f"""

    variant = "gd"

    def initial_step(self, f: float, dphi0: float) -> float:
        """
        k ≥ 1 时按上一步的下降量插值：τ₀ = min(tau_init, 1.01·2(f_k − f_{k−1})/φ'(0))

        插值结果非正或非有限时用 tau_init。
        """
        if self.f_prev is None:
            return self.config.tau_init
        with np.errstate(divide="ignore", invalid="ignore"):
            tau = 1.01 * 2.0 * (f - self.f_prev) / dphi0
        if not np.isfinite(tau) or tau <= 0.0:
            return self.config.tau_init
        return min(self.config.tau_init, float(tau))

    def direction(self, k, x, g):
        return -g, 0.0

    def update(self, s, y):
        return 0.0


class DenseBFGS(BaseOptimizer):
    """稠密逆 Hessian BFGS，H₀ = I"""

    variant = "bfgs"

    def __init__(self, problem: Problem, config: OptimizerConfig):
        if problem.n > DENSE_BFGS_MAX_N:
            raise CapacityError(f"稠密 BFGS 需要 n <= {DENSE_BFGS_MAX_N}，收到 n={problem.n}")
        super().__init__(problem, config)
        self.H = np.eye(problem.n)

    def direction(self, k, x, g):
        return -(self.H @ g), 0.0

    def update(self, s, y):
        sty = float(s @ y)
        if sty <= self.config.curvature_tol * np.linalg.norm(s) * np.linalg.norm(y):
            raise CurvatureSkip(sty, self.config.curvature_tol)
        self.H = bfgs_inverse_update(self.H, s, y)
        return 0.0


def bfgs_inverse_update(H: np.ndarray, s: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    H⁺ = (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ，ρ = 1/sᵀy

    按展开式计算，O(n²)。
    """
    rho = 1.0 / float(s @ y)
    Hy = H @ y
    yHy = float(y @ Hy)
    H_new = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + (rho * rho * yHy + rho) * np.outer(s, s)
    return 0.5 * (H_new + H_new.T)


def two_loop(g: np.ndarray, pairs, gamma: float = 1.0) -> np.ndarray:
    """
    L-BFGS 双循环：返回 H·g，H₀ = γI

    Args:
        g: 梯度
        pairs: (s, y, ρ) 序列，从旧到新
        gamma: 初始缩放
    """
    q = np.array(g, dtype=float)
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    r = gamma * q
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return r


class LBFGS(BaseOptimizer):
    """双循环 L-BFGS，γ_k = sᵀy / yᵀy"""

    variant = "lbfgs"
    uses_memory = True

    def __init__(self, problem: Problem, config: OptimizerConfig):
        super().__init__(problem, config)
        self.pairs: deque = deque(maxlen=config.m)
        self.gamma = 1.0

    def direction(self, k, x, g):
        return -two_loop(g, self.pairs, self.gamma), 0.0

    def update(self, s, y):
        sty = float(s @ y)
        if sty <= self.config.curvature_tol * np.linalg.norm(s) * np.linalg.norm(y):
            raise CurvatureSkip(sty, self.config.curvature_tol)
        self.pairs.append((s, y, 1.0 / sty))
        self.gamma = sty / float(y @ y)
        return 0.0


class FastBFGS(BaseOptimizer):
    """
    子空间 Fast-BFGS

    第 0 步为最速下降；之后 p_k = −S̃ L̃ S̃ᵀ∇f_k − α_k v_k，
    前 m 个曲率对用扩展更新，之后用最小二乘 + 截断更新。
    constrained_mode 下子空间填满后 α_k = 0，方向失败时也不再回退到 −g。
    """

    variant = "fast-a"
    uses_memory = True

    def __init__(self, problem: Problem, config: OptimizerConfig):
        super().__init__(problem, config)
        self.state = SubspaceState(config.m, problem.n)
        self._correct = ver_b if config.variant == "fast-b" else ver_a
        self.variant = "fast-b" if config.variant == "fast-b" else "fast-a"

    def correction_enabled(self) -> bool:
        return not (self.config.constrained_mode and self.state.count >= self.config.m)

    def allows_fallback(self) -> bool:
        # −g 一般不在子空间内
        return self.correction_enabled()

    def direction(self, k, x, g):
        if self.state.size == 0:
            return -g, 0.0
        Hg = self.state.apply_h(g)
        if not self.correction_enabled():
            return -Hg, 0.0
        correction = self._correct(
            g, Hg, self.objective.grad, x, self.config.hvp_eps,
            trust=self.config.alpha_trust, max_ratio=self.config.alpha_max_ratio,
        )
        self.hvp_evals += correction.hvp_evals
        return -Hg - correction.step, correction.alpha

    def update(self, s, y):
        pair = rescale_pair(s, y, self.config.curvature_tol)
        return absorb_pair(self.state, pair)


_OPTIMIZERS: dict[str, type[BaseOptimizer]] = {
    "gd": GradientDescent,
    "bfgs": DenseBFGS,
    "lbfgs": LBFGS,
    "fast-a": FastBFGS,
    "fast-b": FastBFGS,
}


def create_optimizer(problem: Problem, config: OptimizerConfig) -> BaseOptimizer:
    """
    按 config.variant 创建优化器

    Raises:
        ConfigurationError: 未知变体
        CapacityError: 稠密 BFGS 维度超限
    """
    optimizer_class = _OPTIMIZERS.get(config.variant)
    if optimizer_class is None:
        raise ConfigurationError(f"未知优化器变体: {config.variant}")
    return optimizer_class(problem, config)


def minimize(problem: Problem, config: Optional[OptimizerConfig] = None) -> Trace:
    """按 config.variant 运行优化"""
    return create_optimizer(problem, config or OptimizerConfig()).run()


def _with_variant(config: Optional[OptimizerConfig], variant: str) -> OptimizerConfig:
    config = config or OptimizerConfig()
    return config if config.variant == variant else config.model_copy(update={"variant": variant})


def fast_bfgs(problem: Problem, config: Optional[OptimizerConfig] = None) -> Trace:
    """
    Fast-BFGS（ver-A 或 ver-B）

    Raises:
        ConfigurationError: config.variant 不是 fast-a / fast-b
    """
    config = config or OptimizerConfig()
    if config.variant not in ("fast-a", "fast-b"):
        raise ConfigurationError(f"fast_bfgs 需要 variant 为 fast-a 或 fast-b，收到 {config.variant}")
    return FastBFGS(problem, config).run()


def bfgs(problem: Problem, config: Optional[OptimizerConfig] = None) -> Trace:
    """稠密 BFGS"""
    return DenseBFGS(problem, _with_variant(config, "bfgs")).run()


def lbfgs(problem: Problem, config: Optional[OptimizerConfig] = None) -> Trace:
    """L-BFGS"""
    return LBFGS(problem, _with_variant(config, "lbfgs")).run()


def gd(problem: Problem, config: Optional[OptimizerConfig] = None) -> Trace:
    """最速下降"""
    return GradientDescent(problem, _with_variant(config, "gd")).run()
