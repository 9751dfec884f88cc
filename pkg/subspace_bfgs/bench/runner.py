"""
基准测试运行器

按 (问题 × 变体 × m) 网格运行优化器，收集 nfg 结果：
- 所有问题名、维度、变体在任何运行开始前统一校验
- 可并发执行，结果行顺序始终与规格顺序一致
- gd / bfgs 的结果与 m 无关，每个问题只运行一次
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from typing import Annotated, Any, Optional

from pydantic import BaseModel, Field

from subspace_bfgs import __version__
from subspace_bfgs.config import VARIANTS, Config, Variant, get_config
from subspace_bfgs.core.exceptions import ConfigurationError, DimensionError, UnknownProblemError
from subspace_bfgs.core.optimizers import DENSE_BFGS_MAX_N, create_optimizer
from subspace_bfgs.core.problems import MANDATORY_PROBLEMS, Problem, get_problem, list_problems
from subspace_bfgs.utils.logger import LogContext, get_logger

logger = get_logger(__name__)

# 结果与 m 无关的变体
M_INDEPENDENT_VARIANTS = frozenset({"gd", "bfgs"})

PRESETS: dict[str, dict[str, Any]] = {
    # 14 个必选问题 × 全部变体，m = 8
    "table2": {
        "problems": list(MANDATORY_PROBLEMS),
        "variants": list(VARIANTS),
        "ms": [8],
    },
    # 两种修正在不同记忆长度下的对比
    "table3": {
        "problems": sorted(name for name, _ in list_problems()),
        "variants": ["fast-a", "fast-b"],
        "ms": [2, 4, 8],
    },
}


@dataclass(frozen=True)
class ProblemRef:
    """问题引用：名称 + 可选维度"""
    name: str
    n: Optional[int] = None

    def __str__(self) -> str:
        return self.name if self.n is None else f"{self.name}@{self.n}"


def parse_problem(text: str) -> ProblemRef:
    """
    解析 "NAME" 或 "NAME@N"

    Raises:
        ConfigurationError: 维度不是正整数
    """
    name, sep, dim = text.strip().partition("@")
    if not name:
        raise ConfigurationError(f"问题名为空: {text!r}")
    if not sep:
        return ProblemRef(name.upper())
    try:
        n = int(dim)
    except ValueError as e:
        raise ConfigurationError(f"无法解析维度: {text!r}") from e
    if n < 1:
        raise ConfigurationError(f"维度必须为正整数: {text!r}")
    return ProblemRef(name.upper(), n)


class RunSpec(BaseModel):
    """一次基准测试的网格规格"""
    problems: list[str] = Field(default_factory=list, description="NAME 或 NAME@N")
    variants: list[Variant] = Field(default_factory=lambda: list(VARIANTS))
    ms: list[Annotated[int, Field(ge=1)]] = Field(default_factory=lambda: [8])
    tol: Optional[float] = Field(default=None, gt=0.0)
    max_nfg: Optional[int] = Field(default=None, ge=1)
    jobs: int = Field(default=1, ge=1)


class BenchRow(BaseModel):
    """单次运行结果"""
    problem: str
    n: int
    variant: str
    m: int
    nfg: int
    status: str
    gnorm: float
    seconds: float


class BenchReport(BaseModel):
    """基准测试报告：结果行 + 元数据（配置回显、版本、时间戳）"""
    rows: list[BenchRow] = Field(default_factory=list)
    metadata: dict[str, Any] = Field(default_factory=dict)

    @property
    def max_nfg(self) -> int:
        return int(self.metadata.get("max_nfg", 1000))


@dataclass(frozen=True)
class _Task:
    problem: Problem
    variant: str
    m: int


def _resolve_problems(refs: list[ProblemRef]) -> list[Problem]:
    problems = []
    for ref in refs:
        try:
            problems.append(get_problem(ref.name, ref.n))
        except (UnknownProblemError, DimensionError) as e:
            raise ConfigurationError(f"无效的问题 {ref}: {e}") from e
    return problems


def _run_task(task: _Task, config: Config, tol: Optional[float], max_nfg: Optional[int]) -> BenchRow:
    overrides: dict[str, Any] = {"variant": task.variant, "m": task.m}
    if tol is not None:
        overrides["tol"] = tol
    if max_nfg is not None:
        overrides["max_nfg"] = max_nfg
    run_config = config.optimizer_config(**overrides)

    with LogContext(problem=task.problem.name, variant=task.variant, m=task.m):
        started = time.perf_counter()
        trace = create_optimizer(task.problem, run_config).run()
        seconds = time.perf_counter() - started

    return BenchRow(
        problem=task.problem.name,
        n=task.problem.n,
        variant=task.variant,
        m=task.m,
        nfg=trace.nfg,
        status=trace.status.value,
        gnorm=trace.final_gnorm,
        seconds=seconds,
    )


def run_suite(spec: RunSpec, config: Optional[Config] = None) -> BenchReport:
    """
    执行基准网格

    Args:
        spec: 网格规格
        config: 全局配置，缺省使用 get_config()

    Returns:
        每个 (问题, 变体, m) 一行的报告，顺序与规格一致

    Raises:
        ConfigurationError: 问题名 / 维度 / 变体无效（在任何运行之前）
    """
    config = config or get_config()
    for variant in spec.variants:
        if variant not in VARIANTS:
            raise ConfigurationError(f"未知优化器变体: {variant}")
    problems = _resolve_problems([parse_problem(text) for text in spec.problems])
    if "bfgs" in spec.variants:
        for problem in problems:
            if problem.n > DENSE_BFGS_MAX_N:
                raise ConfigurationError(f"稠密 BFGS 不支持 {problem.name}@{problem.n}（n > {DENSE_BFGS_MAX_N}）")

    # 行的规格顺序；m 无关的变体映射到同一个任务
    layout: list[tuple[int, int]] = []
    tasks: list[_Task] = []
    shared: dict[tuple[int, str], int] = {}
    for p_index, problem in enumerate(problems):
        for variant in spec.variants:
            for m in spec.ms:
                key = (p_index, variant)
                if variant in M_INDEPENDENT_VARIANTS and key in shared:
                    layout.append((shared[key], m))
                    continue
                shared[key] = len(tasks)
                tasks.append(_Task(problem, variant, m))
                layout.append((shared[key], m))

    tol = spec.tol
    max_nfg = spec.max_nfg
    logger.info("基准测试开始", runs=len(tasks), rows=len(layout), jobs=spec.jobs)
    if spec.jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(lambda task: _run_task(task, config, tol, max_nfg), tasks))
    else:
        results = [_run_task(task, config, tol, max_nfg) for task in tasks]

    rows = [results[index].model_copy(update={"m": m}) for index, m in layout]
    effective = config.optimizer_config(
        **{k: v for k, v in (("tol", tol), ("max_nfg", max_nfg)) if v is not None}
    )
    metadata = {
        "version": __version__,
        "timestamp": datetime.now().isoformat(timespec="seconds"),
        "problems": list(spec.problems),
        "variants": list(spec.variants),
        "ms": list(spec.ms),
        "tol": effective.tol,
        "max_nfg": effective.max_nfg,
        "jobs": spec.jobs,
        "optimizer": effective.model_dump(exclude={"variant", "m"}),
    }
    logger.info("基准测试完成", rows=len(rows))
    return BenchReport(rows=rows, metadata=metadata)
