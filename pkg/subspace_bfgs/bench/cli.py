"""
命令行入口

    python -m subspace_bfgs --problem ARWHEAD@1024 --variant all --m 8
    python -m subspace_bfgs --preset table3 --format csv --out table3.csv

退出码：0 表示没有配置错误（单次运行失败属于数据），2 表示配置错误。
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from subspace_bfgs import __version__
from subspace_bfgs.bench.report import emit
from subspace_bfgs.bench.runner import PRESETS, RunSpec, run_suite
from subspace_bfgs.config import VARIANTS, get_config, reload_config
from subspace_bfgs.core.exceptions import ConfigurationError
from subspace_bfgs.utils.logger import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subspace_bfgs",
        description="Fast-BFGS 与基线优化器的 nfg 基准测试",
    )
    parser.add_argument("--problem", action="append", metavar="NAME[@N]",
                        help="测试问题，可重复；缺省时使用预设网格")
    parser.add_argument("--variant", action="append", choices=[*VARIANTS, "all"],
                        help="优化器变体，可重复；all 表示全部")
    parser.add_argument("--m", action="append", type=int, metavar="INT", help="子空间维度，可重复")
    parser.add_argument("--tol", type=float, help="梯度范数终止阈值（默认 1e-5）")
    parser.add_argument("--max-nfg", type=int, help="求值预算（默认 1000）")
    parser.add_argument("--format", choices=["csv", "markdown"], help="输出格式")
    parser.add_argument("--out", type=Path, help="输出文件，缺省为标准输出")
    parser.add_argument("--jobs", type=int, help="并发线程数（SUBSPACE_BENCH_THREADS 优先）")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="预设网格（默认 table2）")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
                        help="日志级别")
    parser.add_argument("--config", help="YAML 配置文件路径")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def _expand_variants(requested: Optional[list[str]], fallback: list[str]) -> list[str]:
    if not requested:
        return list(fallback)
    variants: list[str] = []
    for name in requested:
        for variant in (VARIANTS if name == "all" else (name,)):
            if variant not in variants:
                variants.append(variant)
    return variants


def build_spec(args: argparse.Namespace, config) -> RunSpec:
    """
    由命令行参数组装网格规格；显式参数覆盖预设

    Raises:
        ConfigurationError: 参数校验失败
    """
    preset_name = args.preset or (None if args.problem else "table2")
    preset = PRESETS.get(preset_name, {}) if preset_name else {}
    try:
        return RunSpec(
            problems=args.problem or preset.get("problems", []),
            variants=_expand_variants(args.variant, preset.get("variants", list(VARIANTS))),
            ms=args.m or preset.get("ms", config.bench.m_values),
            tol=args.tol,
            max_nfg=args.max_nfg,
            jobs=config.resolve_jobs(args.jobs),
        )
    except ValidationError as e:
        raise ConfigurationError(f"参数无效: {e}") from e


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        config = reload_config(args.config) if args.config else get_config()
    except ValidationError as e:
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    setup_logging(args.log_level or config.log_level, config.log_format, config.log_file)

    try:
        spec = build_spec(args, config)
        report = run_suite(spec, config)
        text = emit(report, args.format or config.bench.format)
    except ConfigurationError as e:
        logger.error("配置错误", error=str(e))
        print(f"配置错误: {e}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(text, encoding="utf-8")
        logger.info("报告已写入", path=str(args.out), rows=len(report.rows))
    else:
        sys.stdout.write(text)
    return EXIT_OK
