#!/usr/bin/env python3
"""
重新生成 nfg 表格

- table2.md: 14 个必选问题 × 全部变体，m = 8
- table3.md: 全部已注册问题 × (ver-A, ver-B)，m ∈ {2, 4, 8}

用法: python scripts/reproduce_tables.py [输出目录] [--jobs N]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from subspace_bfgs.bench.report import emit  # noqa: E402
from subspace_bfgs.bench.runner import PRESETS, RunSpec, run_suite  # noqa: E402
from subspace_bfgs.config import get_config  # noqa: E402
from subspace_bfgs.utils.logger import get_logger, setup_logging  # noqa: E402

logger = get_logger(__name__)

TABLES = {"table2.md": "table2", "table3.md": "table3"}


def main() -> int:
    parser = argparse.ArgumentParser(description="重新生成 nfg 表格")
    parser.add_argument("out_dir", nargs="?", default="results", type=Path)
    parser.add_argument("--jobs", type=int, default=None)
    args = parser.parse_args()

    config = get_config()
    setup_logging("INFO", config.log_format, config.log_file)
    args.out_dir.mkdir(parents=True, exist_ok=True)

    for filename, preset in TABLES.items():
        spec = RunSpec(**PRESETS[preset], jobs=config.resolve_jobs(args.jobs))
        report = run_suite(spec, config)
        path = args.out_dir / filename
        path.write_text(emit(report, "markdown"), encoding="utf-8")
        logger.info("表格已生成", path=str(path), rows=len(report.rows))
    return 0


if __name__ == "__main__":
    sys.exit(main())
