"""
报告输出

- csv: 表头 problem,n,variant,m,nfg,status,gnorm,seconds，浮点数用 repr 保证可逆
- markdown: 行为 (问题, n)，列为 (变体, m)；预算耗尽显示 ">max_nfg"，线搜索失败显示 "--"
"""

import csv
import io
from typing import Literal

from subspace_bfgs.bench.runner import BenchReport, BenchRow
from subspace_bfgs.core.exceptions import ConfigurationError

CSV_FIELDS = ("problem", "n", "variant", "m", "nfg", "status", "gnorm", "seconds")

ReportFormat = Literal["csv", "markdown"]


def _to_csv(report: BenchReport) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in report.rows:
        writer.writerow([
            row.problem, row.n, row.variant, row.m, row.nfg, row.status,
            repr(row.gnorm), repr(row.seconds),
        ])
    return buffer.getvalue()


def format_cell(row: BenchRow, max_nfg: int) -> str:
    """单元格：收敛为 nfg，预算耗尽为 >max_nfg，失败为 --"""
    if row.status == "converged":
        return str(row.nfg)
    if row.status == "budget-exhausted":
        return f">{max_nfg}"
    return "--"


def _to_markdown(report: BenchReport) -> str:
    columns: list[tuple[str, int]] = []
    lines: dict[tuple[str, int], dict[tuple[str, int], str]] = {}
    for row in report.rows:
        column = (row.variant, row.m)
        if column not in columns:
            columns.append(column)
        lines.setdefault((row.problem, row.n), {})[column] = format_cell(row, report.max_nfg)

    single_m = len({m for _, m in columns}) <= 1
    labels = [variant if single_m else f"{variant} m={m}" for variant, m in columns]
    header = "| Problem | n | " + " | ".join(labels) + " |" if labels else "| Problem | n |"
    rule = "|---|---:|" + "---:|" * len(columns)
    body = [
        f"| {problem} | {n} | " + " | ".join(cells.get(column, "") for column in columns) + " |"
        for (problem, n), cells in lines.items()
    ]
    return "\n".join([header, rule, *body]) + "\n"


def emit(report: BenchReport, format: ReportFormat = "markdown") -> str:
    """
    把报告序列化为文本

    Raises:
        ConfigurationError: 未知格式
    """
    if format == "csv":
        return _to_csv(report)
    if format == "markdown":
        return _to_markdown(report)
    raise ConfigurationError(f"未知报告格式: {format}")


def parse_csv(text: str) -> BenchReport:
    """读回 emit(..., "csv") 的输出（不含元数据）"""
    reader = csv.DictReader(io.StringIO(text))
    rows = [
        BenchRow(
            problem=record["problem"],
            n=int(record["n"]),
            variant=record["variant"],
            m=int(record["m"]),
            nfg=int(record["nfg"]),
            status=record["status"],
            gnorm=float(record["gnorm"]),
            seconds=float(record["seconds"]),
        )
        for record in reader
    ]
    return BenchReport(rows=rows)
