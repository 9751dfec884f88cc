"""
测试基准运行器、报告格式和命令行
"""

import numpy as np
import pytest

from subspace_bfgs.bench.cli import EXIT_CONFIG_ERROR, EXIT_OK, build_parser, build_spec, main
from subspace_bfgs.bench.report import CSV_FIELDS, emit, format_cell, parse_csv
from subspace_bfgs.bench.runner import (
    BenchReport,
    BenchRow,
    ProblemRef,
    RunSpec,
    parse_problem,
    run_suite,
)
from subspace_bfgs.config import Config
from subspace_bfgs.core.exceptions import ConfigurationError
from subspace_bfgs.core.problems import MANDATORY_PROBLEMS, list_problems


def _row(**overrides) -> BenchRow:
    data = dict(problem="ARWHEAD", n=1024, variant="fast-b", m=8, nfg=16,
                status="converged", gnorm=3.2e-6, seconds=0.125)
    data.update(overrides)
    return BenchRow(**data)


def test_parse_problem():
    assert parse_problem("arwhead@1024") == ProblemRef("ARWHEAD", 1024)
    assert parse_problem("BDEXP") == ProblemRef("BDEXP")
    assert str(ProblemRef("EG2", 1000)) == "EG2@1000"
    with pytest.raises(ConfigurationError):
        parse_problem("EG2@abc")
    with pytest.raises(ConfigurationError):
        parse_problem("EG2@0")


def test_csv_single_row():
    """一行结果 → 恰好 2 行 CSV"""
    text = emit(BenchReport(rows=[_row()]), "csv")
    lines = text.strip().split("\n")
    assert len(lines) == 2
    assert lines[0] == ",".join(CSV_FIELDS)


def test_csv_round_trip_is_exact():
    """CSV 往返后数值字段逐位一致"""
    rows = [
        _row(gnorm=1.0 / 3.0, seconds=0.1 + 0.2),
        _row(problem="BDEXP", variant="lbfgs", nfg=1000, status="budget-exhausted", gnorm=float(np.pi)),
        _row(problem="SROSENBR", variant="bfgs", status="line-search-failure", gnorm=float("inf")),
    ]
    parsed = parse_csv(emit(BenchReport(rows=rows), "csv"))
    assert parsed.rows == rows


def test_markdown_cells():
    """预算耗尽显示 >1000，失败显示 --"""
    assert format_cell(_row(), 1000) == "16"
    assert format_cell(_row(status="budget-exhausted", nfg=1000), 1000) == ">1000"
    assert format_cell(_row(status="line-search-failure"), 1000) == "--"

    report = BenchReport(
        rows=[
            _row(variant="gd", status="budget-exhausted", nfg=1000),
            _row(variant="fast-b"),
            _row(problem="SROSENBR", n=1000, variant="gd", status="line-search-failure"),
        ],
        metadata={"max_nfg": 1000},
    )
    text = emit(report, "markdown")
    assert "| ARWHEAD | 1024 | >1000 | 16 |" in text
    assert "| SROSENBR | 1000 | -- |" in text


def test_unknown_format():
    with pytest.raises(ConfigurationError):
        emit(BenchReport(), "xml")


def test_run_suite_rows_follow_spec_order():
    spec = RunSpec(problems=["ARWHEAD@64", "BDEXP@64"], variants=["fast-b", "gd"], ms=[2, 4], max_nfg=200)
    report = run_suite(spec, Config())
    keys = [(row.problem, row.variant, row.m) for row in report.rows]
    assert keys == [
        (p, v, m) for p in ("ARWHEAD", "BDEXP") for v in ("fast-b", "gd") for m in (2, 4)
    ]
    assert report.metadata["max_nfg"] == 200
    assert "version" in report.metadata and "timestamp" in report.metadata


def test_m_independent_runs_are_reused():
    """gd 的结果在不同 m 之间复用"""
    spec = RunSpec(problems=["EDENSCH@50"], variants=["gd"], ms=[2, 8])
    rows = run_suite(spec, Config()).rows
    assert [row.m for row in rows] == [2, 8]
    assert rows[0].nfg == rows[1].nfg
    assert rows[0].seconds == rows[1].seconds


def test_parallel_matches_sequential():
    problems = ["ARWHEAD@32", "EDENSCH@32", "TQUARTIC@32"]
    sequential = run_suite(RunSpec(problems=problems, variants=["fast-a", "lbfgs"], jobs=1), Config())
    parallel = run_suite(RunSpec(problems=problems, variants=["fast-a", "lbfgs"], jobs=3), Config())
    strip = lambda report: [row.model_dump(exclude={"seconds"}) for row in report.rows]
    assert strip(sequential) == strip(parallel)


def test_run_suite_validates_before_running():
    with pytest.raises(ConfigurationError):
        run_suite(RunSpec(problems=["ARWHEAD@16", "NOSUCH@10"]), Config())
    with pytest.raises(ConfigurationError):
        run_suite(RunSpec(problems=["SROSENBR@999"]), Config())
    with pytest.raises(ConfigurationError):
        run_suite(RunSpec(problems=["ARWHEAD@5000"], variants=["bfgs"]), Config())


def test_empty_problem_list():
    report = run_suite(RunSpec(problems=[]), Config())
    assert report.rows == []


def test_cli_writes_csv(tmp_path):
    out = tmp_path / "report.csv"
    code = main([
        "--problem", "ARWHEAD@32", "--variant", "fast-b", "--variant", "lbfgs",
        "--m", "4", "--format", "csv", "--out", str(out),
    ])
    assert code == EXIT_OK
    rows = parse_csv(out.read_text(encoding="utf-8")).rows
    assert [(row.variant, row.m) for row in rows] == [("fast-b", 4), ("lbfgs", 4)]


def test_cli_markdown_to_stdout(capsys):
    code = main(["--problem", "BDEXP@32", "--variant", "all", "--format", "markdown"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("| Problem | n | gd | bfgs | lbfgs | fast-a | fast-b |")
    assert "| BDEXP | 32 |" in out


def test_cli_configuration_error_exit_code(capsys):
    assert main(["--problem", "NOSUCH@10"]) == EXIT_CONFIG_ERROR
    assert main(["--problem", "ARWHEAD@16", "--m", "0"]) == EXIT_CONFIG_ERROR
    assert "配置错误" in capsys.readouterr().err


def test_cli_thread_env_override(monkeypatch, tmp_path):
    """SUBSPACE_BENCH_THREADS 覆盖 --jobs"""
    monkeypatch.setenv("SUBSPACE_BENCH_THREADS", "2")
    config = Config()
    assert config.resolve_jobs(8) == 2
    out = tmp_path / "r.md"
    assert main(["--problem", "HIMMELBG@16", "--variant", "fast-a", "--jobs", "8",
                 "--config", str(tmp_path / "missing.yaml"), "--out", str(out)]) == EXIT_OK
    assert "HIMMELBG" in out.read_text(encoding="utf-8")


def test_default_preset_grid():
    """不给 --problem 时使用 table2：14 个必选问题 × 全部变体，m = 8"""
    config = Config(config_file="/nonexistent/config.yaml")
    spec = build_spec(build_parser().parse_args([]), config)
    assert spec.problems == list(MANDATORY_PROBLEMS)
    assert spec.variants == ["gd", "bfgs", "lbfgs", "fast-a", "fast-b"]
    assert spec.ms == [8]


def test_table3_preset_with_override():
    config = Config(config_file="/nonexistent/config.yaml")
    spec = build_spec(build_parser().parse_args(["--preset", "table3", "--m", "4"]), config)
    assert len(spec.problems) == len(list_problems())
    assert spec.variants == ["fast-a", "fast-b"]
    assert spec.ms == [4]


def test_invalid_m_is_configuration_error():
    config = Config(config_file="/nonexistent/config.yaml")
    with pytest.raises(ConfigurationError):
        build_spec(build_parser().parse_args(["--problem", "EG2", "--m", "0"]), config)
