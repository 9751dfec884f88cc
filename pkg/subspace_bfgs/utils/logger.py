"""日志系统

配置结构化日志，支持：
- 多种日志级别
- JSON 和文本格式
- 上下文日志记录（基准测试中绑定 problem / variant / m，可嵌套）
- 日志文件或标准错误输出（标准输出留给 CSV/markdown 报告）
"""

import functools
import logging
import sys
import time
from typing import IO, Any, Literal, Optional

import structlog

# setup_logging 打开的日志文件，重新配置时关闭
_log_stream: Optional[IO[str]] = None


def _close_log_stream() -> None:
    global _log_stream
    if _log_stream is not None and not _log_stream.closed:
        _log_stream.close()
    _log_stream = None


def setup_logging(
    level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "INFO",
    format: Literal["json", "text"] = "json",
    log_file: Optional[str] = None
) -> IO[str]:
    """
    配置日志系统

    structlog 与标准库 logging 写入同一个流：给出 log_file 时为该文件（追加），
    否则为标准错误。重复调用会关闭上一次打开的文件和移除旧的 handler。

    Args:
        level: 日志级别
        format: 日志格式（json 或 text）
        log_file: 可选的日志文件路径

    Returns:
        日志输出流
    """
    global _log_stream
    log_level = getattr(logging, level.upper())

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()
    _close_log_stream()

    stream: IO[str] = sys.stderr
    if log_file:
        _log_stream = stream = open(log_file, "a", encoding="utf-8")

    handler = logging.StreamHandler(stream)
    handler.setLevel(log_level)
    root.addHandler(handler)
    root.setLevel(log_level)

    if format == "json":
        processors = [
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.JSONRenderer()
        ]
    else:
        processors = [
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="%Y-%m-%d %H:%M:%S"),
            structlog.dev.ConsoleRenderer(colors=False)
        ]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(log_level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=stream),
        cache_logger_on_first_use=False,
    )

    logging.getLogger("numpy").setLevel(logging.WARNING)
    logging.getLogger("scipy").setLevel(logging.WARNING)

    get_logger(__name__).debug("日志系统已配置", level=level, format=format, log_file=log_file)
    return stream


def get_logger(name: str):
    """获取 structlog 日志记录器（name 通常为 __name__）"""
    return structlog.get_logger(name)


class LogContext:
    """
    日志上下文管理器

    进入时绑定键值，退出时恢复外层的值：嵌套的 LogContext 覆盖同名键后，
    外层绑定不会丢失。
    """

    def __init__(self, **kwargs: Any):
        self.context = kwargs
        self._saved: dict[str, Any] = {}

    def __enter__(self) -> "LogContext":
        current = structlog.contextvars.get_contextvars()
        self._saved = {key: current[key] for key in self.context if key in current}
        structlog.contextvars.bind_contextvars(**self.context)
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        structlog.contextvars.unbind_contextvars(*self.context)
        if self._saved:
            structlog.contextvars.bind_contextvars(**self._saved)


def log_function_call(func):
    """
    装饰器：记录函数调用、耗时和异常

    日志记录器按 func.__module__ 命名。
    """

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        logger = get_logger(func.__module__)
        logger.debug("调用函数", function=func.__qualname__)
        start = time.perf_counter()
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            logger.error(
                "函数异常", function=func.__qualname__, error=str(e),
                error_type=type(e).__name__, elapsed=time.perf_counter() - start,
            )
            raise
        logger.debug("函数返回", function=func.__qualname__, elapsed=time.perf_counter() - start)
        return result

    return wrapper
