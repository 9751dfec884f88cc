"""
配置系统

运行参数（优化器、线搜索、基准测试）集中在这里。
支持环境变量覆盖，优先级：显式参数 > 环境变量 > .env > config.yaml > 默认值
"""

from pathlib import Path
from typing import Any, Literal, Optional

try:
    import yaml
except ImportError:
    yaml = None

from pydantic import BaseModel, Field, model_validator
from pydantic.fields import FieldInfo
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

DEFAULT_CONFIG_FILE = str(Path(__file__).with_name("config.yaml"))

Variant = Literal["gd", "bfgs", "lbfgs", "fast-a", "fast-b"]
VARIANTS: tuple[str, ...] = ("gd", "bfgs", "lbfgs", "fast-a", "fast-b")


class OptimizerConfig(BaseModel):
    """
    单次优化运行的配置

    tol、m 的默认值为基准表使用的 tol=1e-5、m=8；
    c1、c2、tau_init 为常用的强 Wolfe 参数。
    """
    variant: Variant = "fast-a"
    m: int = Field(default=8, ge=1, description="子空间记忆长度")
    tol: float = Field(default=1e-5, gt=0.0, description="梯度范数终止阈值")
    max_nfg: int = Field(default=1000, ge=1, description="函数+梯度求值预算")
    c1: float = Field(default=1e-4, gt=0.0, lt=1.0)
    c2: float = Field(default=0.9, gt=0.0, lt=1.0)
    tau_init: float = Field(default=1.0, gt=0.0)
    ls_max_evals: int = Field(default=60, ge=1, description="单次线搜索最大求值次数")
    constrained_mode: bool = Field(
        default=False,
        description="子空间填满 m 列后强制 alpha=0，迭代点不再离开子空间",
    )
    hvp_eps: float = Field(default=1e-6, gt=0.0, description="有限差分 Hessian-向量积步长")
    alpha_trust: float = Field(default=2.0, gt=0.0, description="|alpha|·‖∇²f·v‖ 不超过 alpha_trust·‖g‖")
    alpha_max_ratio: float = Field(default=100.0, gt=0.0, description="|alpha| 不超过 alpha_max_ratio·‖g‖")
    curvature_tol: float = Field(default=1e-12, ge=0.0, description="曲率对跳过阈值")

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_wolfe_constants(self) -> "OptimizerConfig":
        if not self.c1 < self.c2:
            raise ValueError(f"需要 0 < c1 < c2 < 1，当前 c1={self.c1}, c2={self.c2}")
        return self


class BenchConfig(BaseModel):
    """基准测试配置"""
    jobs: int = Field(default=1, ge=1)
    format: Literal["csv", "markdown"] = "markdown"
    m_values: list[int] = Field(default_factory=lambda: [8])


class _YamlSettingsSource(PydanticBaseSettingsSource):
    """从 YAML 文件读取配置（优先级低于环境变量）"""

    def __init__(self, settings_cls: type[BaseSettings], config_file: str):
        super().__init__(settings_cls)
        self.config_file = config_file

    def get_field_value(self, field: FieldInfo, field_name: str) -> tuple[Any, str, bool]:
        return None, field_name, False

    def __call__(self) -> dict[str, Any]:
        return _load_yaml(self.config_file)


def _load_yaml(config_file: str) -> dict:
    """从YAML文件加载配置"""
    if yaml is None:
        return {}

    config_path = Path(config_file)

    if not config_path.exists():
        return {}

    try:
        with open(config_path, "r", encoding="utf-8") as f:
            return yaml.safe_load(f) or {}
    except (OSError, yaml.YAMLError):
        return {}


class Config(BaseSettings):
    """应用主配置"""
    model_config = SettingsConfigDict(
        env_prefix="SUBSPACE_",
        env_nested_delimiter="__",
        case_sensitive=False,
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # 配置文件路径
    config_file: str = DEFAULT_CONFIG_FILE

    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    # SUBSPACE_BENCH_THREADS，覆盖 --jobs
    bench_threads: Optional[int] = Field(default=None, ge=1)

    # 日志配置
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"] = "WARNING"
    log_format: Literal["json", "text"] = "text"
    log_file: Optional[str] = None

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        config_file = init_settings.init_kwargs.get("config_file") or DEFAULT_CONFIG_FILE
        return (
            init_settings,
            env_settings,
            dotenv_settings,
            _YamlSettingsSource(settings_cls, config_file),
            file_secret_settings,
        )

    def optimizer_config(self, **overrides) -> OptimizerConfig:
        """以全局默认值为基础生成单次运行配置"""
        if not overrides:
            return self.optimizer
        return OptimizerConfig(**{**self.optimizer.model_dump(), **overrides})

    def resolve_jobs(self, requested: Optional[int] = None) -> int:
        """确定并发线程数：环境变量 > 命令行 > 配置文件"""
        if self.bench_threads is not None:
            return self.bench_threads
        if requested is not None:
            return requested
        return self.bench.jobs


# 全局配置实例
_config: Optional[Config] = None


def get_config(config_file: Optional[str] = None) -> Config:
    """获取全局配置（单例模式）"""
    global _config

    if _config is None:
        _config = Config(config_file=config_file) if config_file else Config()

    return _config


def reload_config(config_file: Optional[str] = None) -> Config:
    """重新加载配置"""
    global _config
    _config = Config(config_file=config_file) if config_file else Config()
    return _config
