"""配置系统单元测试"""

import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from pydantic import ValidationError

from subspace_bfgs.config import Config, OptimizerConfig, get_config, reload_config


class TestOptimizerConfig(unittest.TestCase):
    """测试 OptimizerConfig"""

    def test_defaults(self):
        """默认值：m = 8，tol = 1e-5，预算 1000"""
        config = OptimizerConfig()
        self.assertEqual(config.variant, "fast-a")
        self.assertEqual(config.m, 8)
        self.assertEqual(config.tol, 1e-5)
        self.assertEqual(config.max_nfg, 1000)
        self.assertFalse(config.constrained_mode)

    def test_invalid_values(self):
        """非法参数被拒绝"""
        with self.assertRaises(ValidationError):
            OptimizerConfig(m=0)
        with self.assertRaises(ValidationError):
            OptimizerConfig(tol=0.0)
        with self.assertRaises(ValidationError):
            OptimizerConfig(c1=0.5, c2=0.5)
        with self.assertRaises(ValidationError):
            OptimizerConfig(variant="newton")

    def test_frozen(self):
        """配置不可修改"""
        config = OptimizerConfig()
        with self.assertRaises(ValidationError):
            config.m = 4


class TestConfig(unittest.TestCase):
    """测试 Config 的多来源加载"""

    def test_yaml_layer(self):
        """YAML 文件覆盖默认值"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.yaml"
            path.write_text("optimizer:\n  m: 4\n  tol: 1.0e-6\nbench:\n  jobs: 3\n", encoding="utf-8")
            config = Config(config_file=str(path))
        self.assertEqual(config.optimizer.m, 4)
        self.assertEqual(config.optimizer.tol, 1e-6)
        self.assertEqual(config.bench.jobs, 3)

    def test_missing_yaml_uses_defaults(self):
        config = Config(config_file="/nonexistent/config.yaml")
        self.assertEqual(config.optimizer.m, 8)
        self.assertEqual(config.log_level, "WARNING")

    def test_environment_overrides_yaml(self):
        """环境变量优先于 YAML"""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "config.yaml"
            path.write_text("optimizer:\n  m: 4\n", encoding="utf-8")
            with patch.dict(os.environ, {"SUBSPACE_OPTIMIZER__M": "6", "SUBSPACE_LOG_LEVEL": "DEBUG"}):
                config = Config(config_file=str(path))
        self.assertEqual(config.optimizer.m, 6)
        self.assertEqual(config.log_level, "DEBUG")

    def test_bench_threads_overrides_jobs(self):
        """SUBSPACE_BENCH_THREADS 优先于 --jobs"""
        with patch.dict(os.environ, {"SUBSPACE_BENCH_THREADS": "5"}):
            config = Config(config_file="/nonexistent/config.yaml")
        self.assertEqual(config.resolve_jobs(2), 5)

    def test_resolve_jobs_fallbacks(self):
        with patch.dict(os.environ, {}, clear=False):
            os.environ.pop("SUBSPACE_BENCH_THREADS", None)
            config = Config(config_file="/nonexistent/config.yaml")
        self.assertEqual(config.resolve_jobs(4), 4)
        self.assertEqual(config.resolve_jobs(None), config.bench.jobs)

    def test_optimizer_config_overrides_are_validated(self):
        config = Config(config_file="/nonexistent/config.yaml")
        self.assertEqual(config.optimizer_config(variant="lbfgs", m=3).m, 3)
        self.assertIs(config.optimizer_config(), config.optimizer)
        with self.assertRaises(ValidationError):
            config.optimizer_config(m=0)

    def test_singleton(self):
        """get_config 返回同一实例，reload_config 重新加载"""
        first = reload_config("/nonexistent/config.yaml")
        self.assertIs(get_config(), first)
        second = reload_config("/nonexistent/config.yaml")
        self.assertIsNot(first, second)
        self.assertIs(get_config(), second)


if __name__ == "__main__":
    unittest.main()
