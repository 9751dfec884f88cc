"""测试公共夹具"""

import numpy as np
import pytest

from subspace_bfgs.core.problems import make_quadratic, random_spd_matrix, random_spd_quadratic
from subspace_bfgs.utils.logger import setup_logging


@pytest.fixture(autouse=True, scope="session")
def _quiet_logging():
    setup_logging("WARNING", "text")


@pytest.fixture
def rng():
    """固定种子的随机数生成器"""
    return np.random.default_rng(20240521)


@pytest.fixture
def spd_quadratic(rng):
    """随机 SPD 二次问题工厂"""

    def factory(n: int = 10, eig_range=(1.0, 10.0)):
        return random_spd_quadratic(n, rng, eig_range)

    return factory


@pytest.fixture
def isotropic_quadratic():
    """f(x) = ½‖x‖²"""

    def factory(n: int = 6):
        return make_quadratic(np.eye(n), x0=np.linspace(1.0, 2.0, n), name="SPHERE")

    return factory


@pytest.fixture
def spd_matrix(rng):
    def factory(n: int = 10):
        return random_spd_matrix(n, rng)

    return factory
