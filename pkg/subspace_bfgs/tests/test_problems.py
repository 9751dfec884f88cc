"""
测试问题注册表

校验问题列表、维度规则和解析梯度。
"""

import numpy as np
import pytest

from subspace_bfgs.core.exceptions import ConfigurationError, DimensionError, UnknownProblemError
from subspace_bfgs.core.problems import (
    MANDATORY_PROBLEMS,
    get_family,
    get_problem,
    list_problems,
    make_quadratic,
)
from subspace_bfgs.utils.finite_difference import central_difference_gradient, gradient_check

ALL_NAMES = [name for name, _ in list_problems()]


def _small_dim(name: str) -> int:
    family = get_family(name)
    n = max(12, family.min_n)
    return n + (-n) % family.divisor


def test_list_problems_contains_table_dimensions():
    """注册表包含基准表中的问题和维度"""
    problems = dict(list_problems())
    assert 1024 in problems["ARWHEAD"]
    assert 1000 in problems["SROSENBR"]
    assert len(problems) == len(list_problems())
    assert set(MANDATORY_PROBLEMS) <= set(problems)


def test_arwhead_minimum_value_is_zero():
    """ARWHEAD 在 (1, ..., 1, 0) 处取 0"""
    problem = get_problem("ARWHEAD", 1024)
    x_star = np.ones(1024)
    x_star[-1] = 0.0
    assert problem.f(x_star) == pytest.approx(0.0, abs=1e-12)


def test_srosenbr_gradient_vanishes_at_ones():
    """SROSENBR 在全 1 点梯度为零"""
    problem = get_problem("SROSENBR", 1000)
    np.testing.assert_allclose(problem.grad(np.ones(1000)), 0.0, atol=1e-12)


def test_dimension_rules_are_enforced():
    """块结构问题拒绝不整除的维度，不做静默截断"""
    assert get_problem("ARWHEAD", 1023).n == 1023
    with pytest.raises(DimensionError):
        get_problem("SROSENBR", 999)
    with pytest.raises(DimensionError):
        get_problem("POWELLSG", 1002)
    with pytest.raises(DimensionError):
        get_problem("ARWHEAD", 1)


def test_unknown_problem_raises():
    """未注册的问题名"""
    with pytest.raises(UnknownProblemError) as excinfo:
        get_problem("NOSUCHPROBLEM", 10)
    assert isinstance(excinfo.value, ConfigurationError)
    assert isinstance(excinfo.value, LookupError)


def test_lookup_is_case_insensitive():
    """问题名大小写不敏感"""
    assert get_problem("arwhead", 16).name == "ARWHEAD"


def test_default_dimension_comes_from_table():
    """缺省维度取基准表维度"""
    assert get_problem("BDEXP").n == 1024
    assert get_problem("EG2").n == 1000


def test_initial_point_is_read_only():
    """x0 不可修改"""
    problem = get_problem("EDENSCH", 12)
    with pytest.raises(ValueError):
        problem.x0[0] = 1.0


@pytest.mark.parametrize("name", ALL_NAMES)
def test_initial_point_is_not_stationary(name):
    """标准初始点不是驻点"""
    problem = get_problem(name, _small_dim(name))
    assert np.linalg.norm(problem.grad(problem.x0)) > 1e-8


def test_himmelbg_starting_point():
    """HIMMELBG 从 (0.5, ..., 0.5) 出发，f(x0) = (n/2)·1.25·e⁻¹"""
    problem = get_problem("HIMMELBG", 1000)
    np.testing.assert_array_equal(problem.x0, np.full(1000, 0.5))
    assert problem.f(problem.x0) == pytest.approx(500 * 1.25 * np.exp(-1.0))


@pytest.mark.parametrize("name", ALL_NAMES)
def test_gradient_matches_finite_differences(name, rng):
    """x0 附近 10 个随机点上解析梯度与中心差分一致"""
    problem = get_problem(name, _small_dim(name))
    for _ in range(10):
        x = problem.x0 + rng.uniform(-0.1, 0.1, problem.n)
        assert gradient_check(problem, x) <= 1e-6


@pytest.mark.parametrize("name", ALL_NAMES)
def test_value_and_grad_is_consistent(name):
    """value_and_grad 与单独求值一致"""
    problem = get_problem(name, _small_dim(name))
    f, g = problem.value_and_grad(problem.x0)
    assert f == pytest.approx(problem.f(problem.x0))
    np.testing.assert_array_equal(g, problem.grad(problem.x0))


def test_make_quadratic(spd_matrix, rng):
    """二次问题的梯度为 Ax − b"""
    A = spd_matrix(8)
    b = rng.standard_normal(8)
    problem = make_quadratic(A, b)
    x = rng.standard_normal(8)
    np.testing.assert_allclose(problem.grad(x), A @ x - b, rtol=1e-12)
    np.testing.assert_allclose(central_difference_gradient(problem.f, x), A @ x - b, rtol=1e-6, atol=1e-8)
