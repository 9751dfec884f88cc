"""
测试子空间等价性校验

约束模式的 Fast-BFGS 与 ξ 坐标上的 BFGS 应逐步一致。
"""

import json

import numpy as np
import pytest

from subspace_bfgs.config import OptimizerConfig
from subspace_bfgs.core.exceptions import RankError
from subspace_bfgs.core.optimizers import DenseBFGS, FastBFGS
from subspace_bfgs.core.oracle import (
    EquivalenceReport,
    XiSpaceBFGS,
    check_equivalence,
    check_secant,
    rank_profile,
    schmidt,
    xi_bfgs,
)
from subspace_bfgs.core.problems import get_problem, random_spd_quadratic
from subspace_bfgs.core.subspace import (
    CurvaturePair,
    SubspaceState,
    absorb_pair,
    rescale_pair,
    update_l_growing,
)
from subspace_bfgs.utils.finite_difference import central_difference_gradient


def test_schmidt_identity_columns():
    basis = schmidt(np.eye(3)[:, :2])
    np.testing.assert_allclose(basis.S_unit, np.eye(3)[:, :2])
    np.testing.assert_array_equal(basis.x0, np.zeros(3))


def test_schmidt_single_projection():
    """[e₁, e₁+e₂] → [e₁, e₂]"""
    S = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(schmidt(S).S_unit, np.eye(3)[:, :2], atol=1e-15)


def test_schmidt_random_full_rank(rng):
    S = rng.standard_normal((20, 5))
    Q = schmidt(S).S_unit
    np.testing.assert_allclose(Q.T @ Q, np.eye(5), atol=1e-12)


def test_schmidt_rank_deficient(rng):
    v = rng.standard_normal(6)
    with pytest.raises(RankError):
        schmidt(np.column_stack([v, 2.0 * v]))


def test_xi_bfgs_identity_basis_matches_dense_bfgs(spd_quadratic):
    """m = n、S_unit = I 时与稠密 BFGS 轨迹相同"""
    problem = spd_quadratic(8)
    basis = schmidt(np.eye(8))
    history = xi_bfgs(problem, basis, problem.x0.copy(), np.eye(8), steps=50)

    dense = DenseBFGS(problem, OptimizerConfig(variant="bfgs"))
    points = [problem.x0.copy()] + [info.x for info in dense.iterate()]
    assert len(history) == len(points)
    for (xi, _), x in zip(history, points):
        np.testing.assert_allclose(xi, x, atol=1e-10)
    np.testing.assert_allclose(history[-1][1], dense.H, atol=1e-8)


def test_xi_bfgs_one_dimensional(spd_quadratic):
    """m = 1：沿单一方向的标量 BFGS"""
    problem = spd_quadratic(10)
    basis = schmidt(problem.grad(problem.x0)[:, None], x0=problem.x0)
    history = xi_bfgs(problem, basis, np.zeros(1), np.eye(1), steps=5)
    values = [problem.f(basis.point(xi)) for xi, _ in history]
    assert len(history) >= 2
    assert all(H.shape == (1, 1) and H[0, 0] > 0.0 for _, H in history)
    assert values[-1] < values[0]


def test_reduced_gradient_matches_finite_differences(spd_quadratic, rng):
    problem = spd_quadratic(15)
    basis = schmidt(rng.standard_normal((15, 3)), x0=problem.x0)
    run = XiSpaceBFGS(problem, basis, np.zeros(3), np.eye(3))
    xi = rng.standard_normal(3)
    _, g_xi = run.value_and_grad(xi)
    fd = central_difference_gradient(lambda z: run.value_and_grad(z)[0], xi)
    assert np.linalg.norm(g_xi - fd) / max(1.0, np.linalg.norm(g_xi)) <= 1e-6


def test_xi_space_requires_spd_start(spd_quadratic):
    problem = spd_quadratic(4)
    basis = schmidt(np.eye(4)[:, :2])
    with pytest.raises(ValueError):
        XiSpaceBFGS(problem, basis, np.zeros(2), -np.eye(2))


def test_equivalence_on_random_quadratic(spd_quadratic):
    """n = 30、m = 4、15 步，三项偏差均 ≤ 1e-8"""
    report = check_equivalence(spd_quadratic(30), m=4, steps=15)
    assert report.steps_run > 0
    assert report.iterate_deviation <= 1e-8
    assert report.hessian_deviation <= 1e-8
    assert report.step_norm_deviation <= 1e-8
    assert report.max_secant_residual <= 1e-8
    assert report.passed()


def test_equivalence_across_quadratics():
    """20 个随机凸二次函数（n ≤ 50，m ∈ {2, 4, 8}）"""
    rng = np.random.default_rng(7)
    ms = (2, 4, 8)
    for trial in range(20):
        n = int(rng.integers(10, 51))
        m = ms[trial % len(ms)]
        report = check_equivalence(random_spd_quadratic(n, rng), m=m, steps=15, seed=trial)
        assert report.max_deviation <= 1e-8, report.to_text()
        assert report.max_eviction_residual <= 1e-8, report.to_text()
        assert report.max_secant_residual <= 1e-8, report.to_text()
        assert report.rank_mismatches == 0, report.to_text()


def test_zero_steps_has_zero_deviation(spd_quadratic):
    report = check_equivalence(spd_quadratic(12), m=3, steps=0)
    assert report.steps_run == 0
    assert report.max_deviation == 0.0
    assert report.empirical_rate is None


def test_rank_after_seeding(spd_quadratic):
    """种子阶段结束后 H̃ 的秩为 m"""
    m = 4
    problem = spd_quadratic(20)
    optimizer = FastBFGS(problem, OptimizerConfig(variant="fast-a", m=m, constrained_mode=True))
    for _ in optimizer.iterate():
        if optimizer.state.count >= m:
            break
    assert rank_profile(optimizer.state) == m
    assert rank_profile(SubspaceState(m, 20)) == 0


def test_secant_outside_span():
    """s 与保存的张成空间正交时残差约为 1"""
    state = SubspaceState(2, 3)
    e = np.eye(3)
    update_l_growing(state, CurvaturePair(e[0], e[0], 1.0))
    assert check_secant(state, e[1], e[1]) == pytest.approx(1.0)


def test_report_serialization(spd_quadratic):
    report = check_equivalence(spd_quadratic(10), m=2, steps=5)
    data = json.loads(report.to_json())
    assert data["m"] == 2
    assert EquivalenceReport(**data) == report
    assert report.problem in report.to_text()


def test_long_lockstep_stops_before_leaving_subspace(spd_quadratic):
    """请求的步数远多于需要时，对照在舍入误差主导前停止，偏差仍 ≤ 1e-8"""
    report = check_equivalence(spd_quadratic(30), m=4, steps=200)
    assert 0 < report.steps_run < 200
    assert report.max_deviation <= 1e-8, report.to_text()
    assert report.max_secant_residual <= 1e-8, report.to_text()
    assert report.passed()


@pytest.mark.parametrize("m", [2, 4, 8])
def test_rank_is_full_at_every_step(m, spd_quadratic):
    report = check_equivalence(spd_quadratic(25), m=m, steps=15)
    assert report.steps_run > 0
    assert report.rank_mismatches == 0


def test_equivalence_full_memory_quadratic(spd_quadratic):
    """m = n：子空间即全空间"""
    report = check_equivalence(spd_quadratic(10, eig_range=(1.0, 100.0)), m=10, steps=10)
    assert report.max_deviation <= 1e-8, report.to_text()
    assert report.rank_mismatches == 0


def test_equivalence_full_memory_edensch():
    report = check_equivalence(get_problem("EDENSCH", 6), m=6, steps=10)
    assert report.max_deviation <= 1e-8, report.to_text()
    assert report.max_eviction_residual <= 1e-8


def test_secant_with_full_memory(spd_matrix, rng):
    """m = n 时每个新曲率对都在张成空间内，吸收后割线方程精确成立"""
    A = spd_matrix(5)
    state = SubspaceState(5, 5)
    for _ in range(8):
        s = rng.standard_normal(5)
        y = A @ s
        absorb_pair(state, rescale_pair(s, y))
        assert check_secant(state, s, y) <= 1e-8
    assert state.count == 8
    assert rank_profile(state) == 5
