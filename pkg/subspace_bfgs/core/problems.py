"""
测试问题注册表

CUTE / Andrei 无约束测试集中的问题，均带解析梯度和标准初始点：
- 14 个必选问题：ARWHEAD, BDEXP, COSINE, DQRTIC, EDENSCH, ENGVAL1, EG2,
  EXTROSNB, HIMMELBG, LIARWHD, NONDIA, POWELLSG, SROSENBR, TQUARTIC
- 可选问题：TOINTGSS, BDQRTIC, FREUROTH, GENROSE, NONDQUAR, WOODS
- 随机 SPD 二次函数（性质测试用，不进入注册表）

所有公式按 0 起始下标向量化实现，梯度由中心差分测试校验。
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from subspace_bfgs.core.exceptions import DimensionError, UnknownProblemError

Objective = Callable[[np.ndarray], float]
Gradient = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Problem:
    """
    带维度、解析梯度和标准初始点的目标函数

    创建后不可变（x0 只读），可在多个线程中并发求值。
    """
    name: str
    n: int
    f: Objective
    grad: Gradient
    x0: np.ndarray = field(repr=False)

    def __post_init__(self):
        x0 = np.array(self.x0, dtype=float)
        if x0.shape != (self.n,):
            raise DimensionError(f"{self.name}: x0 形状 {x0.shape} 与 n={self.n} 不一致")
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)

    def value_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """同时计算函数值和梯度"""
        return float(self.f(x)), np.asarray(self.grad(x), dtype=float)


@dataclass(frozen=True)
class ProblemFamily:
    """
    同一公式、不同维度的问题族

    Attributes:
        name: 问题名（大写）
        objective: f(x)
        gradient: ∇f(x)
        initial_point: n -> x0
        dims: 基准表中使用的维度
        min_n: 最小维度
        divisor: n 必须能被其整除（块结构问题）
        x0_doc: 初始点说明
    """
    name: str
    objective: Objective
    gradient: Gradient
    initial_point: Callable[[int], np.ndarray]
    dims: tuple[int, ...]
    min_n: int = 2
    divisor: int = 1
    x0_doc: str = ""

    def validate(self, n: int) -> None:
        """检查维度是否满足问题族规则"""
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise DimensionError(f"{self.name}: 维度必须为整数，收到 {n!r}")
        if n < self.min_n:
            raise DimensionError(f"{self.name}: 需要 n >= {self.min_n}，收到 n={n}")
        if n % self.divisor != 0:
            raise DimensionError(f"{self.name}: 需要 n mod {self.divisor} = 0，收到 n={n}")

    def build(self, n: int) -> Problem:
        """构造 n 维问题实例"""
        self.validate(n)
        return Problem(
            name=self.name,
            n=int(n),
            f=self.objective,
            grad=self.gradient,
            x0=self.initial_point(int(n)),
        )


# ---------------------------------------------------------------------------
# 必选问题


def _arwhead_f(x):
    q = x[:-1] ** 2 + x[-1] ** 2
    return float(np.sum(q ** 2 - 4.0 * x[:-1] + 3.0))


def _arwhead_g(x):
    q = x[:-1] ** 2 + x[-1] ** 2
    g = np.empty_like(x)
    g[:-1] = 4.0 * q * x[:-1] - 4.0
    g[-1] = 4.0 * x[-1] * np.sum(q)
    return g


def _bdexp_f(x):
    a = x[:-2] + x[1:-1]
    return float(np.sum(a * np.exp(-x[2:] * a)))


def _bdexp_g(x):
    a = x[:-2] + x[1:-1]
    e = np.exp(-x[2:] * a)
    d_a = e * (1.0 - a * x[2:])
    g = np.zeros_like(x)
    g[:-2] += d_a
    g[1:-1] += d_a
    g[2:] += -a * a * e
    return g


def _cosine_f(x):
    return float(np.sum(np.cos(x[:-1] ** 2 - 0.5 * x[1:])))


def _cosine_g(x):
    s = -np.sin(x[:-1] ** 2 - 0.5 * x[1:])
    g = np.zeros_like(x)
    g[:-1] += 2.0 * x[:-1] * s
    g[1:] += -0.5 * s
    return g


def _dqrtic_f(x):
    r = x - np.arange(1, x.size + 1)
    return float(np.sum(r ** 4))


def _dqrtic_g(x):
    r = x - np.arange(1, x.size + 1)
    return 4.0 * r ** 3


def _edensch_f(x):
    a, b = x[:-1], x[1:]
    r = b * (a - 2.0)
    return float(16.0 + np.sum((a - 2.0) ** 4 + r ** 2 + (b + 1.0) ** 2))


def _edensch_g(x):
    a, b = x[:-1], x[1:]
    r = b * (a - 2.0)
    g = np.zeros_like(x)
    g[:-1] += 4.0 * (a - 2.0) ** 3 + 2.0 * r * b
    g[1:] += 2.0 * r * (a - 2.0) + 2.0 * (b + 1.0)
    return g


def _engval1_f(x):
    a, b = x[:-1], x[1:]
    q = a * a + b * b
    return float(np.sum(q ** 2 - 4.0 * a + 3.0))


def _engval1_g(x):
    a, b = x[:-1], x[1:]
    q = a * a + b * b
    g = np.zeros_like(x)
    g[:-1] += 4.0 * q * a - 4.0
    g[1:] += 4.0 * q * b
    return g


def _eg2_f(x):
    z = x[0] + x[:-1] ** 2 - 1.0
    return float(np.sum(np.sin(z)) + 0.5 * np.sin(x[-1] ** 2))


def _eg2_g(x):
    c = np.cos(x[0] + x[:-1] ** 2 - 1.0)
    g = np.zeros_like(x)
    g[:-1] += 2.0 * x[:-1] * c
    g[0] += np.sum(c)
    g[-1] += x[-1] * np.cos(x[-1] ** 2)
    return g


def _extrosnb_f(x):
    r = x[1:] - x[:-1] ** 2
    return float((x[0] - 1.0) ** 2 + 100.0 * np.sum(r ** 2))


def _extrosnb_g(x):
    r = x[1:] - x[:-1] ** 2
    g = np.zeros_like(x)
    g[1:] += 200.0 * r
    g[:-1] += -400.0 * r * x[:-1]
    g[0] += 2.0 * (x[0] - 1.0)
    return g


def _himmelbg_f(x):
    a, b = x[0::2], x[1::2]
    return float(np.sum((2.0 * a * a + 3.0 * b * b) * np.exp(-a - b)))


def _himmelbg_g(x):
    a, b = x[0::2], x[1::2]
    e = np.exp(-a - b)
    q = 2.0 * a * a + 3.0 * b * b
    g = np.empty_like(x)
    g[0::2] = (4.0 * a - q) * e
    g[1::2] = (6.0 * b - q) * e
    return g


def _liarwhd_f(x):
    r = x * x - x[0]
    return float(np.sum(4.0 * r ** 2 + (x - 1.0) ** 2))


def _liarwhd_g(x):
    r = x * x - x[0]
    g = 16.0 * r * x + 2.0 * (x - 1.0)
    g[0] += -8.0 * np.sum(r)
    return g


def _nondia_f(x):
    r = x[0] - x[:-1] ** 2
    return float((x[0] - 1.0) ** 2 + 100.0 * np.sum(r ** 2))


def _nondia_g(x):
    r = x[0] - x[:-1] ** 2
    g = np.zeros_like(x)
    g[:-1] += -400.0 * r * x[:-1]
    g[0] += 2.0 * (x[0] - 1.0) + 200.0 * np.sum(r)
    return g


def _powellsg_f(x):
    a, b, c, d = x[0::4], x[1::4], x[2::4], x[3::4]
    return float(np.sum(
        (a + 10.0 * b) ** 2 + 5.0 * (c - d) ** 2 + (b - 2.0 * c) ** 4 + 10.0 * (a - d) ** 4
    ))


def _powellsg_g(x):
    a, b, c, d = x[0::4], x[1::4], x[2::4], x[3::4]
    p = a + 10.0 * b
    q = c - d
    r3 = (b - 2.0 * c) ** 3
    w3 = (a - d) ** 3
    g = np.empty_like(x)
    g[0::4] = 2.0 * p + 40.0 * w3
    g[1::4] = 20.0 * p + 4.0 * r3
    g[2::4] = 10.0 * q - 8.0 * r3
    g[3::4] = -10.0 * q - 40.0 * w3
    return g


def _srosenbr_f(x):
    a, b = x[0::2], x[1::2]
    return float(np.sum(100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2))


def _srosenbr_g(x):
    a, b = x[0::2], x[1::2]
    r = b - a * a
    g = np.empty_like(x)
    g[0::2] = -400.0 * a * r - 2.0 * (1.0 - a)
    g[1::2] = 200.0 * r
    return g


def _tquartic_f(x):
    r = x[0] ** 2 - x[1:] ** 2
    return float((x[0] - 1.0) ** 2 + np.sum(r ** 2))


def _tquartic_g(x):
    r = x[0] ** 2 - x[1:] ** 2
    g = np.zeros_like(x)
    g[1:] = -4.0 * r * x[1:]
    g[0] = 2.0 * (x[0] - 1.0) + 4.0 * x[0] * np.sum(r)
    return g


# ---------------------------------------------------------------------------
# 可选问题


def _tointgss_f(x):
    n = x.size
    d = x[:-2] - x[1:-1]
    z2 = x[2:] ** 2
    w = 10.0 / (n + 2) + z2
    return float(np.sum(w * (2.0 - np.exp(-d * d / (0.1 + z2)))))


def _tointgss_g(x):
    n = x.size
    d = x[:-2] - x[1:-1]
    z = x[2:]
    den = 0.1 + z * z
    w = 10.0 / (n + 2) + z * z
    e = np.exp(-d * d / den)
    dd = w * 2.0 * d * e / den
    g = np.zeros_like(x)
    g[:-2] += dd
    g[1:-1] -= dd
    g[2:] += 2.0 * z * (2.0 - e) - w * 2.0 * z * d * d * e / (den * den)
    return g


def _bdqrtic_f(x):
    k = x.size - 4
    q = (x[:k] ** 2 + 2.0 * x[1:k + 1] ** 2 + 3.0 * x[2:k + 2] ** 2
         + 4.0 * x[3:k + 3] ** 2 + 5.0 * x[-1] ** 2)
    return float(np.sum((3.0 - 4.0 * x[:k]) ** 2 + q ** 2))


def _bdqrtic_g(x):
    k = x.size - 4
    q = (x[:k] ** 2 + 2.0 * x[1:k + 1] ** 2 + 3.0 * x[2:k + 2] ** 2
         + 4.0 * x[3:k + 3] ** 2 + 5.0 * x[-1] ** 2)
    g = np.zeros_like(x)
    g[:k] += -8.0 * (3.0 - 4.0 * x[:k]) + 4.0 * q * x[:k]
    g[1:k + 1] += 8.0 * q * x[1:k + 1]
    g[2:k + 2] += 12.0 * q * x[2:k + 2]
    g[3:k + 3] += 16.0 * q * x[3:k + 3]
    g[-1] += 20.0 * x[-1] * np.sum(q)
    return g


def _freuroth_f(x):
    a, b = x[:-1], x[1:]
    r1 = (5.0 - b) * b * b + a - 2.0 * b - 13.0
    r2 = (1.0 + b) * b * b + a - 14.0 * b - 29.0
    return float(np.sum(r1 ** 2 + r2 ** 2))


def _freuroth_g(x):
    a, b = x[:-1], x[1:]
    r1 = (5.0 - b) * b * b + a - 2.0 * b - 13.0
    r2 = (1.0 + b) * b * b + a - 14.0 * b - 29.0
    g = np.zeros_like(x)
    g[:-1] += 2.0 * (r1 + r2)
    g[1:] += 2.0 * r1 * (10.0 * b - 3.0 * b * b - 2.0) + 2.0 * r2 * (3.0 * b * b + 2.0 * b - 14.0)
    return g


def _genrose_f(x):
    r = x[1:] - x[:-1] ** 2
    return float(1.0 + np.sum(100.0 * r ** 2 + (x[1:] - 1.0) ** 2))


def _genrose_g(x):
    r = x[1:] - x[:-1] ** 2
    g = np.zeros_like(x)
    g[1:] += 200.0 * r + 2.0 * (x[1:] - 1.0)
    g[:-1] += -400.0 * r * x[:-1]
    return g


def _nondquar_f(x):
    s = x[:-2] + x[1:-1] + x[-1]
    return float((x[0] - x[1]) ** 2 + np.sum(s ** 4) + (x[-2] + x[-1]) ** 2)


def _nondquar_g(x):
    c = 4.0 * (x[:-2] + x[1:-1] + x[-1]) ** 3
    g = np.zeros_like(x)
    g[:-2] += c
    g[1:-1] += c
    g[-1] += np.sum(c)
    head = 2.0 * (x[0] - x[1])
    g[0] += head
    g[1] -= head
    tail = 2.0 * (x[-2] + x[-1])
    g[-2] += tail
    g[-1] += tail
    return g


def _woods_f(x):
    a, b, c, d = x[0::4], x[1::4], x[2::4], x[3::4]
    return float(np.sum(
        100.0 * (b - a * a) ** 2 + (1.0 - a) ** 2
        + 90.0 * (d - c * c) ** 2 + (1.0 - c) ** 2
        + 10.0 * (b + d - 2.0) ** 2 + 0.1 * (b - d) ** 2
    ))


def _woods_g(x):
    a, b, c, d = x[0::4], x[1::4], x[2::4], x[3::4]
    r1 = b - a * a
    r2 = d - c * c
    s = b + d - 2.0
    t = b - d
    g = np.empty_like(x)
    g[0::4] = -400.0 * a * r1 - 2.0 * (1.0 - a)
    g[1::4] = 200.0 * r1 + 20.0 * s + 0.2 * t
    g[2::4] = -360.0 * c * r2 - 2.0 * (1.0 - c)
    g[3::4] = 180.0 * r2 + 20.0 * s - 0.2 * t
    return g


def _constant(value: float) -> Callable[[int], np.ndarray]:
    return lambda n: np.full(n, value)


def _tiled(pattern: tuple[float, ...]) -> Callable[[int], np.ndarray]:
    return lambda n: np.tile(np.asarray(pattern, dtype=float), n // len(pattern))


def _freuroth_x0(n: int) -> np.ndarray:
    x0 = np.zeros(n)
    x0[0], x0[1] = 0.5, -2.0
    return x0


def _nondquar_x0(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 1.0, -1.0)


_FAMILIES: tuple[ProblemFamily, ...] = (
    ProblemFamily("ARWHEAD", _arwhead_f, _arwhead_g, _constant(1.0), (1024,),
                  x0_doc="x0 = (1, ..., 1)"),
    ProblemFamily("BDEXP", _bdexp_f, _bdexp_g, _constant(1.0), (1024,), min_n=3,
                  x0_doc="x0 = (1, ..., 1)"),
    ProblemFamily("COSINE", _cosine_f, _cosine_g, _constant(1.0), (1024,),
                  x0_doc="x0 = (1, ..., 1)"),
    ProblemFamily("DQRTIC", _dqrtic_f, _dqrtic_g, _constant(2.0), (1000,), min_n=1,
                  x0_doc="x0 = (2, ..., 2)"),
    ProblemFamily("EDENSCH", _edensch_f, _edensch_g, _constant(0.0), (1000,),
                  x0_doc="x0 = (0, ..., 0)"),
    ProblemFamily("ENGVAL1", _engval1_f, _engval1_g, _constant(2.0), (1000,),
                  x0_doc="x0 = (2, ..., 2)"),
    ProblemFamily("EG2", _eg2_f, _eg2_g, _constant(1.0), (1000,),
                  x0_doc="x0 = (1, ..., 1)"),
    ProblemFamily("EXTROSNB", _extrosnb_f, _extrosnb_g, _constant(-1.0), (1000,),
                  x0_doc="x0 = (-1, ..., -1)"),
    ProblemFamily("HIMMELBG", _himmelbg_f, _himmelbg_g, _constant(0.5), (1000,), divisor=2,
                  x0_doc="x0 = (0.5, ..., 0.5)"),
    ProblemFamily("LIARWHD", _liarwhd_f, _liarwhd_g, _constant(4.0), (1000,),
                  x0_doc="x0 = (4, ..., 4)"),
    ProblemFamily("NONDIA", _nondia_f, _nondia_g, _constant(-1.0), (1000,),
                  x0_doc="x0 = (-1, ..., -1)"),
    ProblemFamily("POWELLSG", _powellsg_f, _powellsg_g, _tiled((3.0, -1.0, 0.0, 1.0)), (1000,),
                  min_n=4, divisor=4, x0_doc="x0 = (3, -1, 0, 1) 重复"),
    ProblemFamily("SROSENBR", _srosenbr_f, _srosenbr_g, _tiled((-1.2, 1.0)), (1000,), divisor=2,
                  x0_doc="x0 = (-1.2, 1) 重复"),
    ProblemFamily("TQUARTIC", _tquartic_f, _tquartic_g, _constant(0.1), (1000,),
                  x0_doc="x0 = (0.1, ..., 0.1)"),
    ProblemFamily("TOINTGSS", _tointgss_f, _tointgss_g, _constant(3.0), (1000,), min_n=3,
                  x0_doc="x0 = (3, ..., 3)"),
    ProblemFamily("BDQRTIC", _bdqrtic_f, _bdqrtic_g, _constant(1.0), (1024,), min_n=5,
                  x0_doc="x0 = (1, ..., 1)"),
    ProblemFamily("FREUROTH", _freuroth_f, _freuroth_g, _freuroth_x0, (1000,),
                  x0_doc="x0 = (0.5, -2, 0, ..., 0)"),
    ProblemFamily("GENROSE", _genrose_f, _genrose_g, lambda n: np.arange(1, n + 1) / (n + 1.0),
                  (1000,), x0_doc="x0_i = i / (n + 1)"),
    ProblemFamily("NONDQUAR", _nondquar_f, _nondquar_g, _nondquar_x0, (1000,), min_n=3,
                  x0_doc="x0 = (1, -1, 1, -1, ...)"),
    ProblemFamily("WOODS", _woods_f, _woods_g, _tiled((-3.0, -1.0, -3.0, -1.0)), (1000,),
                  min_n=4, divisor=4, x0_doc="x0 = (-3, -1, -3, -1) 重复"),
)

_REGISTRY: dict[str, ProblemFamily] = {family.name: family for family in _FAMILIES}

# 基准表（m=8）必选的 14 个问题
MANDATORY_PROBLEMS: tuple[str, ...] = (
    "ARWHEAD", "BDEXP", "COSINE", "DQRTIC", "EDENSCH", "ENGVAL1", "EG2",
    "EXTROSNB", "HIMMELBG", "LIARWHD", "NONDIA", "POWELLSG", "SROSENBR", "TQUARTIC",
)


def list_problems() -> list[tuple[str, tuple[int, ...]]]:
    """
    列出已注册问题及其基准维度

    Returns:
        (问题名, 基准维度) 列表，按注册顺序
    """
    return [(family.name, family.dims) for family in _FAMILIES]


def get_family(name: str) -> ProblemFamily:
    """
    按名称（大小写不敏感）获取问题族

    Raises:
        UnknownProblemError: 名称未注册
    """
    family = _REGISTRY.get(name.strip().upper())
    if family is None:
        raise UnknownProblemError(name, sorted(_REGISTRY))
    return family


def get_problem(name: str, n: Optional[int] = None) -> Problem:
    """
    构造测试问题

    Args:
        name: 问题名
        n: 维度，缺省时取基准表维度

    Returns:
        带标准初始点的问题实例

    Raises:
        UnknownProblemError: 名称未注册
        DimensionError: 维度不满足问题族规则
    """
    family = get_family(name)
    return family.build(family.dims[0] if n is None else n)


# ---------------------------------------------------------------------------
# 二次函数（性质测试）


def make_quadratic(
    A: np.ndarray,
    b: Optional[np.ndarray] = None,
    x0: Optional[np.ndarray] = None,
    name: str = "QUADRATIC",
) -> Problem:
    """
    构造 f(x) = ½ xᵀAx − bᵀx

    Args:
        A: 对称矩阵
        b: 线性项，缺省为 0
        x0: 初始点，缺省为全 1
        name: 问题名
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    b = np.zeros(n) if b is None else np.array(b, dtype=float)
    x0 = np.ones(n) if x0 is None else x0
    A.flags.writeable = False
    b.flags.writeable = False

    def f(x):
        return float(0.5 * x @ (A @ x) - b @ x)

    def grad(x):
        return A @ x - b

    return Problem(name=name, n=n, f=f, grad=grad, x0=x0)


def random_spd_matrix(
    n: int,
    rng: np.random.Generator,
    eig_range: tuple[float, float] = (1.0, 10.0),
) -> np.ndarray:
    """特征值在 eig_range 内对数均匀分布的随机 SPD 矩阵"""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = np.exp(rng.uniform(np.log(eig_range[0]), np.log(eig_range[1]), size=n))
    A = (q * eigs) @ q.T
    return 0.5 * (A + A.T)


def random_spd_quadratic(
    n: int,
    rng: np.random.Generator,
    eig_range: tuple[float, float] = (1.0, 10.0),
) -> Problem:
    """随机 SPD 二次问题，b 和 x0 取标准正态"""
    A = random_spd_matrix(n, rng, eig_range)
    return make_quadratic(A, rng.standard_normal(n), rng.standard_normal(n), name=f"QUAD{n}")
