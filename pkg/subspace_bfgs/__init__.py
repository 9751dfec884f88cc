"""
Subspace BFGS
基于动态子空间的有限内存拟牛顿优化库（Fast-BFGS ver-A / ver-B 及 GD/BFGS/L-BFGS 基线）
"""

__version__ = "0.1.0"
