"""相空间坐标卡数据模型"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import sympy as sp

from ..utils.constants import (
    BRACKET_SIGN,
    ESCAPE_CARTESIAN_MAX,
    ESCAPE_R_MAX,
    ESCAPE_R_MIN,
    ESCAPE_S_MAX,
)
from ..utils.errors import ChartError

CHART_KINDS = ("cartesian", "polar_r2", "cylinder_s1", "symplectization_s1xU")


@dataclass(frozen=True)
class Chart:
    """相空间坐标卡

    Poisson 结构由闭式反对称矩阵 Π(x) 给出：
    {H,K}(x) = Σᵢⱼ Πᵢⱼ(x) ∂ᵢH ∂ⱼK。

    Attributes:
        kind: 坐标卡类型
        coordinate_names: 坐标名（有序）
        params: 构造参数（cartesian 的 n，辛化的 transverse_dim）
        periodic_names: 周期坐标名（θ）
        escape_box: 逃逸区域，(轴, 下界, 上界) 列表
    """

    kind: str
    coordinate_names: tuple[str, ...]
    params: tuple[tuple[str, int], ...] = ()
    periodic_names: tuple[str, ...] = ()
    escape_box: tuple[tuple[int, float, float], ...] = field(default=(), compare=False)

    @property
    def dim(self) -> int:
        return len(self.coordinate_names)

    def param(self, name: str, default: int = 0) -> int:
        return dict(self.params).get(name, default)

    def axis(self, name: str) -> int:
        """坐标名对应的轴序号"""
        try:
            return self.coordinate_names.index(name)
        except ValueError:
            raise ChartError(f"坐标卡 {self.kind} 没有坐标 {name}") from None

    def symbols(self) -> tuple[sp.Symbol, ...]:
        """坐标对应的 sympy 符号（实数）"""
        return tuple(sp.Symbol(name, real=True) for name in self.coordinate_names)

    # ==================== Poisson 结构 ====================

    def _entries(self, s_value, r_value, exp) -> list[tuple[int, int, Any]]:
        """Π 的上三角非零元（i < j），其余由反对称给出"""
        if self.kind == "cartesian":
            n = self.param("n", 1)
            return [(i, n + i, 1) for i in range(n)]
        if self.kind == "polar_r2":
            return [(0, 1, 1 / r_value)]
        if self.kind == "cylinder_s1":
            return [(0, 1, exp(-s_value))]
        k = self.param("transverse_dim", 2) // 2
        entries = [(0, 1, exp(-s_value))]
        # 横向坐标 x 与 (s, θ) 辛正交，按 (x₁,x₂), (x₃,x₄) ... 成对
        entries.extend((2 + 2 * i, 3 + 2 * i, 1) for i in range(k))
        return entries

    def poisson_matrix(self, points: np.ndarray) -> np.ndarray:
        """在一批点上计算 Π(x)

        Args:
            points: 形状 (..., dim)

        Returns:
            形状 (..., dim, dim) 的反对称矩阵

        Raises:
            ChartError: 极坐标卡在 r ≤ 0 处求值
        """
        points = np.asarray(points, dtype=float)
        if points.shape[-1] != self.dim:
            raise ChartError(f"点的维数 {points.shape[-1]} 与坐标卡 {self.kind} 维数 {self.dim} 不符")
        batch = points.shape[:-1]
        matrix = np.zeros(batch + (self.dim, self.dim))
        first = points[..., 0]
        if self.kind == "polar_r2" and np.any(first <= 0):
            raise ChartError("极坐标卡在 r ≤ 0 处奇异")
        for i, j, value in self._entries(first, first, np.exp):
            matrix[..., i, j] = BRACKET_SIGN * value
            matrix[..., j, i] = -BRACKET_SIGN * value
        return matrix

    def poisson_matrix_symbolic(self) -> sp.Matrix:
        """Π 的符号形式（供精确括号与符号验证使用）"""
        syms = self.symbols()
        matrix = sp.zeros(self.dim, self.dim)
        first = syms[0]
        for i, j, value in self._entries(first, first, sp.exp):
            matrix[i, j] = BRACKET_SIGN * value
            matrix[j, i] = -BRACKET_SIGN * value
        return matrix

    # ==================== 区域 ====================

    def in_domain(self, points: np.ndarray) -> np.ndarray:
        """逐点判断是否位于逃逸区域内"""
        points = np.asarray(points, dtype=float)
        inside = np.all(np.isfinite(points), axis=-1)
        for axis, lo, hi in self.escape_box:
            inside &= (points[..., axis] >= lo) & (points[..., axis] <= hi)
        return inside

    def with_escape_box(self, box: dict[str, tuple[float, float]]) -> Chart:
        """替换逃逸区域（按坐标名给出上下界）"""
        entries = tuple((self.axis(name), float(lo), float(hi)) for name, (lo, hi) in box.items())
        return Chart(self.kind, self.coordinate_names, self.params, self.periodic_names, entries)

    def sample_box(self) -> tuple[tuple[float, float], ...]:
        """构造时梯度检查使用的采样盒"""
        box = []
        for name in self.coordinate_names:
            if name == "theta":
                box.append((0.0, 2 * np.pi))
            elif name == "r":
                box.append((0.1, 2.0))
            elif name == "s":
                box.append((-3.0, 3.0))
            elif name.startswith("x"):
                box.append((-1.2, 1.2))
            else:
                box.append((-2.0, 2.0))
        return tuple(box)

    def ring_points(self, radius: float, angles: np.ndarray) -> np.ndarray:
        """半径为 radius 的环上的点（线性增长证书的采样）

        Raises:
            ChartError: 坐标卡没有径向坐标
        """
        angles = np.asarray(angles, dtype=float)
        if self.kind == "polar_r2":
            return np.stack([np.full_like(angles, radius), angles], axis=-1)
        if self.kind == "cartesian" and self.dim == 2:
            return np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=-1)
        raise ChartError(f"坐标卡 {self.kind} (dim={self.dim}) 不支持环形采样")

    # ==================== 序列化 ====================

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return {"kind": self.kind, **dict(self.params)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Chart:
        """从字典创建实例"""
        params = {k: v for k, v in data.items() if k != "kind"}
        return make_chart(data.get("kind", ""), **params)


def make_chart(kind: str, **params: int) -> Chart:
    """构造坐标卡

    Args:
        kind: cartesian / polar_r2 / cylinder_s1 / symplectization_s1xU
        **params: cartesian 接受 n（维数 2n），辛化接受 transverse_dim（偶数且 ≥ 2）

    Returns:
        Π 为闭式反对称矩阵的坐标卡

    Raises:
        ChartError: 未知类型或维数非法
    """
    if kind == "cartesian":
        n = int(params.get("n", 1))
        if n < 1:
            raise ChartError(f"cartesian 需要 n ≥ 1，得到 {n}")
        if n == 1:
            names = ("q", "p")
        else:
            names = tuple(f"q{i + 1}" for i in range(n)) + tuple(f"p{i + 1}" for i in range(n))
        box = tuple((i, -ESCAPE_CARTESIAN_MAX, ESCAPE_CARTESIAN_MAX) for i in range(2 * n))
        return Chart(kind, names, (("n", n),), (), box)

    if kind == "polar_r2":
        return Chart(kind, ("r", "theta"), (), ("theta",), ((0, ESCAPE_R_MIN, ESCAPE_R_MAX),))

    if kind == "cylinder_s1":
        return Chart(kind, ("s", "theta"), (), ("theta",), ((0, -ESCAPE_S_MAX, ESCAPE_S_MAX),))

    if kind == "symplectization_s1xU":
        tdim = int(params.get("transverse_dim", 2))
        if tdim < 2 or tdim % 2:
            raise ChartError(f"辛化的横向维数必须为 ≥ 2 的偶数，得到 {tdim}")
        names = ("s", "theta") + tuple(f"x{i + 1}" for i in range(tdim))
        box = ((0, -ESCAPE_S_MAX, ESCAPE_S_MAX),) + tuple(
            (2 + i, -ESCAPE_R_MAX, ESCAPE_R_MAX) for i in range(tdim)
        )
        return Chart(kind, names, (("transverse_dim", tdim),), ("theta",), box)

    raise ChartError(f"未知坐标卡类型: {kind}（可选: {', '.join(CHART_KINDS)}）")
