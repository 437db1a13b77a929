"""网格与网格采样场数据模型"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
import sympy as sp

from ..utils.constants import MIN_AXIS_POINTS
from ..utils.errors import ChartError, FieldError
from .chart import Chart

if TYPE_CHECKING:
    from ..core.fields import HamiltonianField


@dataclass(frozen=True)
class AxisSpec:
    """单个坐标轴

    Attributes:
        min: 下界
        max: 上界
        points: 采样点数
        periodic: 是否周期（周期轴上 max 与 min 等同，不重复采样）
    """

    min: float
    max: float
    points: int
    periodic: bool = False

    def __post_init__(self) -> None:
        if not self.min < self.max:
            raise ChartError(f"坐标轴需要 min < max，得到 [{self.min}, {self.max}]")
        if self.points < MIN_AXIS_POINTS:
            raise ChartError(f"坐标轴至少需要 {MIN_AXIS_POINTS} 个点，得到 {self.points}")

    @property
    def spacing(self) -> float:
        span = self.max - self.min
        return span / self.points if self.periodic else span / (self.points - 1)

    def coordinates(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.points, endpoint=not self.periodic)

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> AxisSpec:
        """从字典创建实例"""
        return cls(
            min=float(data["min"]),
            max=float(data["max"]),
            points=int(data["points"]),
            periodic=bool(data.get("periodic", False)),
        )


@dataclass(frozen=True)
class GridSpec:
    """均匀矩形网格（逐轴可周期）"""

    axes: tuple[AxisSpec, ...]

    @classmethod
    def of(cls, *axes: tuple) -> GridSpec:
        """按 (min, max, points[, periodic]) 元组快速构造"""
        return cls(tuple(AxisSpec(*axis) for axis in axes))

    @property
    def ndim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(axis.points for axis in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod([axis.spacing for axis in self.axes]))

    def coordinates(self) -> list[np.ndarray]:
        return [axis.coordinates() for axis in self.axes]

    def points(self) -> np.ndarray:
        """网格点，形状 (*shape, ndim)"""
        mesh = np.meshgrid(*self.coordinates(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def check_chart(self, chart: Chart) -> None:
        """检查网格与坐标卡相容（维数、周期轴、极点）"""
        if chart.dim != self.ndim:
            raise ChartError(f"网格维数 {self.ndim} 与坐标卡 {chart.kind} 维数 {chart.dim} 不符")
        if chart.kind == "polar_r2" and self.axes[0].min <= 0:
            raise ChartError("极坐标网格必须从 r_min > 0 开始")

    def within(self, other: GridSpec) -> bool:
        """各轴区间都落在 other 对应轴内（维数相同）"""
        if self.ndim != other.ndim:
            return False
        return all(inner.min >= outer.min and inner.max <= outer.max for inner, outer in zip(self.axes, other.axes))

    def to_dict(self) -> list[dict[str, Any]]:
        """转换为字典列表"""
        return [axis.to_dict() for axis in self.axes]

    @classmethod
    def from_dict(cls, data: list[dict[str, Any]]) -> GridSpec:
        """从字典列表创建实例"""
        return cls(tuple(AxisSpec.from_dict(axis) for axis in data))


@dataclass(frozen=True, eq=False)
class GridField:
    """坐标卡中矩形网格上的标量采样场

    Attributes:
        chart: 坐标卡
        grid: 网格
        samples: 采样值，形状与网格一致
        analytic: 闭式函数（存在时 samples 即为其求值）
    """

    chart: Chart
    grid: GridSpec
    samples: np.ndarray
    analytic: HamiltonianField | None = None

    def __post_init__(self) -> None:
        if self.samples.shape != self.grid.shape:
            raise FieldError(f"采样形状 {self.samples.shape} 与网格 {self.grid.shape} 不符")

    def check_compatible(self, other: GridField) -> None:
        if self.chart != other.chart or self.grid != other.grid:
            raise ChartError("两个场的坐标卡或网格不一致")

    def _combine(self, other: Any, op: str) -> GridField:
        if isinstance(other, GridField):
            self.check_compatible(other)
            other_samples, other_analytic = other.samples, other.analytic
        else:
            other_samples, other_analytic = float(other), float(other)
        samples = {
            "+": lambda a, b: a + b,
            "-": lambda a, b: a - b,
            "*": lambda a, b: a * b,
        }[op](self.samples, other_samples)
        analytic = None
        if self.analytic is not None and other_analytic is not None:
            analytic = {
                "+": lambda a, b: a + b,
                "-": lambda a, b: a - b,
                "*": lambda a, b: a * b,
            }[op](self.analytic, other_analytic)
        return GridField(self.chart, self.grid, samples, analytic)

    def __add__(self, other: Any) -> GridField:
        return self._combine(other, "+")

    def __radd__(self, other: Any) -> GridField:
        return self._combine(other, "+")

    def __sub__(self, other: Any) -> GridField:
        return self._combine(other, "-")

    def __mul__(self, other: Any) -> GridField:
        return self._combine(other, "*")

    def __rmul__(self, other: Any) -> GridField:
        return self._combine(other, "*")

    def __neg__(self) -> GridField:
        return self._combine(-1.0, "*")

    def csv_header(self) -> str:
        """CSV 首行：# chart=<kind> axes=<names> dims=<points>"""
        axes = ",".join(self.chart.coordinate_names)
        dims = ",".join(str(p) for p in self.grid.shape)
        return f"# chart={self.chart.kind} axes={axes} dims={dims}"

    def csv_rows(self) -> np.ndarray:
        """每个网格点一行：坐标..., 值"""
        points = self.grid.points().reshape(-1, self.grid.ndim)
        return np.column_stack([points, self.samples.reshape(-1)])


def bump_expr(u: sp.Expr) -> sp.Expr:
    """光滑鼓包 exp(1 − 1/(1 − u))（u < 1），u ≥ 1 时为 0

    u 为归一化的平方半径；中心值为 1。
    """
    return sp.Piecewise((sp.exp(1 - 1 / (1 - u)), u < 1), (0, True))


@dataclass(frozen=True)
class TestFunction:
    """紧支撑试验函数 φ（两阶以上连续可导的鼓包）

    Attributes:
        center: 中心点
        radius: 支撑半径
    """

    __test__ = False  # 不是 pytest 测试类

    center: tuple[float, ...]
    radius: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise FieldError(f"试验函数半径必须为正，得到 {self.radius}")

    def expression(self, chart: Chart) -> sp.Expr:
        syms = chart.symbols()
        if len(syms) != len(self.center):
            raise ChartError("试验函数中心维数与坐标卡不符")
        u = sum((x - c) ** 2 for x, c in zip(syms, self.center)) / sp.Float(self.radius) ** 2
        return bump_expr(u)

    def as_field(self, chart: Chart) -> HamiltonianField:
        """以闭式场形式返回（带精确导数）"""
        from ..core.fields import HamiltonianField

        return HamiltonianField.from_expr(chart, self.expression(chart), label="phi")

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return {"center": list(self.center), "radius": self.radius}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TestFunction:
        """从字典创建实例"""
        return cls(center=tuple(float(c) for c in data["center"]), radius=float(data["radius"]))
