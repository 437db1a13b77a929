"""闭式哈密顿函数（值 + 可选梯度）"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property
from typing import Any

import numpy as np
import sympy as sp

from ..models.chart import Chart
from ..utils import logger
from ..utils.constants import (
    DEFAULT_FD_STEP,
    DEFAULT_SEED,
    GRADIENT_CHECK_COUNT,
    GRADIENT_CHECK_TOL,
)
from ..utils.errors import ChartError, FieldError

PointFn = Callable[[np.ndarray], np.ndarray]


def _lambdify(symbols: tuple[sp.Symbol, ...], expr: sp.Expr) -> PointFn:
    """把符号表达式编译为批量求值函数 points (..., dim) -> (...)"""
    compiled = sp.lambdify(symbols, expr, modules="numpy")

    def evaluate(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        with np.errstate(all="ignore"):
            values = compiled(*np.moveaxis(points, -1, 0))
        return np.broadcast_to(np.asarray(values, dtype=float), points.shape[:-1]).copy()

    return evaluate


@dataclass(frozen=True, eq=False)
class HamiltonianField:
    """坐标卡上的闭式哈密顿函数

    Attributes:
        chart: 坐标卡
        value: 值函数 points (..., dim) -> (...)
        gradient: 梯度函数 points -> (..., dim)；缺省时以步长 h_fd 中心差分
        expr: 符号表达式（存在时值与各阶导数均由其精确给出）
        label: 标签
        h_fd: 差分步长
    """

    chart: Chart
    value: PointFn
    gradient: PointFn | None = None
    expr: sp.Expr | None = None
    label: str = ""
    h_fd: float = DEFAULT_FD_STEP

    # ==================== 构造 ====================

    @classmethod
    def from_expr(
        cls, chart: Chart, expr: Any, label: str = "", check: bool = False
    ) -> HamiltonianField:
        """由符号表达式构造（导数精确）

        Args:
            chart: 坐标卡
            expr: sympy 表达式或可 sympify 的字符串，变量为坐标卡符号
            label: 标签
            check: 是否执行构造时梯度探针检查
        """
        syms = chart.symbols()
        if isinstance(expr, str):
            expr = sp.sympify(expr, locals={s.name: s for s in syms})
        expr = sp.sympify(expr)
        unknown = expr.free_symbols - set(syms)
        if unknown:
            raise ChartError(f"表达式含有坐标卡 {chart.kind} 以外的符号: {sorted(map(str, unknown))}")
        partials = [sp.diff(expr, x) for x in syms]
        value = _lambdify(syms, expr)
        grad_parts = [_lambdify(syms, d) for d in partials]

        def gradient(points: np.ndarray) -> np.ndarray:
            return np.stack([g(points) for g in grad_parts], axis=-1)

        field = cls(chart, value, gradient, expr, label)
        if check:
            field.check_gradient()
        return field

    @classmethod
    def from_callables(
        cls,
        chart: Chart,
        value: PointFn,
        gradient: PointFn | None = None,
        label: str = "",
        h_fd: float = DEFAULT_FD_STEP,
        check: bool = True,
    ) -> HamiltonianField:
        """由数值函数构造；给出梯度时在 100 个随机探针点上与中心差分比对"""
        field = cls(chart, value, gradient, None, label, h_fd)
        if gradient is not None and check:
            field.check_gradient()
        return field

    @classmethod
    def constant(cls, chart: Chart, c: float, label: str = "") -> HamiltonianField:
        return cls.from_expr(chart, sp.Float(c) if c != int(c) else sp.Integer(int(c)), label)

    def check_gradient(self, seed: int = DEFAULT_SEED) -> None:
        """梯度与中心差分一致性检查

        Raises:
            FieldError: 任一探针点偏差超过 1e-6·(1+|∇H|)
        """
        if self.gradient is None:
            return
        rng = np.random.default_rng(seed)
        box = np.array(self.chart.sample_box())
        sample_points = rng.uniform(box[:, 0], box[:, 1], size=(GRADIENT_CHECK_COUNT, self.chart.dim))
        exact = self.gradient(sample_points)
        approx = self.fd_gradient(sample_points)
        scale = 1.0 + np.abs(exact)
        worst = float(np.max(np.abs(exact - approx) / scale))
        if not np.isfinite(worst) or worst > GRADIENT_CHECK_TOL:
            raise FieldError(f"[{self.label or 'H'}] 梯度与中心差分不一致: 相对偏差 {worst:.3e}")
        logger.debug(f"[{self.label or 'H'}] 梯度探针检查通过 (偏差 {worst:.2e})")

    # ==================== 求值 ====================

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.value(np.asarray(points, dtype=float))

    def fd_gradient(self, points: np.ndarray) -> np.ndarray:
        """中心差分梯度（一次批量求值所有 ±h 偏移点）"""
        points = np.asarray(points, dtype=float)
        dim = self.chart.dim
        offsets = self.h_fd * np.eye(dim)
        shifted = np.stack([points + o for o in offsets] + [points - o for o in offsets])
        values = self.value(shifted)
        return np.stack(
            [(values[i] - values[dim + i]) / (2 * self.h_fd) for i in range(dim)], axis=-1
        )

    def grad(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if self.gradient is not None:
            return self.gradient(points)
        return self.fd_gradient(points)

    @property
    def has_gradient(self) -> bool:
        return self.gradient is not None

    @cached_property
    def _hessian_parts(self) -> list[list[PointFn]] | None:
        if self.expr is None:
            return None
        syms = self.chart.symbols()
        return [[_lambdify(syms, sp.diff(self.expr, a, b)) for b in syms] for a in syms]

    def hessian(self, points: np.ndarray) -> np.ndarray:
        """二阶导数矩阵 (..., dim, dim)；无符号表达式时对梯度差分"""
        points = np.asarray(points, dtype=float)
        parts = self._hessian_parts
        if parts is not None:
            return np.stack([np.stack([h(points) for h in row], axis=-1) for row in parts], axis=-2)
        dim = self.chart.dim
        rows = []
        for i in range(dim):
            step = np.zeros(dim)
            step[i] = self.h_fd
            rows.append((self.grad(points + step) - self.grad(points - step)) / (2 * self.h_fd))
        return np.stack(rows, axis=-2)

    # ==================== 运算 ====================

    def _coerce(self, other: Any) -> HamiltonianField:
        if isinstance(other, HamiltonianField):
            if other.chart != self.chart:
                raise ChartError("两个哈密顿函数的坐标卡不一致")
            return other
        return HamiltonianField.constant(self.chart, float(other))

    def __add__(self, other: Any) -> HamiltonianField:
        other = self._coerce(other)
        if self.expr is not None and other.expr is not None:
            return HamiltonianField.from_expr(self.chart, self.expr + other.expr)
        gradient = None
        if self.has_gradient and other.has_gradient:
            gradient = lambda p: self.grad(p) + other.grad(p)  # noqa: E731
        return HamiltonianField(self.chart, lambda p: self(p) + other(p), gradient, h_fd=self.h_fd)

    __radd__ = __add__

    def __neg__(self) -> HamiltonianField:
        return self * -1.0

    def __sub__(self, other: Any) -> HamiltonianField:
        return self + (-1.0) * self._coerce(other)

    def __rsub__(self, other: Any) -> HamiltonianField:
        return self._coerce(other) - self

    def __mul__(self, other: Any) -> HamiltonianField:
        other = self._coerce(other)
        if self.expr is not None and other.expr is not None:
            return HamiltonianField.from_expr(self.chart, self.expr * other.expr)
        gradient = None
        if self.has_gradient and other.has_gradient:

            def gradient(p: np.ndarray) -> np.ndarray:
                return self.grad(p) * other(p)[..., None] + self(p)[..., None] * other.grad(p)

        return HamiltonianField(self.chart, lambda p: self(p) * other(p), gradient, h_fd=self.h_fd)

    __rmul__ = __mul__

    @staticmethod
    def linear_combination(
        coefficients: np.ndarray, fields: list[HamiltonianField], label: str = ""
    ) -> HamiltonianField:
        """Σ λᵢ·Hᵢ（全部带符号表达式时精确组合）"""
        if not fields:
            raise FieldError("线性组合至少需要一个场")
        chart = fields[0].chart
        coefficients = [float(c) for c in coefficients]
        if all(f.expr is not None for f in fields):
            expr = sum(
                (sp.nsimplify(c) * f.expr for c, f in zip(coefficients, fields) if c != 0),
                sp.Integer(0),
            )
            return HamiltonianField.from_expr(chart, expr, label)

        def value(p: np.ndarray) -> np.ndarray:
            return sum(c * f(p) for c, f in zip(coefficients, fields))

        gradient = None
        if all(f.has_gradient for f in fields):

            def gradient(p: np.ndarray) -> np.ndarray:
                return sum(c * f.grad(p) for c, f in zip(coefficients, fields))

        return HamiltonianField(chart, value, gradient, label=label, h_fd=fields[0].h_fd)
