"""采样场、有限差分、Poisson 括号与 C⁰ 范数"""

from __future__ import annotations

import csv
import warnings
from collections.abc import Callable
from functools import lru_cache
from pathlib import Path
from typing import Any

import numpy as np
import sympy as sp
from scipy import integrate

from ..models.chart import Chart, make_chart
from ..models.grid import AxisSpec, GridField, GridSpec
from ..utils import format_float, logger
from ..utils.constants import DEFAULT_FD_ORDER, FD_ORDERS, SUPPORT_LEAK_RATIO
from ..utils.errors import ChartError, FieldError, SupportLeakWarning
from .fields import HamiltonianField

# ==================== 采样 ====================


def sample_field(
    chart: Chart, grid: GridSpec, fn: HamiltonianField | Callable[[np.ndarray], np.ndarray]
) -> GridField:
    """在网格上采样函数

    Args:
        chart: 坐标卡
        grid: 网格
        fn: 闭式场或批量求值函数 points (..., dim) -> (...)

    Returns:
        带闭式函数的 GridField（fn 为普通函数时包装为无梯度的 HamiltonianField）

    Raises:
        ChartError: 网格与坐标卡不相容
        FieldError: 采样值非有限
    """
    grid.check_chart(chart)
    if not isinstance(fn, HamiltonianField):
        fn = HamiltonianField(chart, fn)
    elif fn.chart != chart:
        raise ChartError("闭式场与网格的坐标卡不一致")
    samples = np.asarray(fn(grid.points()), dtype=float)
    if samples.shape != grid.shape:
        samples = np.broadcast_to(samples, grid.shape).copy()
    if not np.all(np.isfinite(samples)):
        bad = int(np.count_nonzero(~np.isfinite(samples)))
        raise FieldError(f"[{fn.label or 'field'}] 采样出现 {bad} 个非有限值")
    return GridField(chart, grid, samples, fn)


# ==================== 有限差分 ====================


@lru_cache(maxsize=64)
def stencil_weights(offsets: tuple[int, ...], derivative: int = 1) -> tuple[sp.Rational, ...]:
    """任意偏移上的有限差分权重（精确有理数）

    Args:
        offsets: 相对网格点的整数偏移，如 (-1, 0, 1)
        derivative: 导数阶数

    Returns:
        与 offsets 一一对应的权重，例如 (-1, 0, 1), 1 -> (-1/2, 0, 1/2)
    """
    if len(offsets) <= derivative:
        raise ValueError(f"{derivative} 阶导数至少需要 {derivative + 1} 个点")
    table = sp.finite_diff_weights(derivative, list(offsets), 0)
    return tuple(sp.nsimplify(w) for w in table[derivative][-1])


def _apply_stencil(values: np.ndarray, offsets: tuple[int, ...], index: int) -> np.ndarray:
    """沿第 0 轴在 index 处应用一阶差分模板（单位步长）

    采用 Σ w_k (f[i+k] − f[i]) 形式，常数的导数严格为 0。
    """
    weights = stencil_weights(offsets, 1)
    out = np.zeros(values.shape[1:])
    for k, w in zip(offsets, weights):
        if k:
            out += float(w) * (values[index + k] - values[index])
    return out


def partial_derivative(field: GridField, axis: int, order: int = DEFAULT_FD_ORDER) -> GridField:
    """沿某一坐标轴的有限差分偏导数

    周期轴使用循环中心差分；非周期轴内部中心差分，边界使用同阶单侧模板。

    Args:
        field: 采样场
        axis: 轴序号
        order: 精度阶（2 或 4）

    Returns:
        导数场（不携带闭式函数）

    Raises:
        ChartError: 轴越界或网格点数少于模板宽度
    """
    if not 0 <= axis < field.grid.ndim:
        raise ChartError(f"轴序号 {axis} 越界（维数 {field.grid.ndim}）")
    if order not in FD_ORDERS:
        raise ValueError(f"差分阶数必须属于 {FD_ORDERS}，得到 {order}")
    spec = field.grid.axes[axis]
    if spec.points < order + 1:
        raise ChartError(f"轴 {axis} 只有 {spec.points} 个点，{order} 阶模板需要 {order + 1} 个")

    values = np.moveaxis(field.samples, axis, 0)
    half = order // 2
    central = tuple(range(-half, half + 1))
    weights = stencil_weights(central, 1)

    if spec.periodic:
        result = np.zeros_like(values)
        for k, w in zip(central, weights):
            if k:
                result += float(w) * (np.roll(values, -k, axis=0) - values)
    else:
        size = spec.points
        result = np.empty_like(values)
        inner = slice(half, size - half)
        acc = np.zeros_like(values[inner])
        for k, w in zip(central, weights):
            if k:
                acc += float(w) * (values[half + k : size - half + k] - values[inner])
        result[inner] = acc
        for i in range(half):
            result[i] = _apply_stencil(values, tuple(range(-i, order + 1 - i)), i)
            j = size - 1 - i
            result[j] = _apply_stencil(values, tuple(range(-(order - i), i + 1)), j)

    result /= spec.spacing
    return GridField(field.chart, field.grid, np.moveaxis(result, 0, axis))


# ==================== Poisson 括号 ====================


def bracket_hamiltonian(F: HamiltonianField, G: HamiltonianField, label: str = "") -> HamiltonianField:
    """闭式括号 {F,G} = Σ Πᵢⱼ ∂ᵢF ∂ⱼG

    两者都有符号表达式时给出符号结果，否则给出数值闭式（梯度缺省差分）。
    """
    if F.chart != G.chart:
        raise ChartError("括号两侧的坐标卡不一致")
    chart = F.chart
    if F.expr is not None and G.expr is not None:
        syms = chart.symbols()
        pi = chart.poisson_matrix_symbolic()
        dF = [sp.diff(F.expr, x) for x in syms]
        dG = [sp.diff(G.expr, x) for x in syms]
        expr = sum(
            (pi[i, j] * dF[i] * dG[j] for i in range(chart.dim) for j in range(chart.dim) if pi[i, j] != 0),
            sp.Integer(0),
        )
        return HamiltonianField.from_expr(chart, expr, label)

    def value(points: np.ndarray) -> np.ndarray:
        pi = chart.poisson_matrix(points)
        return np.einsum("...ij,...i,...j->...", pi, F.grad(points), G.grad(points))

    return HamiltonianField(chart, value, label=label, h_fd=F.h_fd)


def poisson_bracket(
    F: GridField, G: GridField, mode: str = "auto", order: int = DEFAULT_FD_ORDER
) -> GridField:
    """网格上的 Poisson 括号

    Args:
        F: 采样场
        G: 采样场（同一坐标卡与网格）
        mode: exact（闭式导数）/ fd（有限差分）/ auto（两者都有闭式时用 exact）
        order: fd 模式的差分阶

    Raises:
        ChartError: 坐标卡或网格不一致，或在极点求值
        FieldError: exact 模式缺少闭式
    """
    F.check_compatible(G)
    exact = F.analytic is not None and G.analytic is not None
    if mode == "exact" and not exact:
        raise FieldError("exact 模式需要两个场都携带闭式函数")
    if mode == "exact" or (mode == "auto" and exact):
        return sample_field(F.chart, F.grid, bracket_hamiltonian(F.analytic, G.analytic))

    chart, grid = F.chart, F.grid
    pi = chart.poisson_matrix(grid.points())
    dF = [partial_derivative(F, i, order).samples for i in range(chart.dim)]
    dG = [partial_derivative(G, j, order).samples for j in range(chart.dim)]
    samples = np.zeros(grid.shape)
    for i in range(chart.dim):
        for j in range(chart.dim):
            if i != j:
                samples += pi[..., i, j] * dF[i] * dG[j]
    return GridField(chart, grid, samples)


# ==================== 范数与积分 ====================


def c0_norm(field: GridField | np.ndarray) -> float:
    """C⁰ 范数的网格近似：max |samples|"""
    samples = field.samples if isinstance(field, GridField) else np.asarray(field)
    if samples.size == 0:
        return 0.0
    return float(np.max(np.abs(samples)))


def boundary_max(field: GridField) -> float:
    """非周期轴边界面上的 max |samples|"""
    worst = 0.0
    for axis, spec in enumerate(field.grid.axes):
        if spec.periodic:
            continue
        values = np.moveaxis(field.samples, axis, 0)
        worst = max(worst, float(np.max(np.abs(values[0]))), float(np.max(np.abs(values[-1]))))
    return worst


def quadrature(field: GridField, check_support: bool = True) -> float:
    """张量积梯形积分（周期轴即矩形和）

    Args:
        field: 采样场
        check_support: 是否检查非周期边界上的支撑泄漏

    Returns:
        积分值
    """
    if check_support:
        norm = c0_norm(field)
        edge = boundary_max(field)
        if norm > 0 and edge > SUPPORT_LEAK_RATIO * norm:
            message = f"被积函数在边界上不可忽略: 边界最大值 {edge:.3e}，C⁰ 范数 {norm:.3e}"
            logger.warning(message)
            warnings.warn(message, SupportLeakWarning, stacklevel=2)

    values = field.samples
    for spec in reversed(field.grid.axes):
        if spec.periodic:
            values = values.sum(axis=-1) * spec.spacing
        else:
            values = integrate.trapezoid(values, dx=spec.spacing, axis=-1)
    return float(values)


# ==================== CSV ====================


def write_field_csv(field: GridField, path: str | Path) -> Path:
    """写出采样场：首行 `# chart=... axes=... dims=...`，之后每点一行"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(field.csv_header() + "\n")
        writer = csv.writer(f, lineterminator="\n")
        for row in field.csv_rows():
            writer.writerow([format_float(v) for v in row])
    return path


def _parse_header(line: str) -> dict[str, str]:
    if not line.startswith("#"):
        raise FieldError("场 CSV 缺少首行 # chart=...")
    items = dict(part.split("=", 1) for part in line[1:].split() if "=" in part)
    for key in ("chart", "axes", "dims"):
        if key not in items:
            raise FieldError(f"场 CSV 首行缺少 {key}")
    return items


def read_field_csv(path: str | Path) -> GridField:
    """读取 write_field_csv 写出的采样场（不携带闭式函数）"""
    with open(path, encoding="utf-8", newline="") as f:
        header = _parse_header(f.readline().strip())
        rows = np.array([[float(v) for v in row] for row in csv.reader(f) if row])

    names = header["axes"].split(",")
    dims = tuple(int(d) for d in header["dims"].split(","))
    params: dict[str, Any] = {}
    if header["chart"] == "cartesian":
        params["n"] = len(names) // 2
    elif header["chart"] == "symplectization_s1xU":
        params["transverse_dim"] = len(names) - 2
    chart = make_chart(header["chart"], **params)
    if tuple(names) != chart.coordinate_names:
        raise FieldError(f"坐标名 {names} 与坐标卡 {chart.kind} 不符")

    coords = rows[:, :-1].reshape(dims + (len(dims),))
    axes = []
    for axis, name in enumerate(names):
        line = np.moveaxis(coords[..., axis], axis, 0).reshape(dims[axis], -1)[:, 0]
        periodic = name in chart.periodic_names
        if periodic:
            spacing = (line[-1] - line[0]) / (dims[axis] - 1)
            axes.append(AxisSpec(float(line[0]), float(line[0] + spacing * dims[axis]), dims[axis], True))
        else:
            axes.append(AxisSpec(float(line[0]), float(line[-1]), dims[axis], False))
    return GridField(chart, GridSpec(tuple(axes)), rows[:, -1].reshape(dims))
