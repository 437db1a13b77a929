"""仿射于无穷远的哈密顿量：辛性判据与交换子流实验"""

from __future__ import annotations

import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
import sympy as sp

from ..core.fields import HamiltonianField
from ..core.flows import commutator_generator, flow_points, generated_flow
from ..core.geometry import bracket_hamiltonian, c0_norm, partial_derivative, poisson_bracket, sample_field
from ..models.chart import Chart, make_chart
from ..models.config import StepControl
from ..models.grid import GridField, GridSpec, bump_expr
from ..models.report import CommutatorReport, SymplecticReport
from ..utils import logger
from ..utils.constants import (
    COMMUTATOR_TOL,
    DEFAULT_SEED,
    DEGENERATE_JACOBIAN_TOL,
    GENERATOR_STEP_TOL,
)
from ..utils.errors import ChartError, DegenerateJacobianWarning, FieldError

MapFn = Callable[[np.ndarray], np.ndarray]

SUPPORT_SAMPLES = 256
AFFINE_FLOW_METHODS = ("splitting", "direct")


@dataclass(frozen=True, eq=False)
class AffineHamiltonian:
    """紧支撑部分加仿射部分：H + u，u(x) = ⟨a, x⟩ + c

    Attributes:
        compact_part: 紧支撑哈密顿函数（None 表示 0）
        covector: 线性部分系数 a（长度 2n）
        constant: 常数项 c
        support_radius: 紧支撑部分的声明支撑半径（以原点为心）
        chart: 笛卡尔坐标卡
    """

    compact_part: HamiltonianField | None
    covector: tuple[float, ...]
    constant: float = 0.0
    support_radius: float = 1.0
    chart: Chart | None = None

    def __post_init__(self) -> None:
        chart = self.chart or (self.compact_part.chart if self.compact_part else make_chart("cartesian", n=1))
        if chart.kind != "cartesian":
            raise ChartError("仿射哈密顿量只定义在笛卡尔坐标卡上")
        if len(self.covector) != chart.dim:
            raise ChartError(f"线性系数长度 {len(self.covector)} 与维数 {chart.dim} 不符")
        if self.compact_part is not None and self.compact_part.chart != chart:
            raise ChartError("紧支撑部分的坐标卡不一致")
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "covector", tuple(float(a) for a in self.covector))
        if self.compact_part is not None:
            self._check_support()

    def _check_support(self) -> None:
        """在支撑半径外的随机点上检查紧支撑部分严格为 0"""
        rng = np.random.default_rng(DEFAULT_SEED)
        directions = rng.normal(size=(SUPPORT_SAMPLES, self.chart.dim))
        directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
        radii = self.support_radius * rng.uniform(1.0 + 1e-9, 3.0, size=(SUPPORT_SAMPLES, 1))
        values = np.asarray(self.compact_part(directions * radii), dtype=float)
        worst = float(np.max(np.abs(values)))
        if worst != 0.0:
            raise FieldError(
                f"[{self.compact_part.label or 'H'}] 在支撑半径 {self.support_radius} 外不为 0（最大 {worst:.3e}）"
            )

    @property
    def is_affine(self) -> bool:
        """紧支撑部分为 0"""
        part = self.compact_part
        return part is None or (part.expr is not None and sp.simplify(part.expr) == 0)

    def affine_expr(self) -> sp.Expr:
        syms = self.chart.symbols()
        return sum((sp.Float(a) * x for a, x in zip(self.covector, syms) if a), sp.Float(self.constant))

    def as_field(self, label: str = "") -> HamiltonianField:
        """H + u 作为闭式场"""
        affine = HamiltonianField.from_expr(self.chart, self.affine_expr(), label=label or "u")
        if self.compact_part is None:
            return affine
        return replace(self.compact_part + affine, label=label or "H+u")

    def affine_velocity(self) -> np.ndarray:
        """仿射部分的常向量场 Π·a"""
        matrix = self.chart.poisson_matrix(np.zeros(self.chart.dim))
        return matrix @ np.asarray(self.covector)

    def _affine_flow(self, points: np.ndarray, t: float) -> np.ndarray:
        return points + t * self.affine_velocity()

    def _strang(self, points: np.ndarray, t: float, steps: int, control: StepControl) -> np.ndarray:
        dt = t / steps
        x = points
        for _ in range(steps):
            x = self._affine_flow(x, dt / 2)
            x = flow_points(self.compact_part, x, dt, control).final
            x = self._affine_flow(x, dt / 2)
        return x

    def flow(
        self,
        points: np.ndarray,
        t: float,
        control: StepControl | None = None,
        method: str = "splitting",
    ) -> np.ndarray:
        """φ_{H+u}^t

        Args:
            points: 起点 (..., 2n)
            t: 时间
            control: 步长控制（splitting 时 dt_init 为分裂步长）
            method: splitting（Strang 分裂，缺省）或 direct（整体自适应积分）
        """
        points = np.asarray(points, dtype=float)
        if self.is_affine:
            return self._affine_flow(points, t)
        control = control or StepControl()
        if method == "splitting":
            return self._strang(points, t, max(1, math.ceil(abs(t) / control.dt_init)), control)
        if method == "direct":
            return flow_points(self.as_field(), points, t, control).final
        raise ValueError(f"未知的仿射流方法: {method}（可选: {', '.join(AFFINE_FLOW_METHODS)}）")

    def flow_with_error(
        self, points: np.ndarray, t: float, control: StepControl | None = None
    ) -> tuple[np.ndarray, float]:
        """Strang 分裂流及步长减半误差估计 max|x_h − x_{h/2}|"""
        control = control or StepControl()
        points = np.asarray(points, dtype=float)
        if self.is_affine:
            return self._affine_flow(points, t), 0.0
        steps = max(1, math.ceil(abs(t) / control.dt_init))
        coarse = self._strang(points, t, steps, control)
        fine = self._strang(points, t, 2 * steps, control)
        error = float(np.max(np.abs(coarse - fine)))
        logger.debug(f"[affine] 分裂 {steps} 步，减半误差 {error:.3e}")
        return fine, error


def compact_bump(chart: Chart, center: tuple[float, ...], radius: float, amplitude: float = 1.0) -> HamiltonianField:
    """以 center 为心、半径 radius 的鼓包哈密顿量"""
    syms = chart.symbols()
    u = sum((x - c) ** 2 for x, c in zip(syms, center)) / sp.Float(radius) ** 2
    return HamiltonianField.from_expr(chart, sp.Float(amplitude) * bump_expr(u), label=f"bump{tuple(center)}")


# ==================== 辛性判据 ====================


def _linear(matrix: list[list[float]], shift: tuple[float, float] = (0.0, 0.0)) -> MapFn:
    m = np.asarray(matrix, dtype=float)
    offset = np.asarray(shift, dtype=float)
    return lambda x: np.einsum("ij,...j->...i", m, x) + offset


def _twist(x: np.ndarray) -> np.ndarray:
    q, p = x[..., 0], x[..., 1]
    return np.stack([q + p**2, p], axis=-1)


def _bump_flow(x: np.ndarray) -> np.ndarray:
    chart = make_chart("cartesian", n=1)
    H = compact_bump(chart, (0.0, 0.0), 1.0)
    return flow_points(H, x, 1.0, StepControl().tighter(100.0)).final


NAMED_MAPS: dict[str, MapFn] = {
    "identity": lambda x: np.array(x, dtype=float),
    "shear": _linear([[1.0, 1.0], [0.0, 1.0]]),
    "scaling": _linear([[2.0, 0.0], [0.0, 2.0]]),
    "translation": _linear([[1.0, 0.0], [0.0, 1.0]], (1.0, 0.5)),
    "twist": _twist,
    "bump_flow": _bump_flow,
}


def named_map(name: str) -> MapFn:
    """(q,p) 平面上的命名映射

    Raises:
        ChartError: 未知映射名
    """
    try:
        return NAMED_MAPS[name]
    except KeyError:
        raise ChartError(f"未知映射: {name}（可选: {', '.join(NAMED_MAPS)}）") from None


def symplectic_check(
    map_fn: MapFn,
    grid: GridSpec,
    order: int = 4,
    name: str = "map",
) -> SymplecticReport:
    """坐标函数括号判据：{fᵢ,gⱼ} = δᵢⱼ，{fᵢ,fⱼ} = {gᵢ,gⱼ} = 0

    像的各分量在网格上采样后以 order 阶差分求括号；矩阵元为
    ‖{Φₐ,Φ_b} − Πₐ_b‖。Jacobian 行列式在某点接近 0 时给出警告。
    """
    if grid.ndim % 2:
        raise ChartError(f"网格维数 {grid.ndim} 不是偶数")
    chart = make_chart("cartesian", n=grid.ndim // 2)
    grid.check_chart(chart)
    images = np.asarray(map_fn(grid.points()), dtype=float)
    if images.shape != grid.shape + (grid.ndim,):
        raise FieldError(f"[{name}] 映射输出形状 {images.shape} 不符")
    components = [GridField(chart, grid, images[..., a]) for a in range(grid.ndim)]

    jacobian = np.stack(
        [np.stack([partial_derivative(c, j, order).samples for j in range(grid.ndim)], axis=-1) for c in components],
        axis=-2,
    )
    min_det = float(np.min(np.abs(np.linalg.det(jacobian))))
    if min_det < DEGENERATE_JACOBIAN_TOL:
        message = f"[{name}] Jacobian 行列式接近 0（min |det| = {min_det:.3e}）"
        logger.warning(message)
        warnings.warn(message, DegenerateJacobianWarning, stacklevel=2)

    target = chart.poisson_matrix(np.zeros(grid.ndim))
    matrix = [
        [
            c0_norm(poisson_bracket(components[a], components[b], mode="fd", order=order) - float(target[a, b]))
            for b in range(grid.ndim)
        ]
        for a in range(grid.ndim)
    ]
    residual = max(max(row) for row in matrix)
    logger.info(f"[sympcheck {name}] 辛性残差 {residual:.3e}")
    return SymplecticReport(name, matrix, residual, min_det)


# ==================== 交换子流 ====================


def lemma9_combination(
    H: AffineHamiltonian, K: AffineHamiltonian, G: AffineHamiltonian, grid: GridSpec
) -> float:
    """‖{H+u, K+v} − (G+w)‖ 在网格上的值"""
    bracket = bracket_hamiltonian(H.as_field("H"), K.as_field("K"))
    return c0_norm(sample_field(H.chart, grid, bracket) - sample_field(H.chart, grid, G.as_field("G")))


def _commutator_endpoints(
    H: AffineHamiltonian,
    K: AffineHamiltonian,
    s: float,
    t: float,
    points: np.ndarray,
    control: StepControl,
    lead: AffineHamiltonian | None,
    method: str,
) -> tuple[np.ndarray, float | None]:
    """ψ = φ_H^t φ_K^s φ_H^{−t} φ_K^{−s}；给出 lead 时再左乘 φ_lead^{−ts}

    splitting 时逐段累计步长减半误差，direct 时误差为 None。
    """
    legs = [(K, -s), (H, -t), (K, s), (H, t)]
    if lead is not None and t * s:
        legs.append((lead, -t * s))
    x = points
    error = 0.0
    for field, time in legs:
        if not time:
            continue
        if method == "splitting":
            x, leg_error = field.flow_with_error(x, time, control)
            error += leg_error
        else:
            x = field.flow(x, time, control, method=method)
    return x, (error if method == "splitting" else None)


def affine_commutator_check(
    H: AffineHamiltonian,
    K: AffineHamiltonian,
    s: float,
    t: float,
    grid: GridSpec,
    control: StepControl | None = None,
    lead: AffineHamiltonian | None = None,
    tol: float = COMMUTATOR_TOL,
    method: str = "splitting",
) -> CommutatorReport:
    """比较交换子流终点与其生成函数（σ 积分式）之流的终点

    Args:
        H: 仿射于无穷远的 H + u
        K: 仿射于无穷远的 K + v
        s: K 的流时间
        t: H 的流时间
        grid: 起点网格（笛卡尔）
        control: 步长控制（splitting 时 dt_init 为分裂步长）
        lead: 给出时以 φ_{G+w}^{−ts} 左乘，并报告 {H+u,K+v} − (G+w)
        tol: 通过判据；splitting 时放宽为 tol + 分裂误差估计
        method: 四段仿射流的计算方式，splitting（缺省）或 direct

    Raises:
        FlowEscapeError: 轨道逃逸
        ValueError: 未知方法
    """
    if method not in AFFINE_FLOW_METHODS:
        raise ValueError(f"未知的仿射流方法: {method}（可选: {', '.join(AFFINE_FLOW_METHODS)}）")
    control = control or StepControl()
    grid.check_chart(H.chart)
    points = grid.points().reshape(-1, grid.ndim)
    h_field, k_field = H.as_field("H"), K.as_field("K")
    lead_field = lead.as_field("G") if lead is not None else None

    endpoints, split_error = _commutator_endpoints(H, K, s, t, points, control, lead, method)
    generator = commutator_generator(h_field, k_field, s, control, lead=lead_field)
    generated = generated_flow(generator, points, t, StepControl(dt_init=control.dt_init, tol=GENERATOR_STEP_TOL))

    discrepancy = float(np.max(np.abs(endpoints - generated)))
    identity_defect = float(np.max(np.abs(endpoints - points)))
    residual = lemma9_combination(H, K, lead, grid) if lead is not None else None
    allowed = tol + (split_error or 0.0)
    logger.info(
        f"[commutator s={s} t={t} {method}] 终点偏差 {discrepancy:.3e}，离恒等 {identity_defect:.3e}"
        + (f"，分裂误差 {split_error:.3e}" if split_error is not None else "")
    )
    return CommutatorReport(
        s, t, discrepancy, identity_defect, residual, discrepancy <= allowed, method=method, split_error=split_error
    )
