"""哈密顿流：辛梯度、轨道、拉回、共轭流、交换子流与线性增长证书"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import sympy as sp
from scipy import integrate

from ..models.chart import Chart
from ..models.config import StepControl
from ..models.grid import GridField, GridSpec
from ..utils import logger
from ..utils.constants import (
    ENERGY_DRIFT_FACTOR,
    GROWTH_ANGLES,
    GROWTH_RADII,
    PULLBACK_FD_STEP,
    SEPARABILITY_TOL,
    SIMPSON_PANELS,
    SUPERLINEAR_RATIO,
)
from ..utils.errors import ChartError, FieldError, GrowthFitError
from .fields import HamiltonianField
from .integrators import IntegrationResult, leapfrog, rkf45

VectorField = Callable[[np.ndarray], np.ndarray]

# ==================== 辛梯度 ====================


def symplectic_gradient(H: HamiltonianField, point: np.ndarray) -> np.ndarray:
    """X_H = Π·∇H（dH = ι_{X_H}ω）

    Args:
        H: 哈密顿函数
        point: 点或一批点 (..., dim)

    Raises:
        FieldError: 梯度非有限
        ChartError: 极点处求值
    """
    point = np.asarray(point, dtype=float)
    grad = H.grad(point)
    if not np.all(np.isfinite(grad)):
        raise FieldError(f"[{H.label or 'H'}] 梯度出现非有限值")
    return np.einsum("...ij,...j->...i", H.chart.poisson_matrix(point), grad)


def _is_separable(H: HamiltonianField) -> bool:
    chart = H.chart
    n = chart.param("n", 1)
    if H.expr is not None:
        syms = chart.symbols()
        return all(
            sp.simplify(sp.diff(H.expr, syms[i], syms[n + j])) == 0 for i in range(n) for j in range(n)
        )
    rng = np.random.default_rng(0)
    box = np.array(chart.sample_box())
    sample_points = rng.uniform(box[:, 0], box[:, 1], size=(32, chart.dim))
    mixed = H.hessian(sample_points)[:, :n, n:]
    return bool(np.max(np.abs(mixed)) <= SEPARABILITY_TOL * max(1.0, float(np.max(np.abs(H.hessian(sample_points))))))


# ==================== 批量积分 ====================


def integrate_vector_field(
    chart: Chart,
    rhs: Callable[[float, np.ndarray], np.ndarray],
    points: np.ndarray,
    t0: float,
    t1: float,
    control: StepControl,
    t_eval: np.ndarray | None = None,
) -> IntegrationResult:
    """积分（可时变的）向量场，逃逸区域由坐标卡给出"""
    return rkf45(rhs, points, t0, t1, control, in_domain=chart.in_domain, t_eval=t_eval)


def flow_points(
    H: HamiltonianField,
    points: np.ndarray,
    t: float,
    control: StepControl | None = None,
    t_eval: np.ndarray | None = None,
    dense: bool = False,
) -> IntegrationResult:
    """一批起点共享步长推进 φ_H^t

    Raises:
        FlowEscapeError: 轨道离开逃逸区域
        StepUnderflowError: 步长下溢
        FieldError: splitting 方法用于不可分离的哈密顿量
    """
    control = control or StepControl()
    points = np.asarray(points, dtype=float)
    if control.method == "splitting":
        if H.chart.kind != "cartesian":
            raise ChartError("splitting 积分只适用于笛卡尔坐标卡")
        if not _is_separable(H):
            raise FieldError(f"[{H.label or 'H'}] 不是可分离哈密顿量，不能使用 splitting")
        return leapfrog(H.grad, points, t, H.chart.param("n", 1), control.dt_init, H.chart.in_domain)
    return rkf45(
        lambda _t, y: symplectic_gradient(H, y),
        points,
        0.0,
        t,
        control,
        in_domain=H.chart.in_domain,
        t_eval=t_eval,
        dense=dense,
    )


# ==================== 轨道与流映射 ====================


@dataclass
class Trajectory:
    """离散轨道

    Attributes:
        hamiltonian: 哈密顿函数
        start: 起点
        times: 单调时刻
        states: 对应状态
        step_control: 步长控制
    """

    hamiltonian: HamiltonianField
    start: np.ndarray
    times: np.ndarray
    states: np.ndarray
    step_control: StepControl

    def __post_init__(self) -> None:
        if len(self.times) != len(self.states):
            raise FieldError("times 与 states 长度不一致")
        if not np.array_equal(self.states[0], self.start):
            raise FieldError("轨道首个状态必须等于起点")
        if not np.all(np.isfinite(self.states)):
            raise FieldError("轨道含有非有限状态")

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]

    def energies(self) -> np.ndarray:
        return self.hamiltonian(self.states)

    @property
    def energy_drift(self) -> float:
        values = self.energies()
        return float(np.max(np.abs(values - values[0])))

    def csv_header(self) -> list[str]:
        return ["t", *self.hamiltonian.chart.coordinate_names, "H"]

    def csv_rows(self) -> np.ndarray:
        """每个时刻一行：t, 坐标..., H"""
        return np.column_stack([self.times, self.states, self.energies()])


@dataclass
class FlowMap:
    """网格上的时间 t 流映射

    Attributes:
        hamiltonian: 哈密顿函数
        t: 时间
        grid: 起点网格
        endpoints: 终点，形状 (*grid.shape, dim)
    """

    hamiltonian: HamiltonianField
    t: float
    grid: GridSpec
    endpoints: np.ndarray

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.endpoints)):
            raise FieldError("流映射终点含有非有限值")

    def displacement(self) -> float:
        """max |φ(x) − x|"""
        return float(np.max(np.abs(self.endpoints - self.grid.points())))

    def csv_header(self) -> list[str]:
        names = self.hamiltonian.chart.coordinate_names
        return [*names, *(f"{name}_t" for name in names)]

    def csv_rows(self) -> np.ndarray:
        dim = self.grid.ndim
        return np.column_stack([self.grid.points().reshape(-1, dim), self.endpoints.reshape(-1, dim)])


def advance_flow(
    H: HamiltonianField, start: np.ndarray, t: float, control: StepControl | None = None
) -> Trajectory:
    """单起点轨道（记录每个接受步）

    能量漂移超过 tol·(1+|H(start)|)·max(1,|t|) 的 100 倍时记录警告。
    """
    control = control or StepControl()
    start = np.asarray(start, dtype=float)
    result = flow_points(H, start, t, control, dense=True)
    trajectory = Trajectory(H, start, result.times, result.states, control)
    h0 = float(H(start))
    allowed = ENERGY_DRIFT_FACTOR * control.tol * (1 + abs(h0)) * max(1.0, abs(t))
    drift = trajectory.energy_drift
    if drift > allowed:
        logger.warning(f"[{H.label or 'H'}] 能量漂移 {drift:.3e} 超过 {allowed:.3e}（t={t}）")
    return trajectory


def flow_map(
    H: HamiltonianField, t: float, grid: GridSpec, control: StepControl | None = None
) -> FlowMap:
    """网格上的流映射；t=0 时严格为恒等"""
    grid.check_chart(H.chart)
    points = grid.points()
    if t == 0:
        return FlowMap(H, 0.0, grid, points.copy())
    return FlowMap(H, t, grid, flow_points(H, points, t, control).final)


def pullback(
    F: HamiltonianField, H: HamiltonianField, t: float, grid: GridSpec, control: StepControl | None = None
) -> GridField:
    """F∘φ_H^t 在网格上的采样

    Raises:
        FlowEscapeError: 任一网格点的轨道逃逸
    """
    endpoints = flow_map(H, t, grid, control).endpoints
    return GridField(F.chart, grid, np.asarray(F(endpoints), dtype=float))


def pullback_hamiltonian(
    f: HamiltonianField, g: HamiltonianField, s: float, control: StepControl | None = None
) -> HamiltonianField:
    """f∘φ_g^s 作为闭式场（仅有值，梯度以步长 1e-4 差分）"""

    def value(points: np.ndarray) -> np.ndarray:
        return f(flow_points(g, points, s, control).final)

    return HamiltonianField(f.chart, value, label=f"{f.label}∘φ", h_fd=PULLBACK_FD_STEP)


def conjugated_flow(
    f: HamiltonianField,
    g: HamiltonianField,
    s: float,
    t: float,
    start: np.ndarray,
    control: StepControl | None = None,
) -> np.ndarray:
    """φ_g^{−s}∘φ_f^t∘φ_g^s(start)，即 f∘φ_g^s 的时间 t 流"""
    x = np.asarray(start, dtype=float)
    x = flow_points(g, x, s, control).final
    x = flow_points(f, x, t, control).final
    return flow_points(g, x, -s, control).final


def commutator_flow(
    H: HamiltonianField,
    K: HamiltonianField,
    s: float,
    t: float,
    start: np.ndarray,
    control: StepControl | None = None,
    lead: HamiltonianField | None = None,
) -> np.ndarray:
    """ψ = φ_H^t φ_K^s φ_H^{−t} φ_K^{−s}(start)；给出 lead 时再左乘 φ_lead^{−ts}"""
    x = np.asarray(start, dtype=float)
    for field, time in ((K, -s), (H, -t), (K, s), (H, t)):
        if time:
            x = flow_points(field, x, time, control).final
    if lead is not None and t * s:
        x = flow_points(lead, x, -t * s, control).final
    return x


# ==================== 交换子生成函数 ====================


class CommutatorGenerator:
    """交换子流 τ ↦ φ_H^τ φ_K^s φ_H^{−τ} φ_K^{−s} 的时变生成函数

    G_τ(x) = ∫₀ˢ {H,K}(φ_K^{−σ} φ_H^{−τ} x) dσ，σ 积分用 Simpson 公式。
    给出 lead 时生成 φ_lead^{−τs}∘ψ_τ，其生成函数为 −s·lead + G_τ∘φ_lead^{τs}。
    """

    def __init__(
        self,
        H: HamiltonianField,
        K: HamiltonianField,
        s: float,
        control: StepControl | None = None,
        lead: HamiltonianField | None = None,
        panels: int = SIMPSON_PANELS,
    ):
        from .geometry import bracket_hamiltonian

        if H.chart != K.chart:
            raise ChartError("H 与 K 的坐标卡不一致")
        self.chart = H.chart
        self.H = H
        self.K = K
        self.s = float(s)
        self.lead = lead
        self.control = control or StepControl()
        self.panels = panels
        self.bracket = bracket_hamiltonian(H, K, label="{H,K}")
        self.h_fd = PULLBACK_FD_STEP

    def _core(self, tau: float, points: np.ndarray) -> np.ndarray:
        if self.s == 0:
            return np.zeros(points.shape[:-1])
        y = flow_points(self.H, points, -tau, self.control).final if tau else points
        sigmas = np.linspace(0.0, self.s, self.panels + 1)
        result = flow_points(self.K, y, -self.s, self.control, t_eval=-sigmas[1:-1])
        # result.states 依次对应 σ = 0, σ₁, ..., s
        values = self.bracket(result.states)
        return integrate.simpson(values, x=sigmas, axis=0)

    def value(self, tau: float, points: np.ndarray) -> np.ndarray:
        """G_τ 在一批点上的值"""
        points = np.asarray(points, dtype=float)
        if self.lead is None:
            return self._core(tau, points)
        shifted = flow_points(self.lead, points, tau * self.s, self.control).final if tau else points
        return -self.s * self.lead(points) + self._core(tau, shifted)

    def closed_form(self, tau: float, points: np.ndarray) -> np.ndarray:
        """不做 σ 积分的等价式 H(y) − H(φ_K^{−s} y)，y = φ_H^{−τ} x（仅无 lead 时）"""
        points = np.asarray(points, dtype=float)
        y = flow_points(self.H, points, -tau, self.control).final if tau else points
        return self.H(y) - self.H(flow_points(self.K, y, -self.s, self.control).final)

    def vector_field(self, tau: float, points: np.ndarray) -> np.ndarray:
        """X_{G_τ}，梯度由一次批量中心差分给出"""
        points = np.asarray(points, dtype=float)
        dim = self.chart.dim
        offsets = self.h_fd * np.eye(dim)
        shifted = np.stack([points + o for o in offsets] + [points - o for o in offsets])
        values = self.value(tau, shifted)
        grad = np.stack([(values[i] - values[dim + i]) / (2 * self.h_fd) for i in range(dim)], axis=-1)
        return np.einsum("...ij,...j->...i", self.chart.poisson_matrix(points), grad)


def commutator_generator(
    H: HamiltonianField,
    K: HamiltonianField,
    s: float,
    control: StepControl | None = None,
    lead: HamiltonianField | None = None,
) -> CommutatorGenerator:
    return CommutatorGenerator(H, K, s, control, lead)


def generated_flow(
    generator: CommutatorGenerator, points: np.ndarray, t: float, control: StepControl | None = None
) -> np.ndarray:
    """积分时变生成函数 G_τ，τ ∈ [0, t]"""
    control = control or generator.control
    result = integrate_vector_field(
        generator.chart, generator.vector_field, np.asarray(points, dtype=float), 0.0, t, control
    )
    return result.final


# ==================== 线性增长证书 ====================


class GrowthBound(NamedTuple):
    """‖X‖ ≤ a·r + b"""

    a: float
    b: float


def _slope(radii: np.ndarray, envelope: np.ndarray) -> float:
    return float(np.polyfit(radii, envelope, 1)[0])


def linear_growth_bound(
    H: HamiltonianField | VectorField,
    r_min: float,
    r_max: float,
    chart: Chart | None = None,
    radii: int = GROWTH_RADII,
    angles: int = GROWTH_ANGLES,
) -> GrowthBound:
    """拟合向量场范数的线性增长界（Gronwall 完备性证书）

    Args:
        H: 哈密顿函数（取其辛梯度），或显式向量场 points -> 分量
        r_min: 环形区域内径
        r_max: 环形区域外径
        chart: H 为显式向量场时必须给出
        radii: 径向采样数
        angles: 角向采样数

    Returns:
        (a, b)，在所有样本上 ‖X‖ ≤ a·r + b

    Raises:
        GrowthFitError: 上半区斜率明显大于下半区（超线性增长，不给证书）
    """
    if isinstance(H, HamiltonianField):
        chart = H.chart
        field: VectorField = lambda p: symplectic_gradient(H, p)  # noqa: E731
    else:
        if chart is None:
            raise ChartError("显式向量场需要给出坐标卡")
        field = H
    rs = np.linspace(r_min, r_max, radii)
    theta = np.linspace(0.0, 2 * np.pi, angles, endpoint=False)
    envelope = np.array(
        [float(np.max(np.linalg.norm(field(chart.ring_points(r, theta)), axis=-1))) for r in rs]
    )
    if not np.all(np.isfinite(envelope)):
        raise FieldError("向量场范数出现非有限值")

    half = radii // 2
    lower = _slope(rs[: half + 1], envelope[: half + 1])
    upper = _slope(rs[half:], envelope[half:])
    if upper > SUPERLINEAR_RATIO * max(lower, 0.0) + 1e-12 and upper > 1e-9:
        raise GrowthFitError(
            f"检测到超线性增长: 外半区斜率 {upper:.4g}，内半区斜率 {lower:.4g}，不给出线性增长证书"
        )
    a = max(upper, 0.0)
    b = max(float(np.max(envelope - a * rs)), 0.0)
    logger.debug(f"[growth] r∈[{r_min}, {r_max}] 证书 a={a:.6g}, b={b:.6g}")
    return GrowthBound(a, b)
