"""反例画廊：四个带 n 参数的闭式伪表示"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from typing import Any

import numpy as np
import sympy as sp

from ..core.fields import HamiltonianField
from ..core.lie_algebra import AlgebraElement, NormedLieAlgebra, builtin
from ..core.oracles import cylinder_kappa
from ..core.pseudo_rep import PseudoRepresentation
from ..models.chart import Chart, make_chart
from ..models.grid import GridSpec, bump_expr
from ..utils.constants import (
    DEFAULT_CHI_RADIUS,
    DEFAULT_N_SET,
    DEFAULT_POLAR_RMIN,
    GROWTH_A_MAX,
    GROWTH_B_MAX,
)
from ..utils.errors import ChartError

GALLERY_NAMES = (
    "remark2_cartesian",
    "polterovich_polar",
    "cylinder_heisenberg",
    "symplectization_transverse",
)

# sum 范数下 ‖Bₙ‖ 等于基元对亏量的最大值
GALLERY_NORM = "sum"

# 柱面例子中文献给出的常数，只记录不断言
CYLINDER_CLAIMED = {
    "bracket": "{rho_n(f), rho_n(g)} = 2",
    "series": "sum_j rho(ad(g)^j f) s^j / j! = 2s",
    "rho_h": "rho_n(h) = 2 chi(x)^2",
    "limit_h": "rho(h) = 1",
}


@dataclass
class GalleryEntry:
    """画廊条目

    Attributes:
        name: 条目名
        chart: 坐标卡
        algebra: 赋范李代数
        build_images: n -> 各基元的闭式像
        limit_images: 声称的 C⁰ 极限
        grid: 范数/亏量网格
        flow_grid: n -> 拉回网格，表示网格的安全子盒：每个轴都是表示网格对应轴的非退化子区间，轨道不碰奇点
        pair: 拉回残差实验使用的 (f, g) 基元名
        expected: 预期行为 -> 来源标签
        expected_verdict: 极限检查的预期判定
        noncompact_limit: 极限像是否非紧支撑
        chi_radius: χ 鼓包半径（无 χ 时为 None）
        constants: 条目的推导常数（κ 等）
        claimed: 文献声明但不断言的常数
    """

    name: str
    chart: Chart
    algebra: NormedLieAlgebra
    build_images: Callable[[int], list[HamiltonianField]]
    limit_images: list[HamiltonianField]
    grid: GridSpec
    flow_grid: Callable[[int], GridSpec]
    pair: tuple[str, str]
    expected: dict[str, str]
    expected_verdict: str
    noncompact_limit: bool = False
    chi_radius: float | None = None
    constants: dict[str, float] = field(default_factory=dict)
    claimed: dict[str, str] = field(default_factory=dict)

    def representation(self, n_set: tuple[int, ...] = DEFAULT_N_SET, grid: GridSpec | None = None) -> PseudoRepresentation:
        return PseudoRepresentation(
            algebra=self.algebra,
            chart=self.chart,
            grid=grid or self.grid,
            build_images=self.build_images,
            n_set=tuple(n_set),
            limit_images=self.limit_images,
            name=self.name,
            flow_grid=self.flow_grid,
            noncompact_limit=self.noncompact_limit,
        )

    def basis(self, label: str) -> AlgebraElement:
        return self.algebra.basis(label)

    def lemma_pair(self) -> tuple[AlgebraElement, AlgebraElement]:
        return self.basis(self.pair[0]), self.basis(self.pair[1])

    def images(self, n: int) -> dict[str, HamiltonianField]:
        return dict(zip(self.algebra.basis_labels, self.build_images(n)))

    def to_dict(self) -> dict[str, Any]:
        """条目描述（写入判定 JSON）"""
        return {
            "name": self.name,
            "chart": self.chart.to_dict(),
            "algebra": self.algebra.to_dict(),
            "grid": self.grid.to_dict(),
            "pair": list(self.pair),
            "expected": dict(self.expected),
            "expected_verdict": self.expected_verdict,
            "chi_radius": self.chi_radius,
            "constants": dict(self.constants),
            "claimed": dict(self.claimed),
        }


def chi_expr(symbols: tuple[sp.Symbol, ...], radius: float) -> sp.Expr:
    """χ(|x|²/R²) 鼓包（中心 0）"""
    u = sum((x**2 for x in symbols), sp.Integer(0)) / sp.nsimplify(radius) ** 2
    return bump_expr(u)


def _theta_patch(n: int) -> tuple[float, float]:
    """nθ ∈ [π/4, 3π/4]：该区域上 G_n 的流是 (u cos nθ, u sin nθ) 平面内的平移，不会到达 u = 0

    G_n ∝ u sin nθ 沿自身的流守恒，扇形内 u sin nθ ≥ u/√2，因此径向轴可以取满表示网格的范围。
    """
    return np.pi / (4 * n), 3 * np.pi / (4 * n)


def _const(chart: Chart, value: float | sp.Expr) -> HamiltonianField:
    return HamiltonianField.from_expr(chart, sp.nsimplify(value))


# ==================== 条目 ====================


def _remark2(chi_radius: float) -> GalleryEntry:
    chart = make_chart("cartesian", n=1)
    q, p = chart.symbols()
    chi = chi_expr((p,), chi_radius)

    def build(n: int) -> list[HamiltonianField]:
        root = sp.sqrt(n)
        return [
            HamiltonianField.from_expr(chart, chi * sp.cos(n * q) / root, f"F{n}"),
            HamiltonianField.from_expr(chart, chi * sp.sin(n * q) / root, f"G{n}"),
        ]

    return GalleryEntry(
        name="remark2_cartesian",
        chart=chart,
        algebra=builtin("abelian(2)", norm=GALLERY_NORM),
        build_images=build,
        limit_images=[_const(chart, 0), _const(chart, 0)],
        grid=GridSpec.of((0.0, 2 * np.pi, 256, True), (-1.5, 1.5, 257)),
        flow_grid=lambda n: GridSpec.of((0.0, 2 * np.pi, 12, True), (-1.5, 1.5, 13)),
        pair=("e1", "e2"),
        expected={
            "defect": "constant in n, equal to max|chi chi'| (symbolic oracle)",
            "norm_decay": "||F_n|| = max(chi)/sqrt(n) (closed form)",
            "bracket": "{F_n, G_n} = -chi(p) chi'(p) (symbolic oracle)",
        },
        expected_verdict="not_a_pseudo_representation",
        chi_radius=chi_radius,
    )


def _polar() -> GalleryEntry:
    chart = make_chart("polar_r2")
    r, theta = chart.symbols()

    def build(n: int) -> list[HamiltonianField]:
        root = sp.sqrt(n)
        return [
            HamiltonianField.from_expr(chart, r * sp.cos(n * theta) / root, f"F{n}"),
            HamiltonianField.from_expr(chart, r * sp.sin(n * theta) / root, f"G{n}"),
            _const(chart, 1),
        ]

    def flow_grid(n: int) -> GridSpec:
        lo, hi = _theta_patch(n)
        return GridSpec.of((DEFAULT_POLAR_RMIN, 2.0, 16), (lo, hi, 8))

    return GalleryEntry(
        name="polterovich_polar",
        chart=chart,
        algebra=builtin("heisenberg3", norm=GALLERY_NORM),
        build_images=build,
        limit_images=[_const(chart, 0), _const(chart, 0), _const(chart, 1)],
        grid=GridSpec.of((DEFAULT_POLAR_RMIN, 2.0, 256), (0.0, 2 * np.pi, 512, True)),
        flow_grid=flow_grid,
        pair=("f", "g"),
        expected={
            "bracket": "{F_n, G_n} = 1 (stated)",
            "defect": "vanishes for every n (stated)",
            "norm_decay": "||F_n|| on r <= 1 is 1/sqrt(n) (closed form)",
        },
        expected_verdict="noncompact_caveat",
        noncompact_limit=True,
    )


def _cylinder(h_constant: float | None) -> GalleryEntry:
    chart = make_chart("cylinder_s1")
    s, theta = chart.symbols()
    kappa = cylinder_kappa()["value"]
    h_value = kappa if h_constant is None else h_constant

    def build(n: int) -> list[HamiltonianField]:
        root = sp.sqrt(n)
        return [
            HamiltonianField.from_expr(chart, sp.exp(s / 2) * sp.cos(n * theta) / root, f"f{n}"),
            HamiltonianField.from_expr(chart, sp.exp(s / 2) * sp.sin(n * theta) / root, f"g{n}"),
            _const(chart, h_value),
        ]

    def flow_grid(n: int) -> GridSpec:
        lo, hi = _theta_patch(n)
        return GridSpec.of((-3.0, 3.0, 16), (lo, hi, 8))

    return GalleryEntry(
        name="cylinder_heisenberg",
        chart=chart,
        algebra=builtin("heisenberg3", norm=GALLERY_NORM),
        build_images=build,
        limit_images=[_const(chart, 0), _const(chart, 0), _const(chart, h_value)],
        grid=GridSpec.of((-3.0, 3.0, 129), (0.0, 2 * np.pi, 512, True)),
        flow_grid=flow_grid,
        pair=("f", "g"),
        expected={
            "bracket": "{rho_n(f), rho_n(g)} = kappa, grid constant (symbolic oracle)",
            "defect": "0 when rho_n(h) = kappa, |kappa - 1| when rho_n(h) = 1 (derived)",
            "norm_decay": "||rho_n(f)|| on s in [-3, 3] is e^1.5/sqrt(n) (closed form)",
        },
        expected_verdict="noncompact_caveat",
        noncompact_limit=True,
        constants={"kappa": kappa, "h_constant": h_value},
        claimed=dict(CYLINDER_CLAIMED),
    )


def _symplectization(chi_radius: float, h_constant: float | None) -> GalleryEntry:
    chart = make_chart("symplectization_s1xU", transverse_dim=2)
    s, theta, x1, x2 = chart.symbols()
    chi = chi_expr((x1, x2), chi_radius)
    kappa = cylinder_kappa()["value"]
    h_value = kappa if h_constant is None else h_constant

    def build(n: int) -> list[HamiltonianField]:
        root = sp.sqrt(n)
        return [
            HamiltonianField.from_expr(chart, chi * sp.exp(s / 2) * sp.cos(n * theta) / root, f"f{n}"),
            HamiltonianField.from_expr(chart, chi * sp.exp(s / 2) * sp.sin(n * theta) / root, f"g{n}"),
            HamiltonianField.from_expr(chart, sp.nsimplify(h_value) * chi**2, f"h{n}"),
        ]

    def flow_grid(n: int) -> GridSpec:
        lo, hi = _theta_patch(n)
        half = 0.5 * chi_radius
        return GridSpec.of((-1.0, 1.0, 4), (lo, hi, 4), (-half, half, 4), (-half, half, 4))

    span = 1.2 * chi_radius
    return GalleryEntry(
        name="symplectization_transverse",
        chart=chart,
        algebra=builtin("heisenberg3", norm=GALLERY_NORM),
        build_images=build,
        limit_images=[
            _const(chart, 0),
            _const(chart, 0),
            HamiltonianField.from_expr(chart, sp.nsimplify(h_value) * chi**2, "h"),
        ],
        grid=GridSpec.of((-1.0, 1.0, 9), (0.0, 2 * np.pi, 128, True), (-span, span, 17), (-span, span, 17)),
        flow_grid=flow_grid,
        pair=("f", "g"),
        expected={
            "bracket": "{rho_n(f), rho_n(g)} = kappa chi(x)^2, transverse part cancels (derived)",
            "support": "rho_n(f) vanishes for |x| >= chi radius (closed form)",
            "defect": "0 when rho_n(h) = kappa chi^2 (derived)",
        },
        expected_verdict="naive_limit_counterexample",
        chi_radius=chi_radius,
        constants={"kappa": kappa, "h_constant": h_value},
        claimed=dict(CYLINDER_CLAIMED),
    )


def gallery(name: str, chi_radius: float = DEFAULT_CHI_RADIUS, h_constant: float | None = None) -> GalleryEntry:
    """按名称构造画廊条目

    Args:
        name: remark2_cartesian / polterovich_polar / cylinder_heisenberg / symplectization_transverse
        chi_radius: χ 鼓包半径
        h_constant: 柱面与辛化条目中 ρₙ(h) 的系数（缺省取符号计算得到的 κ）

    Raises:
        ChartError: 未知条目
    """
    if name == "remark2_cartesian":
        return _remark2(chi_radius)
    if name == "polterovich_polar":
        return _polar()
    if name == "cylinder_heisenberg":
        return _cylinder(h_constant)
    if name == "symplectization_transverse":
        return _symplectization(chi_radius, h_constant)
    raise ChartError(f"未知画廊条目: {name}（可选: {', '.join(GALLERY_NAMES)}）")


def polar_model_field(n: int) -> Callable[[np.ndarray], np.ndarray]:
    """极坐标下的模型向量场 (r√n sin nθ)∂θ + (cos nθ/√n)∂r，返回 (r 分量, θ 分量)"""
    root = np.sqrt(n)

    def field(points: np.ndarray) -> np.ndarray:
        r, theta = points[..., 0], points[..., 1]
        return np.stack([np.cos(n * theta) / root, r * root * np.sin(n * theta)], axis=-1)

    return field


def polar_growth_caps(n: int) -> tuple[float, float]:
    """模型向量场增长证书 (a, b) 的上限

    闭式界为 ‖X‖ ≤ √n·r + 1/√n；GROWTH_A_MAX/GROWTH_B_MAX 是 n=4 时的上限，
    其他 n 按 √(n/4) 与 √(4/n) 缩放。
    """
    scale = np.sqrt(n / 4)
    return float(GROWTH_A_MAX * scale), float(GROWTH_B_MAX / scale)
