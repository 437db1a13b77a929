"""伪表示：亏量、ad 级数、尾项界、拉回残差与极限检查"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from threading import RLock

import numpy as np
from scipy import special

from ..models.chart import Chart
from ..models.config import StepControl, Tolerances
from ..models.grid import GridField, GridSpec
from ..models.report import DefectReport, Lemma3Report, LimitReport
from ..utils import logger
from ..utils.constants import (
    BRACKET_SAFETY_FACTOR,
    DEFAULT_SEED,
    DEFECT_SAMPLE_PAIRS,
    MONOTONE_SLACK,
    SUPPORT_LEAK_RATIO,
)
from ..utils.errors import AlgebraError, ChartError, UnknownIndexError
from .fields import HamiltonianField
from .flows import pullback
from .geometry import boundary_max, bracket_hamiltonian, c0_norm, poisson_bracket, quadrature, sample_field
from .lie_algebra import (
    AlgebraElement,
    NormedLieAlgebra,
    ad_power,
    bracket,
    bracket_norm_constant,
    nilpotency_degree,
)

ImageBuilder = Callable[[int], Sequence[HamiltonianField]]

_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(eq=False)
class PseudoRepresentation:
    """n ↦ ρₙ：从李代数到哈密顿函数的线性映射族

    Attributes:
        algebra: 赋范李代数
        chart: 坐标卡
        grid: 计算范数与亏量的网格
        build_images: n -> 各基元的像（按基元顺序）
        n_set: 配置的 n 序列
        limit_images: 声称的 C⁰ 极限 ρ(eᵢ)
        name: 名称
        flow_grid: n -> 拉回计算使用的网格（缺省用 grid）
        noncompact_limit: 极限像是否为非紧支撑（如常数）
    """

    algebra: NormedLieAlgebra
    chart: Chart
    grid: GridSpec
    build_images: ImageBuilder
    n_set: tuple[int, ...]
    limit_images: Sequence[HamiltonianField] | None = None
    name: str = ""
    flow_grid: Callable[[int], GridSpec] | None = None
    noncompact_limit: bool = False
    _cache: dict[int, tuple[HamiltonianField, ...]] = field(default_factory=dict, repr=False)
    _samples: dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    _lock: RLock = field(default_factory=RLock, repr=False)

    def __post_init__(self) -> None:
        self.grid.check_chart(self.chart)
        if self.limit_images is not None and len(self.limit_images) != self.algebra.dim:
            raise AlgebraError("极限像的个数与代数维数不符")

    def images(self, n: int) -> tuple[HamiltonianField, ...]:
        """ρₙ(eᵢ)

        Raises:
            UnknownIndexError: n 不在 n 序列中
        """
        if n not in self.n_set:
            raise UnknownIndexError(f"n={n} 不在 {self.name} 的 n 序列 {self.n_set} 中")
        with self._lock:
            if n not in self._cache:
                images = tuple(self.build_images(n))
                if len(images) != self.algebra.dim:
                    raise AlgebraError(f"[{self.name} n={n}] 像的个数 {len(images)} 与代数维数不符")
                for image in images:
                    if image.chart != self.chart:
                        raise ChartError(f"[{self.name} n={n}] 像的坐标卡与表示不一致")
                self._cache[n] = images
            return self._cache[n]

    def image_samples(self, n: int) -> np.ndarray:
        """各基元像在网格上的采样，形状 (dim, *grid.shape)"""
        with self._lock:
            if n not in self._samples:
                self._samples[n] = np.stack(
                    [sample_field(self.chart, self.grid, image).samples for image in self.images(n)]
                )
            return self._samples[n]

    def flow_grid_for(self, n: int) -> GridSpec:
        """拉回计算的网格；必须落在表示网格内"""
        return self.flow_grid(n) if self.flow_grid is not None else self.grid

    def _check_element(self, x: AlgebraElement) -> None:
        if not (x.algebra is self.algebra or x.algebra.same_as(self.algebra)):
            raise AlgebraError(f"元素不属于 {self.name} 的李代数")


# ==================== 线性映射 ====================


def rho(rep: PseudoRepresentation, n: int, x: AlgebraElement) -> HamiltonianField:
    """ρₙ(x) = Σ xᵢ·ρₙ(eᵢ)"""
    rep._check_element(x)
    return HamiltonianField.linear_combination(x.coefficients, list(rep.images(n)), label=f"rho{n}({x.label()})")


def rho_limit(rep: PseudoRepresentation, x: AlgebraElement) -> HamiltonianField:
    """极限 ρ(x)"""
    rep._check_element(x)
    if rep.limit_images is None:
        raise AlgebraError(f"{rep.name} 没有给出极限像")
    return HamiltonianField.linear_combination(x.coefficients, list(rep.limit_images), label=f"rho({x.label()})")


# ==================== 亏量 ====================


def defect_field(
    rep: PseudoRepresentation, n: int, f: AlgebraElement, g: AlgebraElement, mode: str = "auto"
) -> GridField:
    """Bₙ(f,g) = {ρₙf, ρₙg} − ρₙ([f,g]) 在网格上的采样"""
    F = sample_field(rep.chart, rep.grid, rho(rep, n, f))
    G = sample_field(rep.chart, rep.grid, rho(rep, n, g))
    H = sample_field(rep.chart, rep.grid, rho(rep, n, bracket(f, g)))
    return poisson_bracket(F, G, mode=mode) - H


def defect_matrix(rep: PseudoRepresentation, n: int, mode: str = "auto") -> np.ndarray:
    """双线性亏量的基元矩阵 Dᵢⱼ = {ρₙeᵢ, ρₙeⱼ} − Σₖ cᵢⱼₖ ρₙeₖ，形状 (d, d, *grid.shape)"""
    d = rep.algebra.dim
    images = rep.images(n)
    samples = rep.image_samples(n)
    fields = [GridField(rep.chart, rep.grid, samples[i], images[i]) for i in range(d)]
    matrix = np.zeros((d, d) + rep.grid.shape)
    for i in range(d):
        for j in range(i + 1, d):
            value = poisson_bracket(fields[i], fields[j], mode=mode).samples
            matrix[i, j] = value
            matrix[j, i] = -value
    structure = rep.algebra.structure_constants
    matrix -= np.einsum("ijk,k...->ij...", structure, samples)
    return matrix


def _pair_defects(matrix: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """每对 (x, y) 的 max_grid |Σ xᵢ yⱼ Dᵢⱼ|"""
    d = matrix.shape[0]
    flat = matrix.reshape(d, d, -1)
    values = np.einsum("ai,aj,ijp->ap", xs, ys, flat)
    return np.max(np.abs(values), axis=-1) if values.shape[-1] else np.zeros(len(xs))


def rep_norm(rep: PseudoRepresentation, n: int) -> float:
    """‖ρₙ‖ = sup_{‖x‖=1} ‖ρₙ(x)‖_{C⁰}（网格上精确）"""
    samples = np.abs(rep.image_samples(n))
    algebra = rep.algebra
    # max 范数单位球的对偶为 sum，反之亦然
    pointwise = samples.sum(axis=0) if algebra.norm == "max" else samples.max(axis=0)
    return float(np.max(pointwise)) / algebra.scale


def rep_norm_bound(rep: PseudoRepresentation) -> float:
    """R = max_n ‖ρₙ‖（在配置的 n 序列上实测）"""
    return max(rep_norm(rep, n) for n in rep.n_set)


def defect_norm(
    rep: PseudoRepresentation,
    n: int,
    samples: int = DEFECT_SAMPLE_PAIRS,
    seed: int = DEFAULT_SEED,
    mode: str = "auto",
) -> DefectReport:
    """‖Bₙ‖：单位球顶点对（可枚举时）加 samples 个种子随机单位向量对上的最大值"""
    algebra = rep.algebra
    matrix = defect_matrix(rep, n, mode)
    pairs_x, pairs_y = [], []
    vertices = algebra.unit_vertices()
    if vertices is not None:
        m = len(vertices)
        pairs_x.append(np.repeat(vertices, m, axis=0))
        pairs_y.append(np.tile(vertices, (m, 1)))
    if samples:
        rng = np.random.default_rng(seed)
        pairs_x.append(algebra.random_unit(rng, samples))
        pairs_y.append(algebra.random_unit(rng, samples))
    xs, ys = np.concatenate(pairs_x), np.concatenate(pairs_y)
    values = _pair_defects(matrix, xs, ys)
    best = int(np.argmax(values))
    report = DefectReport(
        n=n,
        f_label=algebra.element(xs[best]).label(),
        g_label=algebra.element(ys[best]).label(),
        defect_norm=float(values[best]),
        rep_norm=rep_norm_bound(rep),
        bracket_constant=bracket_norm_constant(algebra),
        safety_factor=BRACKET_SAFETY_FACTOR,
        sample_size=len(xs),
    )
    logger.debug(f"[{rep.name} n={n}] ‖Bₙ‖={report.defect_norm:.6g}（{report.sample_size} 对）")
    return report


def normalization_report(rep: PseudoRepresentation, n: int) -> list[dict[str, object]]:
    """各基元像的归一化诊断：网格上是否紧支撑、网格均值（仅报告，不强制）"""
    rows = []
    samples = rep.image_samples(n)
    volume = float(np.prod([a.max - a.min for a in rep.grid.axes]))
    for label, values in zip(rep.algebra.basis_labels, samples):
        gf = GridField(rep.chart, rep.grid, values)
        norm = c0_norm(gf)
        compact = norm == 0 or boundary_max(gf) <= SUPPORT_LEAK_RATIO * norm
        rows.append(
            {"basis": label, "compact_support": bool(compact), "mean": quadrature(gf, check_support=False) / volume}
        )
    return rows


# ==================== ad 级数与尾项 ====================


def ad_series_element(f: AlgebraElement, g: AlgebraElement, s: float, N: int) -> AlgebraElement:
    """Σ_{j=0}^{N} ad(g)ʲf·sʲ/j!（代数中）"""
    if N < 0:
        raise ValueError(f"截断阶 N 必须 ≥ 0，得到 {N}")
    total = f.algebra.zero()
    term = f
    for j in range(N + 1):
        if j:
            term = ad_power(g, term, 1)
        if term.is_zero():
            break
        total = total + term * (s**j / math.factorial(j))
    return total


def ad_series(
    rep: PseudoRepresentation,
    n: int,
    f: AlgebraElement,
    g: AlgebraElement,
    s: float,
    N: int,
    grid: GridSpec | None = None,
) -> GridField:
    """Σ_{j=0}^{N} ρₙ(ad(g)ʲf)·sʲ/j! 在网格上的采样"""
    series = ad_series_element(f, g, s, N)
    return sample_field(rep.chart, grid or rep.grid, rho(rep, n, series))


def tail_bound(R: float, C: float, norm_f: float, norm_g: float, s: float, N: int) -> float:
    """R‖f‖·Σ_{j≥N} (sC‖g‖)ʲ/j!

    用正则化下不完全伽马函数 P(N, x) = e^{−x} Σ_{j≥N} xʲ/j! 计算，避免 exp 减部分和的抵消。
    在对数空间组合各因子，超出浮点范围时返回 inf。
    """
    for name, value in (("R", R), ("C", C), ("norm_f", norm_f), ("norm_g", norm_g), ("s", s), ("N", N)):
        if value < 0:
            raise ValueError(f"{name} 必须 ≥ 0，得到 {value}")
    prefactor = R * norm_f
    if prefactor == 0:
        return 0.0
    x = s * C * norm_g
    if N == 0:
        log_value = math.log(prefactor) + x
    else:
        gamma = float(special.gammainc(N, x))
        if gamma == 0:
            return 0.0
        log_value = math.log(prefactor) + x + math.log(gamma)
    if log_value > _LOG_FLOAT_MAX:
        logger.warning(f"[tail] 尾项上溢 (log={log_value:.4g})，取 inf")
        return math.inf
    return math.exp(log_value)


def truncation_term(
    rep: PseudoRepresentation, f: AlgebraElement, g: AlgebraElement, s: float, N: int, R: float
) -> float:
    """截断尾项；N+1 ≥ 幂零度时 ad 级数有限，尾项为 0"""
    degree = nilpotency_degree(rep.algebra)
    if degree is not None and N + 1 >= degree:
        return 0.0
    constant = bracket_norm_constant(rep.algebra) * BRACKET_SAFETY_FACTOR
    return tail_bound(R, constant, f.norm(), g.norm(), abs(s), N + 1)


def lemma3_residual(
    rep: PseudoRepresentation,
    n: int,
    f: AlgebraElement,
    g: AlgebraElement,
    s: float,
    N: int,
    tolerances: Tolerances | None = None,
    control: StepControl | None = None,
    grid: GridSpec | None = None,
) -> Lemma3Report:
    """L = ‖ρₙ(f)∘φ_{ρₙ(g)}^s − Σ_{j≤N}‖ 与 B = ‖Bₙ‖‖f‖exp(s‖g‖) + 尾项

    L 在表示网格的安全子盒上计算（缺省为 rep.flow_grid_for(n)），实际网格记录在报告的 domain 中。

    Raises:
        FlowEscapeError: 拉回时轨道逃逸
        ChartError: 网格超出表示网格
    """
    tolerances = tolerances or Tolerances()
    control = control or StepControl(tol=tolerances.integrator_tol)
    grid = grid or rep.flow_grid_for(n)
    if not grid.within(rep.grid):
        raise ChartError(f"[{rep.name} n={n}] 拉回网格超出表示网格")
    F = rho(rep, n, f)
    G = rho(rep, n, g)

    pulled = pullback(F, G, s, grid, control) if s else sample_field(rep.chart, grid, F)
    series = ad_series(rep, n, f, g, s, N, grid)
    residual = c0_norm(pulled.samples - series.samples)

    report = defect_norm(rep, n)
    defect_term = report.defect_norm * f.norm() * math.exp(abs(s) * g.norm())
    tail = truncation_term(rep, f, g, s, N, report.rep_norm)
    bound = defect_term + tail
    passed = residual <= tolerances.slack * bound + tolerances.atol
    logger.info(
        f"[{rep.name} n={n}] s={s} N={N}: L={residual:.3e}, B={bound:.3e} (网格 {grid.shape}) "
        f"({'通过' if passed else '未通过'})"
    )
    return Lemma3Report(
        n, f.label(), g.label(), float(s), int(N), residual, bound, defect_term, tail, bool(passed), grid.to_dict()
    )


# ==================== 极限检查 ====================


def limit_distances(rep: PseudoRepresentation) -> list[float]:
    """各 n 的 max_i ‖ρₙ(eᵢ) − ρ(eᵢ)‖"""
    if rep.limit_images is None:
        raise AlgebraError(f"{rep.name} 没有给出极限像")
    limits = np.stack([sample_field(rep.chart, rep.grid, image).samples for image in rep.limit_images])
    return [float(np.max(np.abs(rep.image_samples(n) - limits))) for n in rep.n_set]


def is_monotone(values: Sequence[float], slack: float = MONOTONE_SLACK) -> bool:
    """序列在相对松弛 slack 内不增"""
    return all(b <= a * (1 + slack) + 1e-15 for a, b in zip(values, values[1:]))


def limit_representation_check(
    rep: PseudoRepresentation,
    f: AlgebraElement,
    g: AlgebraElement,
    tolerances: Tolerances | None = None,
) -> LimitReport:
    """检查极限 ρ 是否为表示，并按亏量趋势分类"""
    tolerances = tolerances or Tolerances()
    defects = [defect_norm(rep, n).defect_norm for n in rep.n_set]

    limit_f = sample_field(rep.chart, rep.grid, rho_limit(rep, f))
    limit_g = sample_field(rep.chart, rep.grid, rho_limit(rep, g))
    limit_fg = sample_field(rep.chart, rep.grid, rho_limit(rep, bracket(f, g)))
    limit_bracket = poisson_bracket(limit_f, limit_g)
    residual = c0_norm(limit_bracket - limit_fg)

    last = rep.n_set[-1]
    bracket_last = sample_field(
        rep.chart, rep.grid, bracket_hamiltonian(rho(rep, last, f), rho(rep, last, g))
    )
    gap = c0_norm(bracket_last - limit_bracket)
    distances = limit_distances(rep)

    vanishing = defects[-1] <= tolerances.defect_tol
    if vanishing and residual <= tolerances.defect_tol:
        verdict = "representation_limit"
    elif vanishing:
        verdict = "noncompact_caveat" if rep.noncompact_limit else "naive_limit_counterexample"
    elif is_monotone(defects, 0.0) and defects[-1] < 0.5 * defects[0]:
        verdict = "inconclusive"
    else:
        verdict = "not_a_pseudo_representation"
    logger.info(f"[{rep.name}] 极限检查: {verdict}（极限残差 {residual:.3e}）")
    return LimitReport(verdict, residual, defects, gap, distances, is_monotone(distances))
