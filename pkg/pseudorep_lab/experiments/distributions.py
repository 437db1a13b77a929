"""括号在分布意义下的收敛实验"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import sympy as sp

from ..core.fields import HamiltonianField
from ..core.geometry import bracket_hamiltonian, poisson_bracket, quadrature, sample_field
from ..core.oracles import REMARK2_TEST_CENTER, REMARK2_TEST_RADIUS
from ..core.runner import ExperimentRunner
from ..models.chart import Chart, make_chart
from ..models.config import Tolerances
from ..models.grid import GridField, GridSpec, TestFunction, bump_expr
from ..models.report import DistributionReport, ResultTable
from ..utils import logger
from ..utils.constants import (
    DEFAULT_CHI_RADIUS,
    PAIRING_GRID_POINTS,
    PROP6_MIN_DECREASE,
)
from ..utils.errors import ChartError
from .gallery import gallery

PI_FD_STEP = 1e-6

DEFAULT_INDEX_PAIRS = ((1, 1), (2, 2), (4, 4), (8, 8), (16, 16), (1, 16), (16, 1), (4, 16), (16, 4))

FieldLike = HamiltonianField | GridField
TestLike = TestFunction | HamiltonianField


def _as_test_field(phi: TestLike, chart: Chart) -> HamiltonianField:
    return phi.as_field(chart) if isinstance(phi, TestFunction) else phi


def _divergence_expr(F: HamiltonianField, phi: HamiltonianField) -> sp.Expr:
    """Σᵢⱼ ∂ⱼ(Πᵢⱼ ∂ᵢF φ)"""
    chart = F.chart
    syms = chart.symbols()
    pi = chart.poisson_matrix_symbolic()
    terms = [
        sp.diff(pi[i, j] * sp.diff(F.expr, syms[i]) * phi.expr, syms[j])
        for i in range(chart.dim)
        for j in range(chart.dim)
        if pi[i, j] != 0
    ]
    return sum(terms, sp.Integer(0))


def _divergence_samples(F: HamiltonianField, phi: HamiltonianField, grid: GridSpec) -> np.ndarray:
    """同上，数值版：∂ⱼΠᵢⱼ ∂ᵢF φ + Πᵢⱼ ∂ᵢⱼF φ + Πᵢⱼ ∂ᵢF ∂ⱼφ"""
    chart = F.chart
    points = grid.points()
    pi = chart.poisson_matrix(points)
    grad_f, hess_f = F.grad(points), F.hessian(points)
    phi_values, grad_phi = phi(points), phi.grad(points)
    total = np.zeros(grid.shape)
    for j in range(chart.dim):
        step = np.zeros(chart.dim)
        step[j] = PI_FD_STEP
        dpi = (chart.poisson_matrix(points + step) - chart.poisson_matrix(points - step)) / (2 * PI_FD_STEP)
        total += np.einsum("...i,...i->...", dpi[..., :, j], grad_f) * phi_values
        total += np.einsum("...i,...i->...", pi[..., :, j], hess_f[..., :, j]) * phi_values
        total += np.einsum("...i,...->...", pi[..., :, j] * grad_f, grad_phi[..., j])
    return total


def distribution_pairing(F: HamiltonianField, G: FieldLike, phi: TestLike, grid: GridSpec) -> float:
    """⟨{F,G}, φ⟩ = −∫ G Σᵢⱼ ∂ⱼ(Πᵢⱼ ∂ᵢF φ)

    只用到 F 的两阶导数，G 只需采样。

    Args:
        F: 带两阶导数的闭式场
        G: 闭式场或网格采样场
        phi: 紧支撑试验函数（须落在网格内）
        grid: 积分网格

    Warns:
        SupportLeakWarning: 被积函数在网格边界上不为 0
    """
    chart = F.chart
    grid.check_chart(chart)
    phi_field = _as_test_field(phi, chart)
    if F.expr is not None and phi_field.expr is not None:
        divergence = sample_field(chart, grid, HamiltonianField.from_expr(chart, _divergence_expr(F, phi_field)))
        d_samples = divergence.samples
    else:
        d_samples = _divergence_samples(F, phi_field, grid)
    if isinstance(G, GridField):
        G.check_compatible(GridField(chart, grid, d_samples))
        g_samples = G.samples
    else:
        g_samples = sample_field(chart, grid, G).samples
    return -quadrature(GridField(chart, grid, g_samples * d_samples))


def direct_pairing(F: HamiltonianField, G: HamiltonianField, phi: TestLike, grid: GridSpec) -> float:
    """∫ {F,G}·φ 的直接积分（括号逐点求出）"""
    chart = F.chart
    bracket = poisson_bracket(sample_field(chart, grid, F), sample_field(chart, grid, G))
    return quadrature(bracket * sample_field(chart, grid, _as_test_field(phi, chart)))


# ==================== 函数族 ====================


@dataclass
class PairingFamily:
    """收敛实验的函数族

    Attributes:
        name: 族名
        chart: 坐标卡
        member: n -> (Fₙ, Gₙ)
        limit: (F, G)
        test_function: 试验函数 φ
        grid: 积分网格
        hypothesis_met: Fₙ C² 收敛且 Gₙ C⁰ 收敛
    """

    name: str
    chart: Chart
    member: Callable[[int], tuple[HamiltonianField, HamiltonianField]]
    limit: tuple[HamiltonianField, HamiltonianField]
    test_function: TestFunction
    grid: GridSpec
    hypothesis_met: bool = True


PAIRING_FAMILIES = ("conforming", "constant", "remark2")


def _bump(chart: Chart, center: tuple[float, float], radius: float) -> sp.Expr:
    q, p = chart.symbols()
    return bump_expr(((q - center[0]) ** 2 + (p - center[1]) ** 2) / sp.nsimplify(radius) ** 2)


def _smooth_pair(chart: Chart) -> tuple[HamiltonianField, HamiltonianField]:
    q, p = chart.symbols()
    return (
        HamiltonianField.from_expr(chart, sp.sin(q) * sp.cos(p), "F"),
        HamiltonianField.from_expr(chart, sp.cos(q + p), "G"),
    )


def pairing_family(name: str, chi_radius: float = DEFAULT_CHI_RADIUS) -> PairingFamily:
    """命名函数族

    conforming: Fₙ = F + bump/n（C² 收敛），Gₙ = G + cos(nq)·bump/√n（只 C⁰ 收敛）；
    constant: Fₙ = F，Gₙ = G；
    remark2: 画廊 remark2 的 (Fₙ, Gₙ)，极限 0，括号不收敛。

    Raises:
        ChartError: 未知族名
    """
    chart = make_chart("cartesian", n=1)
    q, _ = chart.symbols()
    square = GridSpec.of((-1.1, 1.1, PAIRING_GRID_POINTS), (-1.1, 1.1, PAIRING_GRID_POINTS))
    unit_phi = TestFunction((0.0, 0.0), 1.0)
    F, G = _smooth_pair(chart)

    if name == "conforming":
        shift_f = _bump(chart, (0.2, 0.1), 0.6)
        shift_g = _bump(chart, (0.0, 0.0), 0.8)

        def member(n: int) -> tuple[HamiltonianField, HamiltonianField]:
            return (
                HamiltonianField.from_expr(chart, F.expr + shift_f / n, f"F{n}"),
                HamiltonianField.from_expr(chart, G.expr + sp.cos(n * q) * shift_g / sp.sqrt(n), f"G{n}"),
            )

        return PairingFamily(name, chart, member, (F, G), unit_phi, square)
    if name == "constant":
        return PairingFamily(name, chart, lambda n: (F, G), (F, G), unit_phi, square)
    if name == "remark2":
        entry = gallery("remark2_cartesian", chi_radius=chi_radius)
        zero = HamiltonianField.constant(chart, 0.0)
        # χχ′ 在 p > 0 上不为 0，试验函数放在那里
        return PairingFamily(
            name,
            chart,
            lambda n: tuple(entry.build_images(n)),
            (zero, zero),
            TestFunction(REMARK2_TEST_CENTER, REMARK2_TEST_RADIUS),
            GridSpec.of((-0.6, 0.6, PAIRING_GRID_POINTS), (-0.2, 1.0, PAIRING_GRID_POINTS)),
            hypothesis_met=False,
        )
    raise ChartError(f"未知函数族: {name}（可选: {', '.join(PAIRING_FAMILIES)}）")


def prop6_experiment(
    family: PairingFamily,
    n_set: tuple[int, ...],
    tolerances: Tolerances | None = None,
    workers: int = 1,
) -> tuple[ResultTable, DistributionReport]:
    """逐 n 计算 |⟨{Fₙ,Gₙ},φ⟩ − ⟨{F,G},φ⟩|

    误差从第一个 n 到最后一个 n 至少减半（或已低于 atol）视为收敛。
    """
    tolerances = tolerances or Tolerances()
    phi = family.test_function
    F, G = family.limit
    target = distribution_pairing(F, G, phi, family.grid)

    def pairing_at(n: int) -> float:
        Fn, Gn = family.member(n)
        return distribution_pairing(Fn, Gn, phi, family.grid)

    pairings = ExperimentRunner(f"prop6 {family.name}", workers).run([(n, lambda n=n: pairing_at(n)) for n in n_set])
    table = ResultTable(f"prop6_{family.name}", ["n", "pairing", "limit_pairing", "error"])
    errors = []
    for n, value in zip(n_set, pairings):
        errors.append(abs(value - target))
        table.add_row(n, value, target, errors[-1])

    ratio = errors[0] / errors[-1] if errors[-1] > 0 else float("inf")
    converged = errors[-1] <= tolerances.atol or ratio >= PROP6_MIN_DECREASE
    if family.hypothesis_met:
        verdict = "converges" if converged else "no_convergence"
    else:
        verdict = "converges_despite_violation" if converged else "hypothesis_violated_no_convergence"
    logger.info(f"[prop6 {family.name}] 误差 {errors[0]:.3e} -> {errors[-1]:.3e}，判定 {verdict}")
    report = DistributionReport(
        "prop6",
        family.name,
        verdict,
        errors,
        decrease_ratio=None if ratio == float("inf") else ratio,
        hypothesis_met=family.hypothesis_met,
    )
    return table, report


def prop7_experiment(
    family: PairingFamily,
    H: HamiltonianField | None = None,
    index_pairs: tuple[tuple[int, int], ...] = DEFAULT_INDEX_PAIRS,
    tolerances: Tolerances | None = None,
    mismatch: bool = False,
    workers: int = 1,
) -> tuple[ResultTable, DistributionReport]:
    """双指标族 F_p = F + bump/p，G_q = G + bump/q 的配对误差 |⟨{F_p,G_q},φ⟩ − ⟨H,φ⟩|

    H 缺省为 {F,G}；mismatch 时再加一个鼓包（构造的失败例）。
    配对对 (F, G) 双线性，带符号偏差严格是 c₀ + A/p + B/q + C/(pq)：
    c₀ 由全部指标对的最小二乘给出，|c₀| 超过 atol 判为 mismatch。
    另报告 c = max e/(1/p + 1/q)，即 e ≤ c(1/p + 1/q) 的最小常数。
    """
    tolerances = tolerances or Tolerances()
    chart, phi, grid = family.chart, family.test_function, family.grid
    F, G = family.limit
    shift_f = _bump(chart, (0.2, 0.1), 0.6) / 2
    shift_g = _bump(chart, (-0.1, 0.2), 0.7) / 2
    if H is None:
        H = bracket_hamiltonian(F, G, "{F,G}")
    if mismatch:
        H = H + HamiltonianField.from_expr(chart, _bump(chart, (0.0, 0.0), 0.5))
    target = quadrature(sample_field(chart, grid, H) * sample_field(chart, grid, phi.as_field(chart)))

    def pairing_at(p: int, q: int) -> float:
        Fp = HamiltonianField.from_expr(chart, F.expr + shift_f / p, f"F{p}")
        Gq = HamiltonianField.from_expr(chart, G.expr + shift_g / q, f"G{q}")
        return distribution_pairing(Fp, Gq, phi, grid)

    tasks = [((p, q), lambda p=p, q=q: pairing_at(p, q)) for p, q in index_pairs]
    pairings = ExperimentRunner(f"prop7 {family.name}", workers).run(tasks)
    table = ResultTable(f"prop7_{family.name}", ["p", "q", "pairing", "target", "error"])
    errors = []
    for (p, q), value in zip(index_pairs, pairings):
        errors.append(abs(value - target))
        table.add_row(p, q, value, target, errors[-1])

    inv_p = np.array([1 / p for p, _ in index_pairs])
    inv_q = np.array([1 / q for _, q in index_pairs])
    e = np.array(errors)
    fit_constant = float(np.max(e / (inv_p + inv_q)))
    design = np.column_stack([np.ones(len(index_pairs)), inv_p, inv_q, inv_p * inv_q])
    deviations = np.array(pairings) - target
    intercept = float(np.linalg.lstsq(design, deviations, rcond=None)[0][0])
    verdict = "mismatch" if abs(intercept) > tolerances.atol else "consistent"
    logger.info(f"[prop7 {family.name}] c = {fit_constant:.3e}，截距 {intercept:.3e}，判定 {verdict}")
    report = DistributionReport(
        "prop7",
        family.name,
        verdict,
        errors,
        fit_constant=fit_constant,
        fit_intercept=intercept,
        hypothesis_met=not mismatch,
    )
    return table, report
