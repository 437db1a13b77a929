"""独立的参考计算（黄金常数的来源）

这里的计算刻意不复用网格/积分器代码路径：χ 常数用稠密一维扫描，κ 与括号用 sympy 化简，
尾项用逐项 fsum 求和。
"""

from __future__ import annotations

import math
from typing import Any

import numpy as np
import sympy as sp
from scipy import integrate

from ..models.chart import make_chart
from ..utils import logger
from ..utils.constants import CHI_SCAN_POINTS, DEFAULT_CHI_RADIUS, DEFAULT_SEED
from .lie_algebra import bracket_norm_constant, builtin

ORACLE_VERSION = 1

# remark2 画廊配对实验使用的试验函数
REMARK2_TEST_CENTER = (0.0, 0.4)
REMARK2_TEST_RADIUS = 0.5


def chi_values(x: np.ndarray, radius: float = DEFAULT_CHI_RADIUS) -> tuple[np.ndarray, np.ndarray]:
    """χ(x) = exp(1 − 1/(1 − x²/R²)) 及其导数（|x| ≥ R 时为 0）"""
    x = np.asarray(x, dtype=float)
    u = (x / radius) ** 2
    inside = u < 1
    w = np.where(inside, 1 - u, 1.0)
    chi = np.where(inside, np.exp(1 - 1 / w), 0.0)
    dchi = np.where(inside, chi * (-2 * x / radius**2) / w**2, 0.0)
    return chi, dchi


def chi_scan(radius: float = DEFAULT_CHI_RADIUS, points: int = CHI_SCAN_POINTS) -> dict[str, float]:
    """稠密扫描 χ 的常数：max|χχ′|、取到最大值的位置、max|χ′|"""
    x = np.linspace(-radius, radius, points)
    chi, dchi = chi_values(x, radius)
    product = np.abs(chi * dchi)
    index = int(np.argmax(product))
    return {
        "max_chi_dchi": float(product[index]),
        "argmax_chi_dchi": float(abs(x[index])),
        "max_dchi": float(np.max(np.abs(dchi))),
    }


def chi_product_max_exact(radius: float = DEFAULT_CHI_RADIUS) -> float:
    """max|χχ′| 的闭式：在 |x| = R/√3 处取到 3√3/(2eR)"""
    return 3 * math.sqrt(3) / (2 * math.e * radius)


def cylinder_kappa() -> dict[str, Any]:
    """柱面画廊括号 {e^{s/2}cos(nθ)/√n, e^{s/2}sin(nθ)/√n} 的符号化简"""
    chart = make_chart("cylinder_s1")
    s, theta = chart.symbols()
    n = sp.Symbol("n", positive=True, integer=True)
    F = sp.exp(s / 2) * sp.cos(n * theta) / sp.sqrt(n)
    G = sp.exp(s / 2) * sp.sin(n * theta) / sp.sqrt(n)
    pi = chart.poisson_matrix_symbolic()
    expr = sp.simplify(pi[0, 1] * (sp.diff(F, s) * sp.diff(G, theta) - sp.diff(F, theta) * sp.diff(G, s)))
    if expr.free_symbols:
        raise ArithmeticError(f"柱面括号不是常数: {expr}")
    return {"value": float(expr), "expression": str(expr)}


def remark2_bracket() -> str:
    """remark2 画廊 {χ(p)cos(nq)/√n, χ(p)sin(nq)/√n} 的符号形式（χ 为抽象函数）"""
    chart = make_chart("cartesian", n=1)
    q, p = chart.symbols()
    n = sp.Symbol("n", positive=True, integer=True)
    chi = sp.Function("chi")
    F = chi(p) * sp.cos(n * q) / sp.sqrt(n)
    G = chi(p) * sp.sin(n * q) / sp.sqrt(n)
    pi = chart.poisson_matrix_symbolic()
    return str(sp.simplify(pi[0, 1] * (sp.diff(F, q) * sp.diff(G, p) - sp.diff(F, p) * sp.diff(G, q))))


def tail_oracle(R: float, C: float, norm_f: float, norm_g: float, s: float, N: int) -> float:
    """R‖f‖·Σ_{j≥N} xʲ/j! 逐项补偿求和（x = sC‖g‖）"""
    x = s * C * norm_g
    terms = []
    term = 1.0
    j = 0
    while True:
        if j >= N:
            terms.append(term)
            if j > x and term < 1e-30 * max(math.fsum(terms), 1e-300):
                break
        j += 1
        term *= x / j
        if term == 0.0 and j > N:
            break
    return R * norm_f * math.fsum(terms)


def _bump(q: float, p: float, center: tuple[float, float], radius: float) -> float:
    u = ((q - center[0]) ** 2 + (p - center[1]) ** 2) / radius**2
    return math.exp(1 - 1 / (1 - u)) if u < 1 else 0.0


def remark2_pairing_constant(
    center: tuple[float, float] = REMARK2_TEST_CENTER,
    radius: float = REMARK2_TEST_RADIUS,
    chi_radius: float = DEFAULT_CHI_RADIUS,
) -> float:
    """|⟨χχ′, φ⟩| = |∫∫ χ(p)χ′(p) φ(q,p) dq dp|（remark2 括号与 n 无关）"""

    def integrand(p: float, q: float) -> float:
        chi, dchi = chi_values(np.array(p), chi_radius)
        return float(chi * dchi) * _bump(q, p, center, radius)

    value, _ = integrate.dblquad(
        integrand,
        center[0] - radius,
        center[0] + radius,
        center[1] - radius,
        center[1] + radius,
        epsabs=1e-13,
        epsrel=1e-11,
    )
    return abs(value)


def compute_goldens(chi_radius: float = DEFAULT_CHI_RADIUS, scan_points: int = CHI_SCAN_POINTS) -> dict[str, Any]:
    """全部黄金常数及其生成参数"""
    logger.info(f"[golden] 计算参考常数（χ 半径 {chi_radius}，扫描点数 {scan_points}）")
    scan = chi_scan(chi_radius, scan_points)
    kappa = cylinder_kappa()
    heisenberg = builtin("heisenberg3")
    constants = {
        "chi_max_product": scan["max_chi_dchi"],
        "chi_argmax_product": scan["argmax_chi_dchi"],
        "chi_max_derivative": scan["max_dchi"],
        "cylinder_kappa": kappa["value"],
        "heisenberg_bracket_constant": bracket_norm_constant(heisenberg, samples=10**6, seed=DEFAULT_SEED),
        "tail_1_1_1_1_1_10": tail_oracle(1.0, 1.0, 1.0, 1.0, 1.0, 10),
        "remark2_pairing_constant": remark2_pairing_constant(chi_radius=chi_radius),
    }
    provenance = {
        "oracle_version": ORACLE_VERSION,
        "chi_radius": chi_radius,
        "scan_points": scan_points,
        "seed": DEFAULT_SEED,
        "cylinder_bracket_expression": kappa["expression"],
        "remark2_bracket_expression": remark2_bracket(),
        "remark2_test_function": {"center": list(REMARK2_TEST_CENTER), "radius": REMARK2_TEST_RADIUS},
    }
    return {"constants": constants, "provenance": provenance}
