"""坐标卡、采样场、差分与 Poisson 括号测试"""

import math
import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from pseudorep_lab.core.fields import HamiltonianField
from pseudorep_lab.core.geometry import (
    bracket_hamiltonian,
    c0_norm,
    partial_derivative,
    poisson_bracket,
    quadrature,
    read_field_csv,
    sample_field,
    stencil_weights,
    write_field_csv,
)
from pseudorep_lab.core.oracles import cylinder_kappa
from pseudorep_lab.experiments.gallery import CYLINDER_CLAIMED, gallery
from pseudorep_lab.models.chart import make_chart
from pseudorep_lab.models.grid import AxisSpec, GridSpec, TestFunction
from pseudorep_lab.utils.errors import ChartError, FieldError, SupportLeakWarning

POLAR_N_SET = (1, 4, 16, 64)
TORUS = (0.0, 2 * math.pi)


def torus_grid(points: int) -> GridSpec:
    return GridSpec.of((*TORUS, points, True), (*TORUS, points, True))


# ==================== 坐标卡与网格 ====================


def test_unknown_chart_kind():
    with pytest.raises(ChartError):
        make_chart("sphere")


def test_symplectization_needs_even_transverse_dim():
    with pytest.raises(ChartError):
        make_chart("symplectization_s1xU", transverse_dim=3)


def test_polar_singularity(polar):
    with pytest.raises(ChartError):
        polar.poisson_matrix(np.array([[0.0, 1.0]]))
    with pytest.raises(ChartError):
        GridSpec.of((0.0, 1.0, 8), (*TORUS, 8, True)).check_chart(polar)


@pytest.mark.parametrize(
    "kind, params",
    [("cartesian", {"n": 2}), ("polar_r2", {}), ("cylinder_s1", {}), ("symplectization_s1xU", {"transverse_dim": 4})],
)
def test_poisson_matrix_antisymmetric(kind, params, rng):
    chart = make_chart(kind, **params)
    box = np.array(chart.sample_box())
    points = rng.uniform(box[:, 0], box[:, 1], size=(32, chart.dim))
    matrix = chart.poisson_matrix(points)
    assert np.array_equal(matrix, -np.swapaxes(matrix, -1, -2))


def test_cylinder_poisson_entry(cylinder):
    matrix = cylinder.poisson_matrix(np.array([1.5, 0.3]))
    assert matrix[0, 1] == pytest.approx(math.exp(-1.5), rel=1e-15)


def test_axis_validation():
    with pytest.raises(ChartError):
        AxisSpec(1.0, 0.0, 8)
    with pytest.raises(ChartError):
        AxisSpec(0.0, 1.0, 2)
    assert AxisSpec(0.0, 1.0, 4, periodic=True).spacing == 0.25
    assert AxisSpec(0.0, 1.0, 5).spacing == 0.25


def test_grid_dimension_mismatch(polar):
    with pytest.raises(ChartError):
        GridSpec.of((0.1, 1.0, 8)).check_chart(polar)


# ==================== 采样场 ====================


def test_from_expr_rejects_foreign_symbols(cartesian):
    with pytest.raises(ChartError):
        HamiltonianField.from_expr(cartesian, "q + r")


def test_gradient_check_detects_wrong_gradient(cartesian):
    with pytest.raises(FieldError):
        HamiltonianField.from_callables(
            cartesian,
            lambda x: x[..., 0] ** 2,
            gradient=lambda x: np.stack([x[..., 0], np.zeros_like(x[..., 1])], axis=-1),
        )


def test_gradient_check_accepts_correct_gradient(cartesian):
    field = HamiltonianField.from_callables(
        cartesian,
        lambda x: x[..., 0] ** 2,
        gradient=lambda x: np.stack([2 * x[..., 0], np.zeros_like(x[..., 1])], axis=-1),
    )
    assert field.has_gradient


def test_sample_field_rejects_non_finite(cartesian):
    grid = GridSpec.of((-1.0, 1.0, 5), (-1.0, 1.0, 5))
    with pytest.raises(FieldError):
        sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "1/q"))


def test_field_arithmetic_is_symbolic(cartesian):
    F = HamiltonianField.from_expr(cartesian, "q**2")
    G = HamiltonianField.from_expr(cartesian, "p")
    combined = 2 * F - G * F + 1
    q, p = cartesian.symbols()
    assert sp.simplify(combined.expr - (2 * q**2 - p * q**2 + 1)) == 0


def test_grid_field_arithmetic_keeps_closed_form(cartesian):
    grid = GridSpec.of((-1.0, 1.0, 9), (-1.0, 1.0, 9))
    F = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "q"))
    G = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "p"))
    product = F * G
    assert product.analytic is not None
    assert np.allclose(product.samples, grid.points()[..., 0] * grid.points()[..., 1])
    assert (F - F).samples.max() == 0.0


# ==================== 差分 ====================


def test_stencil_weights_are_exact():
    assert stencil_weights((-1, 0, 1)) == (sp.Rational(-1, 2), 0, sp.Rational(1, 2))
    assert stencil_weights((-2, -1, 0, 1, 2)) == (
        sp.Rational(1, 12),
        sp.Rational(-2, 3),
        0,
        sp.Rational(2, 3),
        sp.Rational(-1, 12),
    )


def test_periodic_derivative_order4(cartesian):
    grid = torus_grid(128)
    field = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "sin(q)*cos(p)"))
    derivative = partial_derivative(field, 0, order=4)
    x = grid.points()
    assert c0_norm(derivative.samples - np.cos(x[..., 0]) * np.cos(x[..., 1])) < 1e-6


def test_boundary_stencils_exact_on_quartic(cartesian):
    grid = GridSpec.of((-1.0, 1.0, 21), (-1.0, 1.0, 5))
    field = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "q**4 - q"))
    derivative = partial_derivative(field, 0, order=4)
    q = grid.points()[..., 0]
    assert c0_norm(derivative.samples - (4 * q**3 - 1)) < 1e-10


def test_derivative_rejects_short_axis(cartesian):
    grid = GridSpec.of((-1.0, 1.0, 4), (-1.0, 1.0, 5))
    field = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "q"))
    with pytest.raises(ChartError):
        partial_derivative(field, 0, order=4)


# ==================== 积分 ====================


def test_quadrature_of_test_function(cartesian):
    grid = GridSpec.of((-1.1, 1.1, 401), (-1.1, 1.1, 401))
    phi = sample_field(cartesian, grid, TestFunction((0.0, 0.0), 1.0).as_field(cartesian))
    with warnings.catch_warnings():
        warnings.simplefilter("error", SupportLeakWarning)
        value = quadrature(phi)
    # 径向一维积分作参考
    radial, _ = integrate.quad(lambda r: 2 * math.pi * r * math.exp(1 - 1 / (1 - r * r)), 0, 1)
    assert value == pytest.approx(radial, abs=1e-8)


def test_quadrature_warns_on_support_leak(cartesian):
    grid = GridSpec.of((-1.0, 1.0, 11), (-1.0, 1.0, 11))
    field = sample_field(cartesian, grid, HamiltonianField.constant(cartesian, 1.0))
    with pytest.warns(SupportLeakWarning):
        assert quadrature(field) == pytest.approx(4.0)


# ==================== CSV ====================


def test_field_csv_preserves_grid(tmp_path, polar):
    grid = GridSpec.of((0.5, 1.0, 6), (*TORUS, 8, True))
    field = sample_field(polar, grid, HamiltonianField.from_expr(polar, "r*cos(theta)"))
    path = write_field_csv(field, tmp_path / "field.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "# chart=polar_r2 axes=r,theta dims=6,8"
    restored = read_field_csv(path)
    assert restored.chart == polar
    assert restored.grid.shape == grid.shape
    assert restored.grid.axes[1].periodic
    assert np.array_equal(restored.samples, field.samples)


def test_field_csv_rejects_missing_header(tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("0,0,1\n", encoding="utf-8")
    with pytest.raises(FieldError):
        read_field_csv(path)


# ==================== 括号性质 ====================


@pytest.mark.parametrize("seed", range(20))
def test_bracket_antisymmetry_exact(cartesian, make_trig, seed):
    rng = np.random.default_rng(seed)
    grid = torus_grid(32)
    F = sample_field(cartesian, grid, make_trig(cartesian, rng))
    G = sample_field(cartesian, grid, make_trig(cartesian, rng))
    total = poisson_bracket(F, G, mode="exact") + poisson_bracket(G, F, mode="exact")
    assert c0_norm(total) <= 1e-12


def _leibniz_residual(F, G, H, order=2):
    def pb(a, b):
        return poisson_bracket(a, b, mode="fd", order=order)

    return c0_norm(pb(F * G, H) - F * pb(G, H) - G * pb(F, H))


def _jacobi_residual(F, G, H, order=2):
    def pb(a, b):
        return poisson_bracket(a, b, mode="fd", order=order)

    return c0_norm(pb(F, pb(G, H)) + pb(G, pb(H, F)) + pb(H, pb(F, G)))


@pytest.mark.parametrize("seed", range(20))
def test_leibniz_and_jacobi_converge_at_stencil_order(cartesian, make_trig, seed):
    rng = np.random.default_rng(1000 + seed)
    fields = [make_trig(cartesian, rng, label=label) for label in "FGH"]
    coarse = [sample_field(cartesian, torus_grid(64), f) for f in fields]
    fine = [sample_field(cartesian, torus_grid(128), f) for f in fields]
    assert _leibniz_residual(*coarse) / _leibniz_residual(*fine) >= 3.5
    assert _jacobi_residual(*coarse) / _jacobi_residual(*fine) >= 3.5


def test_exact_mode_needs_closed_forms(cartesian):
    grid = torus_grid(16)
    F = sample_field(cartesian, grid, HamiltonianField.from_expr(cartesian, "sin(q)"))
    G = partial_derivative(F, 0)
    with pytest.raises(FieldError):
        poisson_bracket(F, G, mode="exact")


def test_canonical_bracket(cartesian):
    F = HamiltonianField.from_expr(cartesian, "q")
    G = HamiltonianField.from_expr(cartesian, "p")
    assert bracket_hamiltonian(F, G).expr == 1
    assert bracket_hamiltonian(G, F).expr == -1


amplitude = st.floats(min_value=-5, max_value=5, allow_nan=False, allow_infinity=False)
shift = st.floats(min_value=-3, max_value=3, allow_nan=False, allow_infinity=False)


@given(amplitude, amplitude)
@settings(max_examples=25, deadline=None)
def test_bracket_bilinear(a, b):
    chart = make_chart("cartesian", n=1)
    grid = GridSpec.of((-1.0, 1.0, 9), (-1.0, 1.0, 9))
    F = HamiltonianField.from_expr(chart, "sin(q)*p")
    G = HamiltonianField.from_expr(chart, "q**2 + cos(p)")
    H = HamiltonianField.from_expr(chart, "exp(q/2)*p**2")
    left = sample_field(chart, grid, bracket_hamiltonian(a * F + b * G, H))
    right = a * sample_field(chart, grid, bracket_hamiltonian(F, H)) + b * sample_field(
        chart, grid, bracket_hamiltonian(G, H)
    )
    assert c0_norm(left - right) <= 1e-10 * (1 + abs(a) + abs(b))


@given(shift, shift)
@settings(max_examples=25, deadline=None)
def test_cartesian_bracket_translation_invariant(cq, cp):
    chart = make_chart("cartesian", n=1)
    q, p = chart.symbols()
    f_expr = sp.sin(q) * p**2
    g_expr = sp.cos(q + 2 * p)
    moved = {q: q + cq, p: p + cp}
    shifted = bracket_hamiltonian(
        HamiltonianField.from_expr(chart, f_expr.subs(moved, simultaneous=True)),
        HamiltonianField.from_expr(chart, g_expr.subs(moved, simultaneous=True)),
    )
    plain = bracket_hamiltonian(HamiltonianField.from_expr(chart, f_expr), HamiltonianField.from_expr(chart, g_expr))
    points = GridSpec.of((-1.0, 1.0, 7), (-1.0, 1.0, 7)).points()
    assert np.allclose(shifted(points), plain(points + np.array([cq, cp])), atol=1e-9)


# ==================== 画廊括号常数 ====================


@pytest.mark.parametrize("n", POLAR_N_SET)
def test_polar_bracket_exact(polar, n):
    entry = gallery("polterovich_polar")
    images = entry.images(n)
    grid = GridSpec.of((0.05, 2.0, 256), (*TORUS, 512, True))
    F, G = sample_field(polar, grid, images["f"]), sample_field(polar, grid, images["g"])
    assert c0_norm(poisson_bracket(F, G, mode="exact") - 1.0) <= 1e-10


@pytest.mark.parametrize("n", POLAR_N_SET)
def test_polar_bracket_fd_order4(polar, n):
    entry = gallery("polterovich_polar")
    images = entry.images(n)
    # n = 64 时每个 cos(nθ) 周期需要 16 个点
    theta_points = 1024 if n == 64 else 512
    grid = GridSpec.of((0.05, 2.0, 256), (*TORUS, theta_points, True))
    F, G = sample_field(polar, grid, images["f"]), sample_field(polar, grid, images["g"])
    assert c0_norm(poisson_bracket(F, G, mode="fd", order=4) - 1.0) <= 5e-3


@pytest.mark.parametrize("n", POLAR_N_SET)
def test_polar_images_decay_like_inverse_sqrt(polar, n):
    images = gallery("polterovich_polar").images(n)
    grid = GridSpec.of((0.05, 1.0, 96), (*TORUS, 512, True))
    # θ = 0 与 r = 1 都是网格点
    assert c0_norm(sample_field(polar, grid, images["f"])) == pytest.approx(1 / math.sqrt(n), abs=1e-12)


@pytest.mark.parametrize("n", (1, 4, 16))
def test_cylinder_bracket_is_kappa(cylinder, n):
    entry = gallery("cylinder_heisenberg")
    images = entry.images(n)
    F, G = sample_field(cylinder, entry.grid, images["f"]), sample_field(cylinder, entry.grid, images["g"])
    kappa = cylinder_kappa()["value"]
    assert kappa == pytest.approx(0.5, abs=1e-15)
    assert c0_norm(poisson_bracket(F, G, mode="exact") - kappa) <= 1e-10


def test_cylinder_claimed_constants_recorded():
    entry = gallery("cylinder_heisenberg")
    record = entry.to_dict()
    assert record["constants"]["kappa"] == pytest.approx(0.5)
    assert record["claimed"] == CYLINDER_CLAIMED
    assert "= 2" in record["claimed"]["bracket"]
