"""积分器、哈密顿流、拉回与线性增长证书测试"""

import math

import numpy as np
import pytest
from scipy import integrate

from pseudorep_lab.core.fields import HamiltonianField
from pseudorep_lab.core.flows import (
    advance_flow,
    commutator_flow,
    commutator_generator,
    conjugated_flow,
    flow_map,
    flow_points,
    generated_flow,
    linear_growth_bound,
    pullback,
    pullback_hamiltonian,
    symplectic_gradient,
)
from pseudorep_lab.core.integrators import rkf45
from pseudorep_lab.experiments.gallery import gallery, polar_growth_caps, polar_model_field
from pseudorep_lab.models.config import StepControl
from pseudorep_lab.models.grid import GridSpec
from pseudorep_lab.utils.errors import (
    ChartError,
    ConfigError,
    FieldError,
    FlowEscapeError,
    GrowthFitError,
    StepUnderflowError,
)

OSCILLATOR = "(q**2 + p**2)/2"


@pytest.fixture
def oscillator(cartesian):
    return HamiltonianField.from_expr(cartesian, OSCILLATOR, "osc")


# ==================== 积分器 ====================


def test_rkf45_exponential_decay():
    result = rkf45(lambda t, y: -y, np.array([1.0, 2.0]), 0.0, 3.0, StepControl(tol=1e-12))
    assert np.allclose(result.final, np.array([1.0, 2.0]) * math.exp(-3.0), atol=1e-10)
    assert result.times[0] == 0.0 and result.times[-1] == 3.0


def test_rkf45_negative_time_and_eval_points():
    t_eval = np.array([-0.5, -1.0, -1.5])
    result = rkf45(lambda t, y: y, np.array([1.0]), 0.0, -2.0, StepControl(tol=1e-12), t_eval=t_eval)
    assert np.allclose(result.times, [0.0, -0.5, -1.0, -1.5, -2.0])
    assert np.allclose(result.states[:, 0], np.exp(result.times), atol=1e-10)


def test_rkf45_zero_span_returns_start():
    result = rkf45(lambda t, y: y, np.array([3.0]), 1.0, 1.0, StepControl())
    assert result.final[0] == 3.0
    assert result.accepted == 0


def test_rkf45_dense_steps_interleave_with_eval_points():
    t_eval = np.array([0.25, 0.5, 0.75])
    result = rkf45(lambda t, y: -y, np.array([1.0]), 0.0, 1.0, StepControl(tol=1e-10), t_eval=t_eval, dense=True)
    assert np.all(np.diff(result.times) > 0)
    assert set(t_eval.tolist()) <= set(result.times.tolist())
    assert np.allclose(result.states[:, 0], np.exp(-result.times), atol=1e-9)
    assert result.nfev >= 6 * result.accepted


def test_rkf45_runs_scipy_stepper_with_componentwise_tolerance(monkeypatch):
    seen = {}
    stepper = integrate.RK45

    def spy(*args, **kwargs):
        seen.update(kwargs)
        return stepper(*args, **kwargs)

    monkeypatch.setattr(integrate, "RK45", spy)
    y0 = np.ones((4, 2))
    result = rkf45(lambda t, y: -y, y0, 0.0, 1.0, StepControl(tol=1e-8))
    assert seen["rtol"] == pytest.approx(1e-8 / math.sqrt(8))
    assert result.final.shape == (4, 2)
    assert np.allclose(result.final, math.exp(-1.0) * y0, atol=1e-7)


def test_step_control_validation():
    with pytest.raises(ConfigError):
        StepControl(method="euler")
    with pytest.raises(ConfigError):
        StepControl(tol=0.0)


def test_max_steps_exceeded(oscillator):
    with pytest.raises(StepUnderflowError):
        flow_points(oscillator, np.array([1.0, 0.0]), 10.0, StepControl(max_steps=3))


def test_escape_box_detection(cartesian):
    boxed = cartesian.with_escape_box({"q": (-1.0, 1.0)})
    H = HamiltonianField.from_expr(boxed, "p")
    with pytest.raises(FlowEscapeError) as excinfo:
        flow_points(H, np.array([[0.0, 0.0], [0.5, 0.0]]), 2.0)
    assert excinfo.value.count >= 1
    assert 0.0 < excinfo.value.time <= 2.0


# ==================== 哈密顿流 ====================


def test_symplectic_gradient_convention(oscillator):
    # X_H = Π∇H：q̇ = ∂H/∂p，ṗ = −∂H/∂q
    assert np.allclose(symplectic_gradient(oscillator, np.array([1.0, 2.0])), [2.0, -1.0])


def test_harmonic_oscillator_returns_after_full_period(oscillator):
    starts = np.array([[1.0, 0.0], [0.0, 0.5], [-0.3, 0.7]])
    result = flow_points(oscillator, starts, 2 * math.pi)
    assert np.max(np.abs(result.final - starts)) <= 1e-6


def test_harmonic_oscillator_quarter_period(oscillator):
    final = flow_points(oscillator, np.array([1.0, 0.0]), math.pi / 2, StepControl(tol=1e-12)).final
    assert np.allclose(final, [0.0, -1.0], atol=1e-9)


def test_leapfrog_on_separable_hamiltonian(oscillator):
    control = StepControl(dt_init=1e-3, method="splitting")
    start = np.array([1.0, 0.0])
    final = flow_points(oscillator, start, 2 * math.pi, control).final
    assert np.max(np.abs(final - start)) <= 1e-5
    assert abs(oscillator(final) - oscillator(start)) <= 1e-6


def test_splitting_rejects_non_separable(cartesian):
    H = HamiltonianField.from_expr(cartesian, "q*p")
    with pytest.raises(FieldError):
        flow_points(H, np.array([1.0, 1.0]), 1.0, StepControl(method="splitting"))


def test_splitting_rejects_polar(polar):
    H = HamiltonianField.from_expr(polar, "r**2")
    with pytest.raises(ChartError):
        flow_points(H, np.array([1.0, 0.0]), 1.0, StepControl(method="splitting"))


def test_trajectory_records_steps(oscillator):
    trajectory = advance_flow(oscillator, np.array([1.0, 0.0]), 1.0)
    assert len(trajectory.times) > 2
    assert np.all(np.diff(trajectory.times) > 0)
    assert trajectory.csv_rows().shape == (len(trajectory.times), 4)
    assert trajectory.csv_header() == ["t", "q", "p", "H"]
    assert trajectory.energy_drift <= 1e-7


@pytest.mark.parametrize("name", ["polterovich_polar", "cylinder_heisenberg", "remark2_cartesian"])
@pytest.mark.parametrize("n", [1, 4])
def test_gallery_flows_conserve_energy(name, n):
    entry = gallery(name)
    H = entry.images(n)[entry.pair[1]]
    start = entry.flow_grid(n).points().reshape(-1, entry.chart.dim)[27]
    t = 0.5
    trajectory = advance_flow(H, start, t, StepControl(tol=1e-12))
    assert trajectory.energy_drift <= 1e-8 * t


def test_flow_map_identity_at_zero(oscillator):
    grid = GridSpec.of((-1.0, 1.0, 5), (-1.0, 1.0, 5))
    mapping = flow_map(oscillator, 0.0, grid)
    assert mapping.displacement() == 0.0


def test_pullback_of_coordinate_under_rotation(oscillator, cartesian):
    grid = GridSpec.of((-1.0, 1.0, 5), (-1.0, 1.0, 5))
    q = HamiltonianField.from_expr(cartesian, "q")
    pulled = pullback(q, oscillator, math.pi / 2, grid, StepControl(tol=1e-12))
    # 四分之一周期后 q ↦ p
    assert np.allclose(pulled.samples, grid.points()[..., 1], atol=1e-9)


# ==================== 共轭流 ====================


@pytest.mark.parametrize("r0", [0.6, 0.8, 1.0])
def test_conjugated_flow_matches_pullback_flow(r0):
    entry = gallery("polterovich_polar")
    images = entry.images(1)
    f, g = images["f"], images["g"]
    s, t = 0.5, 0.2
    start = np.array([r0, math.pi / 2])
    inner = StepControl(tol=1e-12)

    direct = conjugated_flow(f, g, s, t, start, inner)
    pulled = pullback_hamiltonian(f, g, s, inner)
    via_pullback = flow_points(pulled, start, t, StepControl(tol=1e-8)).final

    assert np.max(np.abs(direct - via_pullback)) <= 1e-4
    # n = 1 时 F₁ = x, G₁ = y，共轭流把 (0, r) 平移到 (0, r − t)
    assert np.allclose(direct, [r0 - t, math.pi / 2], atol=1e-8)


def test_commutator_flow_of_commuting_pair(oscillator, cartesian):
    K = HamiltonianField.from_expr(cartesian, "(q**2 + p**2)**2")
    start = np.array([0.4, -0.2])
    final = commutator_flow(oscillator, K, 0.3, 0.4, start, StepControl(tol=1e-12))
    assert np.allclose(final, start, atol=1e-8)


def test_commutator_flow_of_translations(cartesian):
    H = HamiltonianField.from_expr(cartesian, "q")
    K = HamiltonianField.from_expr(cartesian, "p")
    lead = HamiltonianField.constant(cartesian, 1.0)
    start = np.array([0.1, 0.2])
    assert np.allclose(commutator_flow(H, K, 0.7, 0.3, start, lead=lead), start, atol=1e-12)


# ==================== 交换子生成函数 ====================


@pytest.fixture
def generator(cartesian, oscillator):
    H = HamiltonianField.from_expr(cartesian, "sin(q)*cos(p)", "H")
    return commutator_generator(H, oscillator, 0.5, StepControl(tol=1e-12))


def test_generator_matches_closed_form(generator):
    points = np.array([[0.3, -0.4], [1.0, 0.5], [-0.7, 0.2]])
    assert np.max(np.abs(generator.value(0.2, points) - generator.closed_form(0.2, points))) <= 1e-6


def test_generator_vanishes_for_zero_s(cartesian, oscillator):
    H = HamiltonianField.from_expr(cartesian, "sin(q)*cos(p)")
    zero = commutator_generator(H, oscillator, 0.0)
    assert np.all(zero.value(0.3, np.array([[0.1, 0.2]])) == 0.0)


def test_generated_flow_reproduces_commutator(cartesian, oscillator):
    H = HamiltonianField.from_expr(cartesian, "sin(q)*cos(p)", "H")
    s, t = 0.3, 0.2
    generator = commutator_generator(H, oscillator, s, StepControl(tol=1e-11))
    start = np.array([0.3, -0.4])
    expected = commutator_flow(H, oscillator, s, t, start, StepControl(tol=1e-12))
    actual = generated_flow(generator, start, t, StepControl(tol=1e-9))
    assert np.max(np.abs(actual - expected)) <= 1e-5


# ==================== 线性增长证书 ====================


def test_polar_model_field_growth(polar):
    bound = linear_growth_bound(polar_model_field(4), 0.05, 10.0, chart=polar)
    assert bound.a == pytest.approx(2.0, abs=1e-6)
    assert bound.b == pytest.approx(0.4, abs=1e-6)
    assert polar_growth_caps(4) == pytest.approx((2.2, 0.6))


@pytest.mark.parametrize("n", [1, 4, 16, 64])
def test_polar_model_field_growth_within_caps(polar, n):
    bound = linear_growth_bound(polar_model_field(n), 0.05, 10.0, chart=polar)
    a_max, b_max = polar_growth_caps(n)
    assert bound.a == pytest.approx(np.sqrt(n), rel=1e-6)
    assert bound.a <= a_max
    assert bound.b <= b_max


def test_oscillator_growth(oscillator):
    bound = linear_growth_bound(oscillator, 0.1, 5.0)
    assert bound.a == pytest.approx(1.0, abs=1e-6)
    assert bound.b == pytest.approx(0.0, abs=1e-6)


def test_superlinear_growth_rejected(cartesian):
    H = HamiltonianField.from_expr(cartesian, "q**3")
    with pytest.raises(GrowthFitError):
        linear_growth_bound(H, 0.1, 10.0)


def test_explicit_field_needs_chart():
    with pytest.raises(ChartError):
        linear_growth_bound(polar_model_field(1), 0.1, 1.0)
