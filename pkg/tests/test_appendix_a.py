"""仿射于无穷远的哈密顿量、辛性判据与交换子流测试"""

import warnings

import numpy as np
import pytest

from pseudorep_lab.experiments.appendix_a import (
    AffineHamiltonian,
    affine_commutator_check,
    compact_bump,
    lemma9_combination,
    named_map,
    symplectic_check,
)
from pseudorep_lab.models.config import StepControl
from pseudorep_lab.models.grid import GridSpec
from pseudorep_lab.utils.errors import ChartError, DegenerateJacobianWarning, FieldError

SQUARE = GridSpec.of((-1.0, 1.0, 65), (-1.0, 1.0, 65))
START_GRID = GridSpec.of((-2.0, 2.0, 9), (-2.0, 2.0, 9))


# ==================== 仿射哈密顿量 ====================


def test_affine_hamiltonian_rejects_polar(polar):
    with pytest.raises(ChartError):
        AffineHamiltonian(None, (1.0, 0.0), chart=polar)


def test_affine_hamiltonian_covector_length(cartesian):
    with pytest.raises(ChartError):
        AffineHamiltonian(None, (1.0, 0.0, 0.0), chart=cartesian)


def test_support_radius_is_checked(cartesian):
    with pytest.raises(FieldError):
        AffineHamiltonian(compact_bump(cartesian, (0.0, 0.0), 1.0), (0.0, 0.0), support_radius=0.5)


def test_pure_affine_flow_is_translation(cartesian):
    H = AffineHamiltonian(None, (1.0, 0.0), constant=3.0, chart=cartesian)
    assert H.is_affine
    points = np.array([[0.0, 0.0], [1.0, -1.0]])
    # X_q = (0, −1)
    assert np.allclose(H.flow(points, 0.5), points + np.array([0.0, -0.5]))
    assert float(H.as_field()(np.array([2.0, 5.0]))) == pytest.approx(5.0)


def test_strang_splitting_agrees_with_direct_flow(cartesian):
    H = AffineHamiltonian(compact_bump(cartesian, (0.0, 0.0), 1.0), (0.5, 0.0), support_radius=1.0)
    assert not H.is_affine
    points = np.array([[0.2, -0.1], [-0.4, 0.3], [1.5, 0.0]])
    control = StepControl(dt_init=0.01, tol=1e-12)
    direct = H.flow(points, 0.5, control, method="direct")
    split, error = H.flow_with_error(points, 0.5, control)
    assert error < 1e-2
    assert np.max(np.abs(split - direct)) <= error + 1e-8
    with pytest.raises(ValueError):
        H.flow(points, 0.5, control, method="magnus")


def test_compact_bump_amplitude(cartesian):
    bump = compact_bump(cartesian, (1.0, -1.0), 0.5, amplitude=2.0)
    assert float(bump(np.array([1.0, -1.0]))) == pytest.approx(2.0)
    assert float(bump(np.array([1.6, -1.0]))) == 0.0


# ==================== 辛性判据 ====================


@pytest.mark.parametrize("name", ["identity", "shear", "translation", "twist"])
def test_symplectic_maps_pass(name):
    report = symplectic_check(named_map(name), SQUARE, name=name)
    assert report.residual <= 1e-6
    assert report.map_name == name


def test_scaling_is_not_symplectic():
    report = symplectic_check(named_map("scaling"), SQUARE, name="scaling")
    assert report.residual == pytest.approx(3.0, abs=1e-6)
    assert report.matrix[0][0] == 0.0
    assert report.min_jacobian == pytest.approx(4.0)


@pytest.mark.slow
def test_bump_flow_is_symplectic():
    grid = GridSpec.of((-1.2, 1.2, 49), (-1.2, 1.2, 49))
    assert symplectic_check(named_map("bump_flow"), grid, name="bump_flow").residual <= 1e-4


def test_degenerate_jacobian_warns():
    def collapse(x):
        return np.stack([x[..., 0], np.zeros_like(x[..., 1])], axis=-1)

    with pytest.warns(DegenerateJacobianWarning):
        report = symplectic_check(collapse, SQUARE, name="collapse")
    assert report.min_jacobian == 0.0
    assert report.residual == pytest.approx(1.0)


def test_odd_dimensional_grid_rejected():
    grid = GridSpec.of((-1.0, 1.0, 9), (-1.0, 1.0, 9), (-1.0, 1.0, 9))
    with pytest.raises(ChartError):
        symplectic_check(named_map("identity"), grid)


def test_unknown_map():
    with pytest.raises(ChartError):
        named_map("baker")


def test_four_dimensional_identity_has_no_warning():
    grid = GridSpec.of(*[(-1.0, 1.0, 9)] * 4)
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegenerateJacobianWarning)
        report = symplectic_check(lambda x: np.array(x, dtype=float), grid)
    assert report.residual <= 1e-12


# ==================== 交换子流 ====================


def test_translation_commutator(cartesian):
    H = AffineHamiltonian(None, (1.0, 0.0), chart=cartesian)
    K = AffineHamiltonian(None, (0.0, 1.0), chart=cartesian)
    report = affine_commutator_check(H, K, 0.3, 0.3, START_GRID)
    assert report.passed
    assert report.identity_defect <= 1e-12
    assert report.lemma9_residual is None


def test_zero_commutator(cartesian):
    zero = AffineHamiltonian(None, (0.0, 0.0), chart=cartesian)
    report = affine_commutator_check(zero, zero, 0.3, 0.3, START_GRID)
    assert report.passed
    assert report.discrepancy == 0.0


def test_disjoint_bumps_commute(cartesian):
    H = AffineHamiltonian(compact_bump(cartesian, (-1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5)
    K = AffineHamiltonian(compact_bump(cartesian, (1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5)
    report = affine_commutator_check(H, K, 0.3, 0.3, START_GRID)
    assert report.passed
    assert report.identity_defect <= 1e-6


def test_lemma9_combination_for_translations(cartesian):
    H = AffineHamiltonian(None, (1.0, 0.0), chart=cartesian)
    K = AffineHamiltonian(None, (0.0, 1.0), chart=cartesian)
    G = AffineHamiltonian(None, (0.0, 0.0), constant=1.0, chart=cartesian)
    assert lemma9_combination(H, K, G, START_GRID) == 0.0
    report = affine_commutator_check(H, K, 0.3, 0.3, START_GRID, lead=G)
    assert report.lemma9_residual == 0.0
    assert report.passed


def test_commutator_check_flows_by_splitting(cartesian, monkeypatch):
    calls = []
    strang = AffineHamiltonian._strang

    def counting(self, points, t, steps, control):
        calls.append(steps)
        return strang(self, points, t, steps, control)

    monkeypatch.setattr(AffineHamiltonian, "_strang", counting)
    H = AffineHamiltonian(compact_bump(cartesian, (-0.5, 0.0), 0.5), (0.2, 0.0), support_radius=1.0)
    K = AffineHamiltonian(compact_bump(cartesian, (0.5, 0.0), 0.5), (0.0, 0.3), support_radius=1.0)
    grid = GridSpec.of((-1.0, 1.0, 5), (-1.0, 1.0, 5))
    report = affine_commutator_check(H, K, 0.2, 0.2, grid, StepControl(dt_init=0.05))
    # 四段流，每段粗细各一次
    assert len(calls) == 8
    assert report.method == "splitting"
    assert report.split_error is not None
    assert report.split_error > 0.0
    assert report.discrepancy <= 1e-2
    assert report.to_dict()["split_error"] == report.split_error


def test_commutator_check_direct_method_skips_splitting(cartesian, monkeypatch):
    calls = []
    monkeypatch.setattr(AffineHamiltonian, "_strang", lambda *args: calls.append(args))
    H = AffineHamiltonian(compact_bump(cartesian, (-1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5)
    K = AffineHamiltonian(compact_bump(cartesian, (1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5)
    report = affine_commutator_check(H, K, 0.3, 0.3, START_GRID, method="direct")
    assert calls == []
    assert report.method == "direct"
    assert report.split_error is None
    assert report.passed


def test_commutator_check_rejects_unknown_method(cartesian):
    zero = AffineHamiltonian(None, (0.0, 0.0), chart=cartesian)
    with pytest.raises(ValueError):
        affine_commutator_check(zero, zero, 0.3, 0.3, START_GRID, method="magnus")


def test_affine_flow_defaults_to_splitting(cartesian):
    H = AffineHamiltonian(compact_bump(cartesian, (0.0, 0.0), 1.0), (0.5, 0.0), support_radius=1.0)
    points = np.array([[0.2, -0.1], [-0.4, 0.3]])
    control = StepControl(dt_init=0.05)
    assert np.array_equal(H.flow(points, 0.3, control), H.flow(points, 0.3, control, method="splitting"))


def test_bump_flow_builds_tighter_control(monkeypatch):
    factors = []
    tighter = StepControl.tighter

    def recording(self, factor=10.0):
        factors.append(factor)
        return tighter(self, factor)

    monkeypatch.setattr(StepControl, "tighter", recording)
    outside = np.array([[2.0, 0.0], [0.0, -1.5]])
    assert np.allclose(named_map("bump_flow")(outside), outside)
    assert factors == [100.0]
