"""命令行入口测试（退出码与产物）"""

import json

import pytest
from click.testing import CliRunner

from pseudorep_lab.main import cli
from pseudorep_lab.utils.constants import EXIT_CONFIG, EXIT_OK, EXIT_TOLERANCE


@pytest.fixture
def invoke(tmp_path):
    runner = CliRunner()

    def _invoke(*args: str):
        return runner.invoke(cli, ["--output-dir", str(tmp_path), *args])

    return _invoke


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


def test_sympcheck_scaling_is_reported_not_symplectic(invoke, tmp_path):
    result = invoke("sympcheck", "--map", "scaling")
    assert result.exit_code == EXIT_OK, result.output
    data = read_json(tmp_path / "sympcheck_scaling.json")
    assert data["report"]["residual"] == pytest.approx(3.0, abs=1e-6)
    assert data["symplectic"] is False
    assert data["tol"] == 1e-6


def test_run_group_alias(invoke, tmp_path):
    result = invoke("run", "sympcheck", "--map", "shear", "--points", "33")
    assert result.exit_code == EXIT_OK, result.output
    assert read_json(tmp_path / "sympcheck_shear.json")["symplectic"] is True


def test_unknown_map_is_config_error(invoke):
    assert invoke("sympcheck", "--map", "baker").exit_code == EXIT_CONFIG


def test_unknown_entry_is_config_error(invoke):
    assert invoke("defect", "--entry", "torus").exit_code == EXIT_CONFIG


def test_config_file_overrides_and_is_validated(invoke, tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"n_set": [4, 1]}), encoding="utf-8")
    result = CliRunner().invoke(cli, ["--config", str(config), "--output-dir", str(tmp_path), "defect"])
    assert result.exit_code == EXIT_CONFIG
    assert invoke("--config", str(tmp_path / "missing.json"), "defect").exit_code == EXIT_CONFIG


def test_bad_n_list_is_usage_error(invoke):
    assert invoke("defect", "--n", "1,x").exit_code == 2


def test_bracket_writes_field_csv(invoke, tmp_path):
    result = invoke("bracket", "--entry", "polterovich_polar", "--n", "4")
    assert result.exit_code == EXIT_OK, result.output
    csv_text = (tmp_path / "bracket_polterovich_polar_n4.csv").read_text(encoding="utf-8")
    assert csv_text.startswith("# chart=polar_r2")
    summary = read_json(tmp_path / "bracket_polterovich_polar_n4.json")
    assert summary["mean"] == pytest.approx(1.0, abs=1e-10)
    assert summary["deviation_from_mean"] <= 1e-10


def test_bracket_of_expressions(invoke, tmp_path):
    result = invoke("bracket", "--f", "q", "--g", "p")
    assert result.exit_code == EXIT_OK, result.output
    assert read_json(tmp_path / "bracket_cartesian.json")["mean"] == pytest.approx(1.0)


def test_defect_output_is_reproducible(invoke, tmp_path):
    names = ["defect_remark2_cartesian.csv", "defect_remark2_cartesian.json"]
    assert invoke("defect", "--entry", "remark2_cartesian", "--n", "1,4").exit_code == EXIT_OK
    first = [(tmp_path / name).read_bytes() for name in names]
    assert invoke("defect", "--entry", "remark2_cartesian", "--n", "1,4").exit_code == EXIT_OK
    assert [(tmp_path / name).read_bytes() for name in names] == first


def test_gallery_verdict_written(invoke, tmp_path):
    result = invoke("gallery", "--entry", "polterovich_polar", "--n", "1,4,16")
    assert result.exit_code == EXIT_OK, result.output
    data = read_json(tmp_path / "verdict_polterovich_polar.json")
    assert data["report"]["verdict"] == "noncompact_caveat"
    assert (tmp_path / "convergence_polterovich_polar.csv").read_text(encoding="utf-8").startswith("n,dist_f,")


def test_commutator_translation(invoke, tmp_path):
    result = invoke("commutator", "--case", "translation")
    assert result.exit_code == EXIT_OK, result.output
    assert read_json(tmp_path / "commutator_translation.json")["report"]["passed"] is True


def test_prop7_mismatch_is_expected_failure(invoke, tmp_path):
    result = invoke("prop7", "--mismatch")
    assert result.exit_code == EXIT_OK, result.output
    assert read_json(tmp_path / "prop7_constant.json")["report"]["verdict"] == "mismatch"


@pytest.mark.slow
def test_golden_refuses_to_overwrite_changed_constants(invoke, tmp_path):
    args = ("golden", "--scan-points", "20001")
    assert invoke(*args).exit_code == EXIT_OK
    assert invoke(*args).exit_code == EXIT_OK

    path = tmp_path / "goldens.json"
    data = read_json(path)
    data["cylinder_kappa"] = 0.75
    path.write_text(json.dumps(data), encoding="utf-8")
    assert invoke(*args).exit_code == EXIT_TOLERANCE
    assert read_json(path)["cylinder_kappa"] == 0.75

    assert invoke(*args, "--force").exit_code == EXIT_OK
    assert read_json(path)["cylinder_kappa"] == pytest.approx(0.5)


def test_flow_fails_when_growth_certificate_exceeds_caps(invoke, tmp_path, monkeypatch):
    monkeypatch.setattr("pseudorep_lab.main.linear_growth_bound", lambda *args, **kwargs: (100.0, 100.0))
    result = invoke("flow", "--entry", "polterovich_polar", "--n", "1")
    assert result.exit_code == EXIT_TOLERANCE, result.output
    certificate = read_json(tmp_path / "flow_polterovich_polar.json")["growth_certificate"]
    assert certificate["1"]["a"] == 100.0
    assert certificate["1"]["a_max"] == pytest.approx(1.1)


def test_flow_passes_with_real_growth_certificate(invoke, tmp_path):
    result = invoke("flow", "--entry", "polterovich_polar", "--n", "1")
    assert result.exit_code == EXIT_OK, result.output
    certificate = read_json(tmp_path / "flow_polterovich_polar.json")["growth_certificate"]
    assert certificate["1"]["a"] <= certificate["1"]["a_max"]
    assert certificate["1"]["b"] <= certificate["1"]["b_max"]


def test_commutator_reports_splitting_error(invoke, tmp_path):
    result = invoke("commutator", "--case", "disjoint")
    assert result.exit_code == EXIT_OK, result.output
    report = read_json(tmp_path / "commutator_disjoint.json")["report"]
    assert report["method"] == "splitting"
    assert report["split_error"] is not None
    assert "分裂误差" in result.output


def test_commutator_direct_method(invoke, tmp_path):
    result = invoke("commutator", "--case", "translation", "--method", "direct")
    assert result.exit_code == EXIT_OK, result.output
    report = read_json(tmp_path / "commutator_translation.json")["report"]
    assert report["method"] == "direct"
    assert report["split_error"] is None
