"""实验调度与摘要文本测试"""

import threading

import pytest

from pseudorep_lab.core.reporter import Reporter
from pseudorep_lab.core.runner import ExperimentRunner
from pseudorep_lab.models.report import (
    CommutatorReport,
    DistributionReport,
    SymplecticReport,
)

# ==================== 调度 ====================


@pytest.mark.parametrize("workers", [1, 2, 4])
def test_results_keep_task_order(workers):
    seen = []
    runner = ExperimentRunner("demo", workers=workers, on_result=lambda key, value: seen.append(key))
    tasks = [(n, lambda n=n: n * n) for n in (1, 4, 16, 64)]
    assert runner.run(tasks) == [1, 16, 256, 4096]
    assert sorted(seen) == [1, 4, 16, 64]
    assert runner.completed == 4


def test_workers_clamped_to_one():
    assert ExperimentRunner("demo", workers=0).workers == 1


def test_callbacks_are_serialized():
    active = []
    overlap = []
    lock = threading.Lock()

    def on_result(key, value):
        with lock:
            active.append(key)
            if len(active) > 1:
                overlap.append(key)
        with lock:
            active.remove(key)

    runner = ExperimentRunner("demo", workers=4, on_result=on_result)
    runner.run([(i, lambda i=i: i) for i in range(16)])
    assert overlap == []


def test_task_error_is_reraised_and_stops_serial_run():
    calls = []

    def failing():
        raise RuntimeError("boom")

    tasks = [("a", lambda: calls.append("a")), ("b", failing), ("c", lambda: calls.append("c"))]
    runner = ExperimentRunner("demo")
    with pytest.raises(RuntimeError, match="boom"):
        runner.run(tasks)
    assert calls == ["a"]


def test_callback_error_is_reraised():
    def on_result(key, value):
        raise ValueError("bad callback")

    with pytest.raises(ValueError):
        ExperimentRunner("demo", on_result=on_result).run([(1, lambda: 1)])


def test_stopped_runner_restarts_on_run():
    runner = ExperimentRunner("demo")
    runner.stop()
    assert runner.run([(1, lambda: "x")]) == ["x"]


# ==================== 摘要 ====================


@pytest.fixture
def reporter():
    return Reporter()


def test_bracket_summary(reporter):
    text = reporter.build_bracket_summary("polterovich_polar", 4, "exact", 1.0, 0.0)
    assert "n = 4" in text
    assert "偏离常数: 0" in text
    assert "偏离常数" not in reporter.build_bracket_summary("x", 1, "fd", 2.0, None)


def test_distribution_summary(reporter):
    report = DistributionReport(
        "prop6", "remark2", "hypothesis_violated_no_convergence", [0.2, 0.2], hypothesis_met=False
    )
    text = reporter.build_distribution_summary(report)
    assert "remark2" in text
    assert "⚠️" in text
    assert text.endswith("判定: hypothesis_violated_no_convergence")


def test_symplectic_summary(reporter):
    report = SymplecticReport("scaling", [[0.0, 3.0], [-3.0, 0.0]], 3.0, 4.0)
    text = reporter.build_symplectic_summary(report)
    assert text.startswith("🔁 辛性判据: scaling")
    assert "残差: 3" in text


def test_commutator_summary(reporter):
    report = CommutatorReport(0.3, 0.3, 0.0, 1e-13, lemma9_residual=0.0, passed=True)
    text = reporter.build_commutator_summary(report)
    assert "{H+u,K+v}" in text
    assert text.endswith("通过")


def test_golden_summary(reporter):
    text = reporter.build_golden_summary({"b": 0.5, "a": 0.25}, {"b": (0.5, 0.75)})
    lines = text.splitlines()
    assert lines.index("a: 0.25") < lines.index("b: 0.5")
    assert "❌ b: 已存 0.5，新值 0.75" in lines
