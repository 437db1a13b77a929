"""测试共享夹具"""

from __future__ import annotations

import numpy as np
import pytest
import sympy as sp

from pseudorep_lab.core.fields import HamiltonianField
from pseudorep_lab.models.chart import Chart, make_chart
from pseudorep_lab.utils import logger
from pseudorep_lab.utils.constants import DEFAULT_SEED, OUTPUT_DIR_ENV


@pytest.fixture
def cartesian() -> Chart:
    return make_chart("cartesian", n=1)


@pytest.fixture
def polar() -> Chart:
    return make_chart("polar_r2")


@pytest.fixture
def cylinder() -> Chart:
    return make_chart("cylinder_s1")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(DEFAULT_SEED)


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """把产物目录指向临时目录"""
    directory = tmp_path / "out"
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(directory))
    return directory


@pytest.fixture(autouse=True)
def _reset_logger():
    """命令行测试会给包日志挂 stderr 处理器，每个用例后摘掉"""
    yield
    for handler in list(logger.handlers):
        logger.removeHandler(handler)


def trig_polynomial(chart: Chart, rng: np.random.Generator, degree: int = 2, label: str = "") -> HamiltonianField:
    """随机三角多项式 Σ aₖₗ cos(kq + lp) + bₖₗ sin(kq + lp)（|k|, |l| ≤ degree）"""
    q, p = chart.symbols()
    expr = sp.Integer(0)
    for k in range(-degree, degree + 1):
        for l in range(0, degree + 1):
            if l == 0 and k <= 0:
                continue
            a, b = rng.normal(size=2) / (1 + k * k + l * l)
            expr += sp.Float(a) * sp.cos(k * q + l * p) + sp.Float(b) * sp.sin(k * q + l * p)
    expr += sp.Float(rng.normal())
    return HamiltonianField.from_expr(chart, expr, label)


@pytest.fixture
def make_trig():
    return trig_polynomial
