"""Models module exports"""

from .chart import Chart, make_chart
from .config import ExperimentConfig, StepControl, Tolerances, load_config_file
from .grid import AxisSpec, GridField, GridSpec, TestFunction
from .report import (
    CommutatorReport,
    DefectReport,
    DistributionReport,
    Lemma3Report,
    LimitReport,
    ResultTable,
    SymplecticReport,
)

__all__ = [
    "AxisSpec",
    "Chart",
    "CommutatorReport",
    "DefectReport",
    "DistributionReport",
    "ExperimentConfig",
    "GridField",
    "GridSpec",
    "Lemma3Report",
    "LimitReport",
    "ResultTable",
    "StepControl",
    "SymplecticReport",
    "TestFunction",
    "Tolerances",
    "load_config_file",
    "make_chart",
]
