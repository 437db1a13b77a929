"""画廊条目沿 n 序列的收敛实验"""

from __future__ import annotations

import numpy as np

from ..core.geometry import bracket_hamiltonian, c0_norm, sample_field
from ..core.pseudo_rep import (
    PseudoRepresentation,
    defect_norm,
    lemma3_residual,
    limit_representation_check,
    rho,
)
from ..core.runner import ExperimentRunner
from ..models.config import StepControl, Tolerances
from ..models.report import Lemma3Report, LimitReport, ResultTable
from .gallery import GalleryEntry


def _convergence_row(rep: PseudoRepresentation, entry: GalleryEntry, n: int) -> list:
    f, g = entry.lemma_pair()
    limits = np.stack([sample_field(rep.chart, rep.grid, image).samples for image in rep.limit_images])
    distances = np.max(np.abs(rep.image_samples(n) - limits).reshape(rep.algebra.dim, -1), axis=1)
    bracket = sample_field(rep.chart, rep.grid, bracket_hamiltonian(rho(rep, n, f), rho(rep, n, g)))
    report = defect_norm(rep, n)
    return [n, *(float(d) for d in distances), report.defect_norm, c0_norm(bracket)]


def run_convergence(
    entry: GalleryEntry,
    n_set: tuple[int, ...],
    tolerances: Tolerances | None = None,
    workers: int = 1,
) -> tuple[ResultTable, LimitReport]:
    """逐 n 计算 ‖ρₙ(eᵢ) − ρ(eᵢ)‖、‖Bₙ‖ 与 ‖{ρₙf, ρₙg}‖，最后给出极限检查判定

    Returns:
        (结果表, 极限检查报告)
    """
    rep = entry.representation(n_set)
    labels = rep.algebra.basis_labels
    table = ResultTable(
        f"convergence_{entry.name}",
        ["n", *(f"dist_{label}" for label in labels), "defect_norm", "bracket_norm"],
    )
    runner: ExperimentRunner[list] = ExperimentRunner(entry.name, workers)
    rows = runner.run([(n, lambda n=n: _convergence_row(rep, entry, n)) for n in rep.n_set])
    for row in rows:
        table.add_row(*row)
    f, g = entry.lemma_pair()
    return table, limit_representation_check(rep, f, g, tolerances)


def run_lemma3(
    entry: GalleryEntry,
    n_set: tuple[int, ...],
    s_values: tuple[float, ...],
    N: int,
    tolerances: Tolerances | None = None,
    control: StepControl | None = None,
    workers: int = 1,
) -> tuple[ResultTable, list[Lemma3Report]]:
    """在每个 (n, s) 上计算拉回残差与上界"""
    tolerances = tolerances or Tolerances()
    rep = entry.representation(n_set)
    f, g = entry.lemma_pair()
    tasks = [
        ((n, s), lambda n=n, s=s: lemma3_residual(rep, n, f, g, s, N, tolerances, control))
        for n in rep.n_set
        for s in s_values
    ]
    reports = ExperimentRunner(f"lemma3 {entry.name}", workers).run(tasks)
    table = ResultTable(f"lemma3_{entry.name}", list(Lemma3Report.CSV_COLUMNS))
    for report in reports:
        table.add_row(*report.row())
    return table, reports
