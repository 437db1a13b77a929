"""实验摘要文本构建模块"""

from __future__ import annotations

from ..models.report import (
    CommutatorReport,
    DefectReport,
    DistributionReport,
    Lemma3Report,
    LimitReport,
    SymplecticReport,
)

RULE = "━━━━━━━━━━━━━━"


def _fmt(value: float | None) -> str:
    return "—" if value is None else f"{value:.6g}"


class Reporter:
    """摘要构建器

    负责把各实验的报告整理成命令行输出的多行文本。
    """

    def build_bracket_summary(self, entry: str, n: int, mode: str, norm: float, deviation: float | None) -> str:
        """构建括号场摘要

        Args:
            entry: 画廊条目
            n: 序列指标
            mode: exact / fd
            norm: 括号场的 C⁰ 范数
            deviation: 与常数的最大偏差（场在网格上为常数时）

        Returns:
            格式化的摘要
        """
        lines = [
            "📐 Poisson 括号",
            RULE,
            f"条目: {entry}  n = {n}  模式: {mode}",
            f"‖{{F,G}}‖: {_fmt(norm)}",
        ]
        if deviation is not None:
            lines.append(f"偏离常数: {_fmt(deviation)}")
        return "\n".join(lines)

    def build_convergence_summary(self, entry: str, report: LimitReport, expected: str) -> str:
        """构建收敛实验摘要"""
        defects = "、".join(_fmt(d) for d in report.defect_norms)
        distances = "、".join(_fmt(d) for d in report.limit_distances)
        mark = "✅" if report.verdict == expected else "❌"
        return (
            f"📊 画廊收敛: {entry}\n"
            f"{RULE}\n"
            f"亏量 ‖Bₙ‖: {defects}\n"
            f"到极限距离: {distances}\n"
            f"极限括号残差: {_fmt(report.limit_residual)}\n"
            f"括号差（最后一个 n）: {_fmt(report.bracket_gap)}\n"
            f"{RULE}\n"
            f"{mark} 判定: {report.verdict}（预期 {expected}）"
        )

    def build_lemma3_summary(self, entry: str, reports: list[Lemma3Report]) -> str:
        """构建拉回残差摘要（每行一个 (n, s)）"""
        passed = sum(r.passed for r in reports)
        rows = [
            f"n={r.n:<3} s={r.s:<5} L={_fmt(r.residual):<12} B={_fmt(r.bound):<12} {'通过' if r.passed else '失败'}"
            for r in reports
        ]
        return "\n".join([f"🧮 拉回与 ad 级数: {entry}", RULE, *rows, RULE, f"通过 {passed}/{len(reports)}"])

    def build_defect_summary(self, entry: str, reports: list[DefectReport]) -> str:
        rows = [f"n={r.n:<3} ‖Bₙ‖={_fmt(r.defect_norm)}（{r.f_label}, {r.g_label}）" for r in reports]
        if reports:
            rows.append(f"R = {_fmt(reports[0].rep_norm)}  C = {_fmt(reports[0].bracket_constant)}")
        return "\n".join([f"📉 亏量范数: {entry}", RULE, *rows])

    def build_flow_summary(self, label: str, t: float, displacement: float, drift: float | None = None) -> str:
        """构建流映射摘要"""
        text = f"🌀 哈密顿流: {label}\n{RULE}\nt = {t}\n最大位移: {_fmt(displacement)}"
        if drift is not None:
            text += f"\n能量漂移: {_fmt(drift)}"
        return text

    def build_distribution_summary(self, report: DistributionReport) -> str:
        """构建分布配对摘要"""
        lines = [
            f"🧪 分布收敛 {report.experiment}: {report.family}",
            RULE,
            f"误差: {'、'.join(_fmt(e) for e in report.errors)}",
        ]
        if report.decrease_ratio is not None:
            lines.append(f"首末误差比: {_fmt(report.decrease_ratio)}")
        if report.fit_constant is not None:
            lines.append(f"拟合常数 c: {_fmt(report.fit_constant)}  截距: {_fmt(report.fit_intercept)}")
        if not report.hypothesis_met:
            lines.append("⚠️ 函数族不满足收敛假设（演示例）")
        lines.extend([RULE, f"判定: {report.verdict}"])
        return "\n".join(lines)

    def build_symplectic_summary(self, report: SymplecticReport) -> str:
        """构建辛性判据摘要"""
        matrix = "\n".join("  " + "  ".join(f"{v:10.3e}" for v in row) for row in report.matrix)
        return (
            f"🔁 辛性判据: {report.map_name}\n"
            f"{RULE}\n"
            f"{matrix}\n"
            f"{RULE}\n"
            f"残差: {_fmt(report.residual)}  min|det DΦ|: {_fmt(report.min_jacobian)}"
        )

    def build_commutator_summary(self, report: CommutatorReport) -> str:
        """构建交换子流摘要"""
        text = (
            f"🔀 交换子流 s={report.s} t={report.t}\n"
            f"{RULE}\n"
            f"终点偏差: {_fmt(report.discrepancy)}\n"
            f"离恒等: {_fmt(report.identity_defect)}"
        )
        if report.lemma9_residual is not None:
            text += f"\n{{H+u,K+v}} − (G+w): {_fmt(report.lemma9_residual)}"
        if report.split_error is not None:
            text += f"\n分裂误差: {_fmt(report.split_error)}"
        return text + f"\n{RULE}\n{'通过' if report.passed else '失败'}"

    def build_golden_summary(self, constants: dict[str, float], mismatches: dict[str, tuple[float, float]]) -> str:
        """构建黄金常数摘要

        Args:
            constants: 新计算的常数
            mismatches: 名称 -> (已存值, 新值)，超出容限者
        """
        rows = [f"{name}: {value!r}" for name, value in sorted(constants.items())]
        if mismatches:
            rows.append(RULE)
            rows.extend(f"❌ {name}: 已存 {old!r}，新值 {new!r}" for name, (old, new) in sorted(mismatches.items()))
        return "\n".join(["🏅 黄金常数", RULE, *rows])
