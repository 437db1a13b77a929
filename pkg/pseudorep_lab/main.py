"""伪表示数值实验室命令行入口

命令列表:
- pseudorep bracket [--entry 条目] [--n n] [--mode exact|fd] - 计算括号场
- pseudorep golden [--chi-radius R] [--force] - 重新生成黄金常数
- pseudorep run lemma3 / gallery / defect / flow / prop6 / prop7 / sympcheck / commutator
  （实验命令同样可在顶层直接调用）

全局选项 --config 指定 JSON 配置文件（覆盖命令行参数），输出目录由 --output-dir
或环境变量 PSEUDOREP_OUTPUT_DIR 给出。

退出码: 0 全部通过；1 容限检查失败；2 配置错误；3 数值失败。
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import click
import numpy as np

from .core.fields import HamiltonianField
from .core.flows import flow_map, linear_growth_bound
from .core.geometry import c0_norm, poisson_bracket, sample_field
from .core.oracles import compute_goldens
from .core.pseudo_rep import defect_norm, normalization_report, rep_norm_bound
from .core.reporter import Reporter
from .experiments import (
    AffineHamiltonian,
    affine_commutator_check,
    compact_bump,
    gallery,
    named_map,
    pairing_family,
    polar_growth_caps,
    polar_model_field,
    prop6_experiment,
    prop7_experiment,
    run_convergence,
    run_lemma3,
    symplectic_check,
)
from .experiments.appendix_a import AFFINE_FLOW_METHODS
from .experiments.distributions import DEFAULT_INDEX_PAIRS
from .models.chart import make_chart
from .models.config import ExperimentConfig, load_config_file
from .models.grid import GridSpec
from .models.report import ResultTable
from .storage import ArtifactStore, GoldenStore
from .utils import logger, parse_float_list, parse_int_list, setup_logging
from .utils.constants import (
    CHI_SCAN_POINTS,
    DEFAULT_CHI_RADIUS,
    DEFAULT_N_SET,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_TOLERANCE,
)
from .utils.errors import ChartError, ConfigError, LabError

# 每单位时间允许的能量漂移
ENERGY_DRIFT_PER_TIME = 1e-8
SYMPLECTIC_TOL = 1e-6
# 非线性流映射的差分误差较大
MAP_TOLS = {"bump_flow": 1e-4}
NON_SYMPLECTIC_MAPS = ("scaling",)
COMMUTATOR_CASES = ("translation", "zero", "disjoint", "lemma9")


@dataclass
class CliState:
    """命令组共享的全局选项"""

    config_path: str | None
    workers: int
    output_dir: str | None


# ==================== 配置 ====================


def _int_list(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[int, ...] | None:
    if value is None:
        return None
    try:
        return parse_int_list(value)
    except ValueError:
        raise click.BadParameter(f"不是逗号分隔的整数列表: {value}") from None


def _float_list(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[float, ...] | None:
    if value is None:
        return None
    try:
        return parse_float_list(value)
    except ValueError:
        raise click.BadParameter(f"不是逗号分隔的数列: {value}") from None


def _pairs(ctx: click.Context, param: click.Parameter, value: str | None) -> tuple[tuple[int, int], ...] | None:
    if value is None:
        return None
    try:
        return tuple((int(p), int(q)) for p, q in (item.split(":") for item in value.split(",") if item.strip()))
    except ValueError:
        raise click.BadParameter(f"指标对格式应为 p:q,p:q: {value}") from None


def _build_config(
    ctx: click.Context,
    experiment: str,
    entry: str | None = None,
    n_set: tuple[int, ...] | None = None,
    params: dict[str, Any] | None = None,
    index_pairs: tuple[tuple[int, int], ...] | None = None,
) -> ExperimentConfig:
    """命令行参数 -> 配置；配置文件内容覆盖命令行参数"""
    state: CliState = ctx.obj
    config = ExperimentConfig(
        experiment=experiment,
        entry=entry or "polterovich_polar",
        params={k: v for k, v in (params or {}).items() if v is not None},
        n_set=n_set or DEFAULT_N_SET,
        index_pairs=index_pairs or (),
        output_dir=state.output_dir or "",
        workers=state.workers,
    )
    if state.config_path:
        config = config.with_overrides(load_config_file(state.config_path))
    return config


def _entry(config: ExperimentConfig):
    try:
        return gallery(
            config.entry,
            chi_radius=float(config.params.get("chi_radius", DEFAULT_CHI_RADIUS)),
            h_constant=config.params.get("h_constant"),
        )
    except ChartError as e:
        raise ConfigError(str(e)) from e


# ==================== 实验 ====================


def run_bracket(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    """括号场：画廊条目的 (f, g) 像，或 --f/--g 给出的表达式"""
    params = config.params
    mode = params.get("mode", "exact")
    n = int(params.get("n", config.n_set[-1]))
    if "f" in params or "g" in params:
        chart = make_chart(params.get("chart", "cartesian"))
        grid = config.grid or GridSpec.of((-1.0, 1.0, 65), (-1.0, 1.0, 65))
        try:
            F = HamiltonianField.from_expr(chart, str(params.get("f", "0")), "F")
            G = HamiltonianField.from_expr(chart, str(params.get("g", "0")), "G")
        except (ChartError, SyntaxError, TypeError) as e:
            raise ConfigError(f"无法解析表达式: {e}") from e
        name = f"bracket_{chart.kind}"
    else:
        entry = _entry(config)
        images = entry.images(n)
        F, G = images[entry.pair[0]], images[entry.pair[1]]
        chart, grid = entry.chart, config.grid or entry.grid
        name = f"bracket_{entry.name}_n{n}"

    bracket = poisson_bracket(
        sample_field(chart, grid, F),
        sample_field(chart, grid, G),
        mode="fd" if mode == "fd" else "exact",
        order=config.tolerances.fd_order,
    )
    store.write_field(name, bracket)
    mean = float(np.mean(bracket.samples))
    deviation = c0_norm(bracket.samples - mean)
    summary = {
        "experiment": "bracket",
        "n": n,
        "mode": mode,
        "c0_norm": c0_norm(bracket),
        "mean": mean,
        "deviation_from_mean": deviation,
        "config": config.to_dict(),
    }
    store.write_json(name, summary)
    click.echo(reporter.build_bracket_summary(name, n, mode, summary["c0_norm"], deviation))
    return True


def run_gallery(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    """收敛表与极限检查判定"""
    entry = _entry(config)
    table, report = run_convergence(entry, config.n_set, config.tolerances, config.workers)
    store.write_table(table)
    store.write_json(
        f"verdict_{entry.name}",
        {"entry": entry.to_dict(), "report": report.to_dict(), "config": config.to_dict()},
    )
    click.echo(reporter.build_convergence_summary(entry.name, report, entry.expected_verdict))
    return report.verdict == entry.expected_verdict


def run_lemma3_command(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    entry = _entry(config)
    s_values = tuple(float(s) for s in config.params.get("s", (0.1, 0.5, 1.0)))
    N = int(config.params.get("N", 2))
    table, reports = run_lemma3(
        entry, config.n_set, s_values, N, config.tolerances, config.step_control, config.workers
    )
    store.write_table(table)
    passed = all(r.passed for r in reports)
    store.write_json(
        f"lemma3_{entry.name}",
        {"passed": passed, "reports": [r.to_dict() for r in reports], "config": config.to_dict()},
    )
    click.echo(reporter.build_lemma3_summary(entry.name, reports))
    return passed


def run_defect(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    entry = _entry(config)
    rep = entry.representation(config.n_set, config.grid)
    reports = [defect_norm(rep, n, seed=config.seed) for n in rep.n_set]
    table = ResultTable(f"defect_{entry.name}", ["n", "defect_norm", "f_label", "g_label", "rep_norm", "bracket_constant"])
    for r in reports:
        table.add_row(r.n, r.defect_norm, r.f_label, r.g_label, r.rep_norm, r.bracket_constant)
    store.write_table(table)
    store.write_json(
        f"defect_{entry.name}",
        {
            "reports": [r.to_dict() for r in reports],
            "rep_norm_bound": rep_norm_bound(rep),
            "normalization": {str(n): normalization_report(rep, n) for n in rep.n_set},
            "config": config.to_dict(),
        },
    )
    click.echo(reporter.build_defect_summary(entry.name, reports))
    return True


def run_flow(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    """g 像的流映射（安全区域网格），能量漂移检查与极坐标的线性增长证书"""
    entry = _entry(config)
    t = float(config.params.get("t", 1.0))
    allowed = ENERGY_DRIFT_PER_TIME * max(1.0, abs(t))
    summary: dict[str, Any] = {"t": t, "allowed_drift": allowed, "flows": {}, "config": config.to_dict()}
    passed = True
    for n in config.n_set:
        H = entry.images(n)[entry.pair[1]]
        fmap = flow_map(H, t, entry.flow_grid(n), config.step_control)
        start = fmap.grid.points()
        drift = float(np.max(np.abs(H(fmap.endpoints) - H(start))))
        passed = passed and drift <= allowed
        store.write_rows(f"flow_{entry.name}_n{n}", fmap.csv_header(), fmap.csv_rows())
        summary["flows"][str(n)] = {"displacement": fmap.displacement(), "energy_drift": drift}
        click.echo(reporter.build_flow_summary(f"{entry.name} {H.label}", t, fmap.displacement(), drift))
    if entry.chart.kind == "polar_r2":
        bounds = {}
        for n in config.n_set:
            a, b = linear_growth_bound(polar_model_field(n), 0.05, 10.0, chart=entry.chart)
            a_max, b_max = polar_growth_caps(n)
            bounds[str(n)] = {"a": a, "b": b, "a_max": a_max, "b_max": b_max}
            if a > a_max or b > b_max:
                logger.warning(f"[flow] n={n} 增长证书 a={a:.4g}, b={b:.4g} 超出上限 ({a_max:.4g}, {b_max:.4g})")
            passed = passed and a <= a_max and b <= b_max
        summary["growth_certificate"] = bounds
    store.write_json(f"flow_{entry.name}", summary)
    return passed


def run_prop6(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    name = "remark2" if config.params.get("violate_c2") else config.params.get("family", "conforming")
    try:
        family = pairing_family(name, float(config.params.get("chi_radius", DEFAULT_CHI_RADIUS)))
    except ChartError as e:
        raise ConfigError(str(e)) from e
    table, report = prop6_experiment(family, config.n_set, config.tolerances, config.workers)
    store.write_table(table)
    store.write_json(f"prop6_{family.name}", {"report": report.to_dict(), "config": config.to_dict()})
    click.echo(reporter.build_distribution_summary(report))
    return report.expected


def run_prop7(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    try:
        family = pairing_family(config.params.get("family", "constant"))
    except ChartError as e:
        raise ConfigError(str(e)) from e
    table, report = prop7_experiment(
        family,
        index_pairs=config.index_pairs or DEFAULT_INDEX_PAIRS,
        tolerances=config.tolerances,
        mismatch=bool(config.params.get("mismatch", False)),
        workers=config.workers,
    )
    store.write_table(table)
    store.write_json(f"prop7_{family.name}", {"report": report.to_dict(), "config": config.to_dict()})
    click.echo(reporter.build_distribution_summary(report))
    return report.expected


def run_sympcheck(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    name = config.params.get("map", "identity")
    try:
        map_fn = named_map(name)
    except ChartError as e:
        raise ConfigError(str(e)) from e
    points = int(config.params.get("points", 65))
    grid = config.grid or GridSpec.of((-1.0, 1.0, points), (-1.0, 1.0, points))
    report = symplectic_check(map_fn, grid, order=config.tolerances.fd_order, name=name)
    tol = float(config.params.get("tol", MAP_TOLS.get(name, SYMPLECTIC_TOL)))
    symplectic = report.residual <= tol
    expected = name not in NON_SYMPLECTIC_MAPS
    store.write_json(
        f"sympcheck_{name}",
        {"report": report.to_dict(), "tol": tol, "symplectic": symplectic, "config": config.to_dict()},
    )
    click.echo(reporter.build_symplectic_summary(report))
    return symplectic == expected


def _commutator_case(case: str) -> tuple[AffineHamiltonian, AffineHamiltonian, AffineHamiltonian | None]:
    chart = make_chart("cartesian", n=1)
    if case == "translation":
        return AffineHamiltonian(None, (1.0, 0.0), chart=chart), AffineHamiltonian(None, (0.0, 1.0), chart=chart), None
    if case == "zero":
        return AffineHamiltonian(None, (0.0, 0.0), chart=chart), AffineHamiltonian(None, (0.0, 0.0), chart=chart), None
    if case == "disjoint":
        return (
            AffineHamiltonian(compact_bump(chart, (-1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5),
            AffineHamiltonian(compact_bump(chart, (1.0, 0.0), 0.5), (0.0, 0.0), support_radius=1.5),
            None,
        )
    if case == "lemma9":
        return (
            AffineHamiltonian(compact_bump(chart, (0.0, 0.0), 0.8), (1.0, 0.0), support_radius=0.8),
            AffineHamiltonian(None, (0.0, 1.0), chart=chart),
            AffineHamiltonian(None, (0.0, 0.0), constant=1.0, chart=chart),
        )
    raise ConfigError(f"未知交换子算例: {case}（可选: {', '.join(COMMUTATOR_CASES)}）")


def run_commutator(config: ExperimentConfig, store: ArtifactStore, reporter: Reporter) -> bool:
    case = config.params.get("case", "translation")
    H, K, lead = _commutator_case(case)
    s = float(config.params.get("s", 0.3))
    t = float(config.params.get("t", 0.3))
    grid = config.grid or GridSpec.of((-2.0, 2.0, 9), (-2.0, 2.0, 9))
    method = config.params.get("method", "splitting")
    if method not in AFFINE_FLOW_METHODS:
        raise ConfigError(f"未知的仿射流方法: {method}（可选: {', '.join(AFFINE_FLOW_METHODS)}）")
    report = affine_commutator_check(H, K, s, t, grid, config.step_control, lead=lead, method=method)
    store.write_json(f"commutator_{case}", {"report": report.to_dict(), "config": config.to_dict()})
    click.echo(reporter.build_commutator_summary(report))
    return report.passed


EXPERIMENTS: dict[str, Callable[[ExperimentConfig, ArtifactStore, Reporter], bool]] = {
    "bracket": run_bracket,
    "gallery": run_gallery,
    "lemma3": run_lemma3_command,
    "defect": run_defect,
    "flow": run_flow,
    "prop6": run_prop6,
    "prop7": run_prop7,
    "sympcheck": run_sympcheck,
    "commutator": run_commutator,
}


def _execute(ctx: click.Context, build: Callable[[], ExperimentConfig]) -> None:
    """构建配置、执行实验并按结果退出"""
    try:
        config = build()
        runner = EXPERIMENTS.get(config.experiment)
        if runner is None:
            raise ConfigError(f"未知实验: {config.experiment}（可选: {', '.join(EXPERIMENTS)}）")
        store = ArtifactStore(config.output_dir or None)
        logger.info(f"[{config.experiment}] 开始，输出目录 {store.output_dir}")
        passed = runner(config, store, Reporter())
    except ConfigError as e:
        logger.error(f"配置错误: {e}")
        ctx.exit(EXIT_CONFIG)
    except LabError as e:
        logger.error(f"数值失败: {e}", exc_info=True)
        ctx.exit(EXIT_NUMERIC)
    else:
        if not passed:
            logger.warning(f"[{config.experiment}] 容限检查未通过")
        ctx.exit(EXIT_OK if passed else EXIT_TOLERANCE)


# ==================== 命令 ====================


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None, help="JSON 配置文件")
@click.option("-v", "--verbose", is_flag=True, help="输出 DEBUG 日志")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True, help="并行线程数")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None, help="输出目录")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None, verbose: bool, workers: int, output_dir: str | None) -> None:
    """伪表示与 Poisson 括号 C⁰ 行为的数值实验"""
    setup_logging(verbose)
    ctx.obj = CliState(config_path, workers, output_dir)


entry_option = click.option("--entry", default="polterovich_polar", show_default=True, help="画廊条目")
n_option = click.option("--n", "n_set", callback=_int_list, default=None, help="n 序列，如 1,4,16,64")


@cli.command()
@entry_option
@click.option("--n", "n", type=int, default=None, help="序列指标（缺省取 n 序列的最后一个）")
@click.option("--mode", type=click.Choice(["exact", "fd"]), default="exact", show_default=True)
@click.option("--chart", default=None, help="与 --f/--g 一起使用的坐标卡")
@click.option("--f", "f_expr", default=None, help="F 的表达式")
@click.option("--g", "g_expr", default=None, help="G 的表达式")
@click.pass_context
def bracket(
    ctx: click.Context, entry: str, n: int | None, mode: str, chart: str | None, f_expr: str | None, g_expr: str | None
) -> None:
    """计算括号场并写出 CSV"""
    params = {"n": n, "mode": mode, "chart": chart, "f": f_expr, "g": g_expr}
    _execute(ctx, lambda: _build_config(ctx, "bracket", entry, params=params))


@cli.command()
@click.option("--chi-radius", type=float, default=DEFAULT_CHI_RADIUS, show_default=True)
@click.option("--scan-points", type=int, default=CHI_SCAN_POINTS, show_default=True)
@click.option("--force", is_flag=True, help="与已存常数不符时仍然覆盖")
@click.pass_context
def golden(ctx: click.Context, chi_radius: float, scan_points: int, force: bool) -> None:
    """重新生成黄金常数文件"""
    state: CliState = ctx.obj
    try:
        store = GoldenStore(ArtifactStore(state.output_dir).output_dir)
        goldens = compute_goldens(chi_radius, scan_points)
    except LabError as e:
        logger.error(f"数值失败: {e}", exc_info=True)
        ctx.exit(EXIT_NUMERIC)
    mismatches = store.compare(goldens)
    click.echo(Reporter().build_golden_summary(goldens["constants"], mismatches))
    if mismatches and not force:
        logger.error(f"[golden] {len(mismatches)} 个常数与已存值不符，未覆盖 {store.path}")
        ctx.exit(EXIT_TOLERANCE)
    store.save(goldens)
    ctx.exit(EXIT_OK)


@click.group()
def run() -> None:
    """运行命名实验"""


@run.command()
@entry_option
@n_option
@click.option("--s", "s_values", callback=_float_list, default="0.1,0.5,1.0", show_default=True)
@click.option("--N", "N", type=click.IntRange(min=0), default=2, show_default=True)
@click.pass_context
def lemma3(ctx: click.Context, entry: str, n_set: tuple[int, ...] | None, s_values: tuple[float, ...], N: int) -> None:
    """拉回残差与 ad 级数上界"""
    _execute(ctx, lambda: _build_config(ctx, "lemma3", entry, n_set, {"s": list(s_values), "N": N}))


@run.command(name="gallery")
@entry_option
@n_option
@click.option("--h-constant", type=float, default=None, help="柱面/辛化条目中 ρₙ(h) 的系数")
@click.pass_context
def gallery_command(ctx: click.Context, entry: str, n_set: tuple[int, ...] | None, h_constant: float | None) -> None:
    """画廊收敛表与极限判定"""
    _execute(ctx, lambda: _build_config(ctx, "gallery", entry, n_set, {"h_constant": h_constant}))


@run.command()
@entry_option
@n_option
@click.pass_context
def defect(ctx: click.Context, entry: str, n_set: tuple[int, ...] | None) -> None:
    """亏量范数 ‖Bₙ‖"""
    _execute(ctx, lambda: _build_config(ctx, "defect", entry, n_set))


@run.command()
@entry_option
@n_option
@click.option("--t", type=float, default=1.0, show_default=True)
@click.pass_context
def flow(ctx: click.Context, entry: str, n_set: tuple[int, ...] | None, t: float) -> None:
    """流映射与能量漂移"""
    _execute(ctx, lambda: _build_config(ctx, "flow", entry, n_set, {"t": t}))


@run.command()
@n_option
@click.option("--family", type=click.Choice(["conforming", "constant", "remark2"]), default="conforming")
@click.option("--violate-c2", is_flag=True, help="使用不满足 C² 收敛假设的 remark2 族")
@click.pass_context
def prop6(ctx: click.Context, n_set: tuple[int, ...] | None, family: str, violate_c2: bool) -> None:
    """分布意义下括号收敛（单指标）"""
    params = {"family": family, "violate_c2": violate_c2}
    _execute(ctx, lambda: _build_config(ctx, "prop6", n_set=n_set, params=params))


@run.command()
@click.option("--family", type=click.Choice(["conforming", "constant"]), default="constant")
@click.option("--pairs", "index_pairs", callback=_pairs, default=None, help="指标对，如 1:1,4:16")
@click.option("--mismatch", is_flag=True, help="目标 H 加一个鼓包（构造的失败例）")
@click.pass_context
def prop7(ctx: click.Context, family: str, index_pairs: tuple[tuple[int, int], ...] | None, mismatch: bool) -> None:
    """分布意义下括号收敛（双指标）"""
    params = {"family": family, "mismatch": mismatch}
    _execute(ctx, lambda: _build_config(ctx, "prop7", params=params, index_pairs=index_pairs))


@run.command()
@click.option("--map", "map_name", default="identity", show_default=True, help="命名映射")
@click.option("--points", type=click.IntRange(min=8), default=65, show_default=True, help="每轴网格点数")
@click.pass_context
def sympcheck(ctx: click.Context, map_name: str, points: int) -> None:
    """坐标函数括号判据"""
    _execute(ctx, lambda: _build_config(ctx, "sympcheck", params={"map": map_name, "points": points}))


@run.command()
@click.option("--case", type=click.Choice(COMMUTATOR_CASES), default="translation", show_default=True)
@click.option("--s", type=float, default=0.3, show_default=True)
@click.option("--t", type=float, default=0.3, show_default=True)
@click.option("--method", type=click.Choice(AFFINE_FLOW_METHODS), default="splitting", show_default=True)
@click.pass_context
def commutator(ctx: click.Context, case: str, s: float, t: float, method: str) -> None:
    """交换子流与生成函数之流的比较"""
    _execute(ctx, lambda: _build_config(ctx, "commutator", params={"case": case, "s": s, "t": t, "method": method}))


cli.add_command(run)
for _command in list(run.commands.values()):
    cli.add_command(_command)


def main() -> None:
    cli(prog_name="pseudorep")


if __name__ == "__main__":
    main()
