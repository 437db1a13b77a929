"""实验报告数据模型"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

from ..utils.constants import format_float


def format_cell(value: Any) -> str:
    """CSV 单元格格式（浮点取最短往返表示，布尔为 true/false）"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return ""
    return str(value)


@dataclass
class ResultTable:
    """一张结果表（行按加入顺序输出）

    Attributes:
        name: 表名（即输出文件名主干）
        columns: 列名
        rows: 行
    """

    name: str
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)

    def add_row(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"[{self.name}] 行长度 {len(values)} 与列数 {len(self.columns)} 不符")
        self.rows.append(list(values))

    def column(self, name: str) -> list[Any]:
        index = self.columns.index(name)
        return [row[index] for row in self.rows]

    def formatted_rows(self) -> list[list[str]]:
        return [[format_cell(v) for v in row] for row in self.rows]

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return {"name": self.name, "columns": list(self.columns), "rows": self.formatted_rows()}


@dataclass
class DefectReport:
    """亏量范数估计 ‖Bₙ‖

    Attributes:
        n: 序列指标
        f_label: 取到最大值的 f
        g_label: 取到最大值的 g
        defect_norm: ‖Bₙ‖ 估计（单位球对上的最大值）
        rep_norm: R（‖ρₘ‖ 在 n 序列上的最大值）
        bracket_constant: 代数括号常数 C
        safety_factor: 尾项界中 C 的安全系数
        sample_size: 参与取最大值的单位向量对数
    """

    n: int
    f_label: str
    g_label: str
    defect_norm: float
    rep_norm: float
    bracket_constant: float
    safety_factor: float
    sample_size: int

    def __post_init__(self) -> None:
        for name in ("defect_norm", "rep_norm", "bracket_constant"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} 不能为负")

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)


@dataclass
class Lemma3Report:
    """拉回与 ad 级数的残差及其上界

    Attributes:
        n: 序列指标
        f_label: f
        g_label: g
        s: 流时间
        N: 截断阶
        residual: L = ‖ρₙ(f)∘φ^s − Σ_{j≤N}‖
        bound: B = 亏量项 + 截断项
        defect_term: ‖Bₙ‖‖f‖exp(s‖g‖)
        truncation_term: 尾项界（N+1 ≥ 幂零度时为 0）
        passed: L ≤ slack·B + atol
        domain: 计算 L 的网格（GridSpec.to_dict 形式）
    """

    n: int
    f_label: str
    g_label: str
    s: float
    N: int
    residual: float
    bound: float
    defect_term: float
    truncation_term: float
    passed: bool
    domain: list[dict[str, Any]] = field(default_factory=list)

    CSV_COLUMNS = ("n", "f_label", "g_label", "s", "N", "L", "bound", "pass")

    def row(self) -> list[Any]:
        return [self.n, self.f_label, self.g_label, self.s, self.N, self.residual, self.bound, self.passed]

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)


@dataclass
class LimitReport:
    """极限表示检查

    Attributes:
        verdict: representation_limit / noncompact_caveat /
            naive_limit_counterexample / not_a_pseudo_representation / inconclusive
        limit_residual: ‖{ρf,ρg} − ρ([f,g])‖
        defect_norms: 各 n 的 ‖Bₙ‖（按 n 顺序）
        bracket_gap: 最后一个 n 处 ‖{ρₙf,ρₙg} − {ρf,ρg}‖
        limit_distances: 各 n 的 max_i ‖ρₙ(eᵢ) − ρ(eᵢ)‖
        monotone: limit_distances 是否在 10% 松弛内不增
    """

    verdict: str
    limit_residual: float
    defect_norms: list[float]
    bracket_gap: float
    limit_distances: list[float] = field(default_factory=list)
    monotone: bool = True

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)


@dataclass
class CommutatorReport:
    """交换子流与其生成函数流的比较

    Attributes:
        s: K 的流时间
        t: H 的流时间
        discrepancy: 网格点上两种终点的最大偏差
        identity_defect: max |ψ(x) − x|
        lemma9_residual: ‖{H+u,K+v} − (G+w)‖（给出第三个场时）
        passed: discrepancy ≤ 容限（splitting 时加上分裂误差）
        method: 仿射流的计算方式 splitting / direct
        split_error: 各段步长减半误差之和（direct 时为 None）
    """

    s: float
    t: float
    discrepancy: float
    identity_defect: float
    lemma9_residual: float | None = None
    passed: bool = True
    method: str = "splitting"
    split_error: float | None = None

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)


@dataclass
class SymplecticReport:
    """坐标函数括号判据

    Attributes:
        map_name: 映射名
        matrix: ‖{Φₐ, Φ_b} − Πₐ_b‖ 矩阵
        residual: 矩阵最大元
        min_jacobian: |det DΦ| 的网格最小值
    """

    map_name: str
    matrix: list[list[float]]
    residual: float
    min_jacobian: float

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)


@dataclass
class DistributionReport:
    """分布意义收敛实验的判定

    Attributes:
        experiment: prop6 / prop7
        family: 函数族名
        verdict: converges / hypothesis_violated_no_convergence /
            no_convergence / consistent / mismatch
        errors: 各指标处的配对误差（按表行顺序）
        decrease_ratio: 首末误差比（prop6）
        fit_constant: 误差 ≤ c·(1/p+1/q) 的最小 c（prop7）
        fit_intercept: 带符号偏差对 1, 1/p, 1/q, 1/(pq) 最小二乘的常数项（prop7）
        hypothesis_met: 函数族是否满足收敛定理的假设
    """

    experiment: str
    family: str
    verdict: str
    errors: list[float]
    decrease_ratio: float | None = None
    fit_constant: float | None = None
    fit_intercept: float | None = None
    hypothesis_met: bool = True

    @property
    def expected(self) -> bool:
        """判定与族的假设相符（用于退出码）"""
        if self.experiment == "prop7":
            return self.verdict == ("consistent" if self.hypothesis_met else "mismatch")
        return self.verdict in ("converges", "hypothesis_violated_no_convergence")

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return {**asdict(self), "expected": self.expected}
