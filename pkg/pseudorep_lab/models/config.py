"""实验配置数据模型"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from ..utils.constants import (
    DEFAULT_ATOL,
    DEFAULT_DEFECT_TOL,
    DEFAULT_DT_INIT,
    DEFAULT_INTEGRATOR_TOL,
    DEFAULT_MAX_STEPS,
    DEFAULT_N_SET,
    DEFAULT_SEED,
    DEFAULT_SLACK,
    FD_ORDERS,
)
from ..utils.errors import ConfigError
from .grid import GridSpec

INTEGRATOR_METHODS = ("rkf45", "splitting")


@dataclass(frozen=True)
class StepControl:
    """积分步长控制

    Attributes:
        dt_init: 初始步长（splitting 方法下为固定步长）
        tol: 局部误差容限
        max_steps: 最大尝试步数
        method: rkf45（自适应）或 splitting（可分离笛卡尔哈密顿量的蛙跳）
    """

    dt_init: float = DEFAULT_DT_INIT
    tol: float = DEFAULT_INTEGRATOR_TOL
    max_steps: int = DEFAULT_MAX_STEPS
    method: str = "rkf45"

    def __post_init__(self) -> None:
        if self.dt_init <= 0 or self.tol <= 0 or self.max_steps <= 0:
            raise ConfigError("步长控制参数必须为正")
        if self.method not in INTEGRATOR_METHODS:
            raise ConfigError(f"未知积分方法: {self.method}（可选: {', '.join(INTEGRATOR_METHODS)}）")

    def tighter(self, factor: float = 10.0) -> StepControl:
        """容限缩小 factor 倍的副本（自加密参考解使用）"""
        return replace(self, tol=self.tol / factor, max_steps=int(self.max_steps * factor))

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StepControl:
        """从字典创建实例"""
        return cls(
            dt_init=float(data.get("dt_init", DEFAULT_DT_INIT)),
            tol=float(data.get("tol", DEFAULT_INTEGRATOR_TOL)),
            max_steps=int(data.get("max_steps", DEFAULT_MAX_STEPS)),
            method=data.get("method", "rkf45"),
        )


@dataclass(frozen=True)
class Tolerances:
    """判定容限

    Attributes:
        slack: 不等式检查的乘性松弛
        atol: 不等式检查的绝对容限
        integrator_tol: 积分器容限
        fd_order: 有限差分阶
        defect_tol: 亏量视为 0 的阈值
    """

    slack: float = DEFAULT_SLACK
    atol: float = DEFAULT_ATOL
    integrator_tol: float = DEFAULT_INTEGRATOR_TOL
    fd_order: int = 4
    defect_tol: float = DEFAULT_DEFECT_TOL

    def __post_init__(self) -> None:
        for name in ("slack", "atol", "integrator_tol", "defect_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"容限 {name} 必须为正，得到 {getattr(self, name)}")
        if self.fd_order not in FD_ORDERS:
            raise ConfigError(f"fd_order 必须属于 {FD_ORDERS}")

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Tolerances:
        """从字典创建实例"""
        defaults = cls()
        return cls(
            slack=float(data.get("slack", defaults.slack)),
            atol=float(data.get("atol", defaults.atol)),
            integrator_tol=float(data.get("integrator_tol", defaults.integrator_tol)),
            fd_order=int(data.get("fd_order", defaults.fd_order)),
            defect_tol=float(data.get("defect_tol", defaults.defect_tol)),
        )


@dataclass
class ExperimentConfig:
    """一次实验运行的全部配置

    Attributes:
        experiment: 实验名（lemma3 / gallery / defect / flow / prop6 / prop7 / sympcheck / commutator / bracket）
        entry: 画廊条目名
        params: 实验参数（s、N、map、violate_c2 等）
        grid: 网格（为空时用条目默认网格）
        n_set: n 序列（严格递增）
        index_pairs: prop7 的 (p, q) 指标对
        tolerances: 容限
        step_control: 积分步长控制
        seed: 随机种子
        output_dir: 输出目录（为空时取环境变量或默认目录）
        workers: 并行工作线程数
    """

    experiment: str = "gallery"
    entry: str = "polterovich_polar"
    params: dict[str, Any] = field(default_factory=dict)
    grid: GridSpec | None = None
    n_set: tuple[int, ...] = DEFAULT_N_SET
    index_pairs: tuple[tuple[int, int], ...] = ()
    tolerances: Tolerances = field(default_factory=Tolerances)
    step_control: StepControl = field(default_factory=StepControl)
    seed: int = DEFAULT_SEED
    output_dir: str = ""
    workers: int = 1

    def __post_init__(self) -> None:
        self.n_set = tuple(int(n) for n in self.n_set)
        if not self.n_set:
            raise ConfigError("n_set 不能为空")
        if any(n < 1 for n in self.n_set):
            raise ConfigError(f"n_set 必须为正整数: {self.n_set}")
        if any(b <= a for a, b in zip(self.n_set, self.n_set[1:])):
            raise ConfigError(f"n_set 必须严格递增: {self.n_set}")
        if self.workers < 1:
            raise ConfigError("workers 必须 ≥ 1")

    def with_overrides(self, data: dict[str, Any]) -> ExperimentConfig:
        """用配置文件内容覆盖当前值（配置文件优先于命令行参数）"""
        merged = self.to_dict()
        for key, value in data.items():
            if key in ("params", "tolerances", "step_control") and isinstance(value, dict):
                merged[key] = {**merged.get(key, {}), **value}
            else:
                merged[key] = value
        return ExperimentConfig.from_dict(merged)

    def to_dict(self) -> dict[str, Any]:
        """转换为字典"""
        return {
            "experiment": self.experiment,
            "entry": self.entry,
            "params": dict(self.params),
            "grid": self.grid.to_dict() if self.grid is not None else None,
            "n_set": list(self.n_set),
            "index_pairs": [list(p) for p in self.index_pairs],
            "tolerances": self.tolerances.to_dict(),
            "step_control": self.step_control.to_dict(),
            "seed": self.seed,
            "output_dir": self.output_dir,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        """从字典创建实例

        Raises:
            ConfigError: 字段类型或取值非法
        """
        try:
            grid = data.get("grid")
            return cls(
                experiment=str(data.get("experiment", "gallery")),
                entry=str(data.get("entry", "polterovich_polar")),
                params=dict(data.get("params", {})),
                grid=GridSpec.from_dict(grid) if grid else None,
                n_set=tuple(data.get("n_set", DEFAULT_N_SET)),
                index_pairs=tuple(
                    (int(p), int(q)) for p, q in data.get("index_pairs", [])
                ),
                tolerances=Tolerances.from_dict(data.get("tolerances", {})),
                step_control=StepControl.from_dict(data.get("step_control", {})),
                seed=int(data.get("seed", DEFAULT_SEED)),
                output_dir=str(data.get("output_dir", "") or ""),
                workers=int(data.get("workers", 1)),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as e:
            raise ConfigError(f"配置字段非法: {e}") from e


def load_config_file(path: str | Path) -> dict[str, Any]:
    """读取 JSON 配置文件

    Raises:
        ConfigError: 文件不存在或不是 JSON 对象
    """
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"无法读取配置文件 {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"配置文件 {path} 顶层必须是 JSON 对象")
    return data
