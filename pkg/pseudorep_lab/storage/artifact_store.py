"""实验产物持久化模块"""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from threading import RLock
from typing import Any

import numpy as np

from ..core.geometry import write_field_csv
from ..models.grid import GridField
from ..models.report import ResultTable, format_cell
from ..utils import logger
from ..utils.constants import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV


def resolve_output_dir(output_dir: str | Path | None = None) -> Path:
    """输出目录：显式参数 > 环境变量 > 默认目录"""
    if output_dir:
        return Path(output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (set, tuple)):
        return list(value)
    raise TypeError(f"无法序列化的类型: {type(value).__name__}")


class ArtifactStore:
    """产物管理器

    负责把结果表写成 CSV、把判定写成 JSON。
    输出不含时间戳，同一配置与种子的两次运行逐字节相同。

    该类是线程安全的，使用 RLock 保护所有写入。
    """

    def __init__(self, output_dir: str | Path | None = None):
        """初始化产物管理器

        Args:
            output_dir: 输出目录，缺省时读取环境变量 PSEUDOREP_OUTPUT_DIR
        """
        self.output_dir: Path = resolve_output_dir(output_dir)
        self._lock = RLock()
        self.written: list[Path] = []

    def _path(self, name: str, suffix: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / f"{name}{suffix}"

    def _record(self, path: Path) -> Path:
        self.written.append(path)
        logger.info(f"[output] 已写出 {path}")
        return path

    def write_table(self, table: ResultTable) -> Path:
        """写出结果表（首行为列名）"""
        with self._lock:
            path = self._path(table.name, ".csv")
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(table.columns)
                writer.writerows(table.formatted_rows())
            return self._record(path)

    def write_rows(self, name: str, header: list[str], rows: np.ndarray) -> Path:
        """写出数值矩阵（轨道、流映射）"""
        with self._lock:
            path = self._path(name, ".csv")
            with open(path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                writer.writerows([format_cell(float(v)) for v in row] for row in np.asarray(rows))
            return self._record(path)

    def write_field(self, name: str, field: GridField) -> Path:
        """写出网格采样场（带坐标卡首行）"""
        with self._lock:
            return self._record(write_field_csv(field, self._path(name, ".csv")))

    def write_json(self, name: str, data: dict[str, Any]) -> Path:
        """写出判定 JSON（键排序）"""
        with self._lock:
            path = self._path(name, ".json")
            with open(path, "w", encoding="utf-8") as f:
                json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default)
                f.write("\n")
            return self._record(path)

    def read_json(self, name: str) -> dict[str, Any] | None:
        """读取已写出的 JSON，不存在返回 None"""
        with self._lock:
            path = self.output_dir / f"{name}.json"
            if not path.exists():
                return None
            with open(path, encoding="utf-8") as f:
                return json.load(f)
