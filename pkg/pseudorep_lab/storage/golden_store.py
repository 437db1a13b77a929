"""黄金常数文件管理模块"""

from __future__ import annotations

import json
import math
from pathlib import Path
from threading import RLock
from typing import Any

from ..utils import logger
from ..utils.constants import GOLDEN_FILE, GOLDEN_TOL

PROVENANCE_KEY = "_provenance"
# 这些生成参数相同时才比较数值
COMPARED_PARAMETERS = ("chi_radius", "scan_points", "seed", "oracle_version")


class GoldenStore:
    """黄金常数存储

    文件格式：{"_provenance": {...}, "<常数名>": 值, ...}，键排序写出。
    """

    def __init__(self, directory: str | Path, filename: str = GOLDEN_FILE):
        self.path: Path = Path(directory) / filename
        self._lock = RLock()

    def load(self) -> dict[str, Any] | None:
        """读取已存常数，不存在或损坏返回 None"""
        with self._lock:
            if not self.path.exists():
                return None
            try:
                with open(self.path, encoding="utf-8") as f:
                    return json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                logger.error(f"[golden] 读取 {self.path} 失败: {e}")
                return None

    def save(self, goldens: dict[str, Any]) -> Path:
        """写入 compute_goldens 的结果"""
        data = {PROVENANCE_KEY: goldens["provenance"], **goldens["constants"]}
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "w", encoding="utf-8") as f:
                json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write("\n")
        logger.info(f"[golden] 已写入 {self.path}")
        return self.path

    def compare(self, goldens: dict[str, Any], tol: float = GOLDEN_TOL) -> dict[str, tuple[float, float]]:
        """与已存常数比较

        生成参数（χ 半径、扫描点数等）不同时视为新的一组常数，不做比较。

        Returns:
            超出容限的 名称 -> (已存值, 新值)
        """
        stored = self.load()
        if stored is None:
            return {}
        old_provenance = stored.get(PROVENANCE_KEY, {})
        new_provenance = goldens["provenance"]
        if any(old_provenance.get(k) != new_provenance.get(k) for k in COMPARED_PARAMETERS):
            logger.info("[golden] 生成参数已改变，跳过比较")
            return {}
        mismatches = {}
        for name, value in goldens["constants"].items():
            old = stored.get(name)
            if old is None:
                continue
            if not math.isclose(old, value, rel_tol=0.0, abs_tol=tol):
                mismatches[name] = (float(old), float(value))
        return mismatches
