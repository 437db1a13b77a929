"""有限维赋范李代数（结构常数表示）"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..utils import logger
from ..utils.constants import (
    DEFAULT_NORM,
    DEFAULT_SEED,
    NORM_SAMPLE_PAIRS,
    STRUCTURE_TOL,
    VERTEX_ENUMERATION_MAX_DIM,
)
from ..utils.errors import AlgebraError

NORMS = ("max", "sum")
BUILTIN_NAMES = ("heisenberg3", "nilpotent2(n)", "abelian(d)")


@dataclass(frozen=True, eq=False)
class NormedLieAlgebra:
    """[eᵢ, eⱼ] = Σₖ c[i, j, k] eₖ，范数为系数的 max 或 sum 范数乘以 scale

    Attributes:
        basis_labels: 基元名
        structure_constants: 形状 (dim, dim, dim)
        norm: max 或 sum
        scale: 范数缩放 λ（‖x‖ = λ·|x|）
        name: 代数名
    """

    basis_labels: tuple[str, ...]
    structure_constants: np.ndarray
    norm: str = DEFAULT_NORM
    scale: float = 1.0
    name: str = ""

    def __post_init__(self) -> None:
        c = np.asarray(self.structure_constants, dtype=float)
        d = len(self.basis_labels)
        if d < 1:
            raise AlgebraError("李代数维数必须 ≥ 1")
        if c.shape != (d, d, d):
            raise AlgebraError(f"结构常数形状 {c.shape} 与维数 {d} 不符")
        if self.norm not in NORMS:
            raise AlgebraError(f"未知范数: {self.norm}（可选: {', '.join(NORMS)}）")
        if not self.scale > 0:
            raise AlgebraError("范数缩放必须为正")
        object.__setattr__(self, "structure_constants", c)
        antisym = float(np.max(np.abs(c + c.transpose(1, 0, 2))))
        if antisym > STRUCTURE_TOL:
            raise AlgebraError(f"[{self.name}] 结构常数不反对称: 残差 {antisym:.3e}")
        jacobi = self.jacobi_residual()
        if jacobi > STRUCTURE_TOL:
            raise AlgebraError(f"[{self.name}] 结构常数不满足 Jacobi 恒等式: 残差 {jacobi:.3e}")

    @property
    def dim(self) -> int:
        return len(self.basis_labels)

    def same_as(self, other: NormedLieAlgebra) -> bool:
        return (
            self.basis_labels == other.basis_labels
            and self.norm == other.norm
            and self.scale == other.scale
            and np.array_equal(self.structure_constants, other.structure_constants)
        )

    def jacobi_residual(self) -> float:
        """循环恒等式 [[eᵢ,eⱼ],eₖ] + 轮换 的最大残差"""
        c = self.structure_constants
        total = (
            np.einsum("ijm,mkl->ijkl", c, c)
            + np.einsum("jkm,mil->ijkl", c, c)
            + np.einsum("kim,mjl->ijkl", c, c)
        )
        return float(np.max(np.abs(total))) if total.size else 0.0

    # ==================== 元素 ====================

    def element(self, coefficients: Any) -> AlgebraElement:
        return AlgebraElement(self, np.asarray(coefficients, dtype=float))

    def basis(self, key: int | str) -> AlgebraElement:
        index = self.basis_labels.index(key) if isinstance(key, str) else int(key)
        coefficients = np.zeros(self.dim)
        coefficients[index] = 1.0
        return self.element(coefficients)

    def zero(self) -> AlgebraElement:
        return self.element(np.zeros(self.dim))

    def coefficient_norm(self, coefficients: np.ndarray) -> np.ndarray:
        """系数向量（可批量）的范数"""
        coefficients = np.abs(np.asarray(coefficients, dtype=float))
        raw = coefficients.max(axis=-1) if self.norm == "max" else coefficients.sum(axis=-1)
        return self.scale * raw

    def bracket_coefficients(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """批量 [x, y] 系数"""
        return np.einsum("ijk,...i,...j->...k", self.structure_constants, x, y)

    def with_norm(self, norm: str | None = None, scale: float | None = None) -> NormedLieAlgebra:
        return NormedLieAlgebra(
            self.basis_labels,
            self.structure_constants,
            norm or self.norm,
            self.scale if scale is None else scale,
            self.name,
        )

    # ==================== 单位球 ====================

    def unit_vertices(self) -> np.ndarray | None:
        """单位球顶点（维数超过上限时返回 None）

        max 范数的单位球是立方体（2^d 个顶点），sum 范数是交叉多面体（±eᵢ）。
        双线性映射的范数在两个单位球的顶点对上取到。
        """
        if self.norm == "sum":
            eye = np.eye(self.dim)
            return np.concatenate([eye, -eye]) / self.scale
        if self.dim > VERTEX_ENUMERATION_MAX_DIM:
            return None
        return np.array(list(itertools.product((-1.0, 1.0), repeat=self.dim))) / self.scale

    def random_unit(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """按本范数归一化的随机向量"""
        raw = rng.normal(size=(count, self.dim))
        return raw / self.coefficient_norm(raw)[:, None]

    # ==================== 序列化 ====================

    def to_dict(self) -> dict[str, Any]:
        """转换为字典（只列出 i < j 的非零结构常数）"""
        c = self.structure_constants
        triples = [
            [int(i), int(j), int(k), float(c[i, j, k])]
            for i, j, k in zip(*np.nonzero(c))
            if i < j
        ]
        return {
            "name": self.name,
            "dim": self.dim,
            "labels": list(self.basis_labels),
            "structure_constants": triples,
            "norm": self.norm,
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> NormedLieAlgebra:
        """从字典创建实例（缺失的反对称分量自动补全）"""
        labels = tuple(data.get("labels") or (f"e{i + 1}" for i in range(int(data["dim"]))))
        dim = int(data.get("dim", len(labels)))
        if dim != len(labels):
            raise AlgebraError(f"dim={dim} 与标签数 {len(labels)} 不符")
        c = np.zeros((dim, dim, dim))
        for i, j, k, value in data.get("structure_constants", []):
            c[int(i), int(j), int(k)] = float(value)
            c[int(j), int(i), int(k)] = -float(value)
        return cls(labels, c, data.get("norm", DEFAULT_NORM), float(data.get("scale", 1.0)), data.get("name", ""))


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """代数元素"""

    algebra: NormedLieAlgebra
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.coefficients.shape != (self.algebra.dim,):
            raise AlgebraError(f"系数长度 {self.coefficients.shape} 与代数维数 {self.algebra.dim} 不符")
        if not np.all(np.isfinite(self.coefficients)):
            raise AlgebraError("代数元素系数必须有限")

    def _check(self, other: AlgebraElement) -> None:
        if not (self.algebra is other.algebra or self.algebra.same_as(other.algebra)):
            raise AlgebraError("两个元素不属于同一李代数")

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        self._check(other)
        return AlgebraElement(self.algebra, self.coefficients + other.coefficients)

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        self._check(other)
        return AlgebraElement(self.algebra, self.coefficients - other.coefficients)

    def __mul__(self, scalar: float) -> AlgebraElement:
        return AlgebraElement(self.algebra, self.coefficients * float(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> AlgebraElement:
        return self * -1.0

    def norm(self) -> float:
        return float(self.algebra.coefficient_norm(self.coefficients))

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coefficients)) <= tol)

    def label(self) -> str:
        """可读形式，如 f+2·h"""
        parts = []
        for name, value in zip(self.algebra.basis_labels, self.coefficients):
            if value == 0:
                continue
            parts.append(name if value == 1 else f"{value:g}·{name}")
        return "+".join(parts) if parts else "0"


# ==================== 运算 ====================


def bracket(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    """李括号 [x, y]

    Raises:
        AlgebraError: 两个元素属于不同代数
    """
    x._check(y)
    return AlgebraElement(x.algebra, x.algebra.bracket_coefficients(x.coefficients, y.coefficients))


def ad_power(g: AlgebraElement, f: AlgebraElement, j: int) -> AlgebraElement:
    """ad(g)ʲf，其中 ad(g)f := [f, g]"""
    if j < 0:
        raise ValueError(f"ad 幂次必须 ≥ 0，得到 {j}")
    result = f
    for _ in range(j):
        if result.is_zero():
            break
        result = bracket(result, g)
    return result


def _span_basis(vectors: np.ndarray, dim: int) -> np.ndarray:
    """一组向量张成子空间的标准正交基（行）"""
    if vectors.size == 0:
        return np.zeros((0, dim))
    _, sv, vt = np.linalg.svd(vectors, full_matrices=False)
    rank = int(np.sum(sv > STRUCTURE_TOL * max(1.0, float(sv[0]) if sv.size else 1.0)))
    return vt[:rank]


def nilpotency_degree(algebra: NormedLieAlgebra) -> int | None:
    """幂零度：下中心列 𝔤¹ = 𝔤，𝔤ᵏ⁺¹ = [𝔤, 𝔤ᵏ]，返回使 𝔤ᵏ⁺¹ = 0 的最小 k

    Returns:
        幂零度（heisenberg3 为 2，交换代数为 1）；不幂零时返回 None
    """
    d = algebra.dim
    current = np.eye(d)
    for k in range(1, d + 2):
        products = algebra.bracket_coefficients(np.eye(d)[:, None, :], current[None, :, :]).reshape(-1, d)
        current = _span_basis(products, d)
        if current.shape[0] == 0:
            return k
    return None


def bracket_norm_constant(
    algebra: NormedLieAlgebra, samples: int = NORM_SAMPLE_PAIRS, seed: int = DEFAULT_SEED
) -> float:
    """‖[x,y]‖ ≤ C‖x‖‖y‖ 的常数 C

    在单位球顶点对（可枚举时，此时为精确值）与 samples 个种子随机单位向量对上取最大值。
    """
    values = [0.0]
    vertices = algebra.unit_vertices()
    if vertices is not None:
        products = algebra.bracket_coefficients(vertices[:, None, :], vertices[None, :, :])
        values.append(float(np.max(algebra.coefficient_norm(products))))
    if samples:
        rng = np.random.default_rng(seed)
        x = algebra.random_unit(rng, samples)
        y = algebra.random_unit(rng, samples)
        values.append(float(np.max(algebra.coefficient_norm(algebra.bracket_coefficients(x, y)))))
    constant = max(values)
    logger.debug(f"[{algebra.name}] 括号范数常数 C={constant:.6g}")
    return constant


# ==================== 内置代数 ====================


def _heisenberg() -> NormedLieAlgebra:
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    return NormedLieAlgebra(("f", "g", "h"), c, name="heisenberg3")


def _nilpotent2(n: int) -> NormedLieAlgebra:
    if n < 1:
        raise AlgebraError(f"nilpotent2 需要 n ≥ 1，得到 {n}")
    d = 2 * n + 1
    c = np.zeros((d, d, d))
    for i in range(n):
        c[i, n + i, 2 * n], c[n + i, i, 2 * n] = 1.0, -1.0
    labels = tuple(f"a{i + 1}" for i in range(n)) + tuple(f"b{i + 1}" for i in range(n)) + ("c",)
    return NormedLieAlgebra(labels, c, name=f"nilpotent2({n})")


def _abelian(d: int) -> NormedLieAlgebra:
    if d < 1:
        raise AlgebraError(f"abelian 需要 d ≥ 1，得到 {d}")
    return NormedLieAlgebra(tuple(f"e{i + 1}" for i in range(d)), np.zeros((d, d, d)), name=f"abelian({d})")


def builtin(name: str, norm: str = DEFAULT_NORM) -> NormedLieAlgebra:
    """内置代数：heisenberg3 / nilpotent2(n) / abelian(d)

    Raises:
        AlgebraError: 未知名称
    """
    match = re.fullmatch(r"\s*(\w+?)\s*(?:\(\s*(\d+)\s*\))?\s*", name)
    if not match:
        raise AlgebraError(f"无法解析代数名: {name}")
    base, arg = match.group(1), match.group(2)
    if base == "heisenberg3" and arg is None:
        algebra = _heisenberg()
    elif base == "nilpotent2":
        algebra = _nilpotent2(int(arg or 1))
    elif base == "abelian":
        algebra = _abelian(int(arg or 2))
    else:
        raise AlgebraError(f"未知内置代数: {name}（可选: {', '.join(BUILTIN_NAMES)}）")
    return algebra if norm == algebra.norm else algebra.with_norm(norm)
