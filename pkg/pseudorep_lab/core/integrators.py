"""常微分方程积分器

批量起点共享同一自适应步长，因此一次积分即可推进整个网格。
自适应路径使用 scipy 的 RK45 步进器；可分离哈密顿量另有手写的蛙跳。
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..models.config import StepControl
from ..utils import logger
from ..utils.errors import FlowEscapeError, StepUnderflowError

Rhs = Callable[[float, np.ndarray], np.ndarray]
DomainCheck = Callable[[np.ndarray], np.ndarray]

# scipy 对 rtol 的下限
_RTOL_FLOOR = 100 * np.finfo(float).eps


@dataclass
class IntegrationResult:
    """积分结果

    Attributes:
        times: 记录时刻
        states: 对应状态，形状 (len(times), *y0.shape)
        accepted: 接受步数
        nfev: 右端求值次数
    """

    times: np.ndarray
    states: np.ndarray
    accepted: int = 0
    nfev: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def _check_domain(in_domain: DomainCheck | None, y: np.ndarray, t: float) -> None:
    if in_domain is None:
        return
    inside = np.asarray(in_domain(y))
    if not np.all(inside):
        outside = np.argwhere(~inside.reshape(-1))
        first = y.reshape(-1, y.shape[-1])[outside[0, 0]]
        raise FlowEscapeError(
            f"{len(outside)} 条轨道在 t={t:.6g} 离开逃逸区域，首个逃逸点 {np.array2string(first, precision=4)}",
            count=len(outside),
            point=first.copy(),
            time=t,
        )


def rkf45(
    rhs: Rhs,
    y0: np.ndarray,
    t0: float,
    t1: float,
    control: StepControl,
    in_domain: DomainCheck | None = None,
    t_eval: np.ndarray | None = None,
    dense: bool = False,
) -> IntegrationResult:
    """自适应 RK4(5) 积分（scipy RK45 步进器，支持负时间与时变右端）

    整批状态展平后交给一个步进器；scipy 的误差范数是分量均方根，
    容限按 1/√(分量数) 缩小，使逐分量误差仍受 tol 控制。

    Args:
        rhs: 右端 f(t, y)，y 形状 (..., dim)
        y0: 初值
        t0: 起始时刻
        t1: 终止时刻（可小于 t0）
        control: 步长控制
        in_domain: 逐点区域判定，接受步之后检查
        t_eval: 需要记录的时刻（单调朝向 t1），由步进器的稠密输出取值
        dense: 是否记录每个接受步

    Returns:
        积分结果；总是包含起点与终点

    Raises:
        FlowEscapeError: 轨道离开区域
        StepUnderflowError: 步进器失败（步长下溢）或超过最大步数
    """
    y = np.array(y0, dtype=float)
    shape = y.shape
    t = float(t0)
    times = [t]
    states = [y.copy()]
    span = float(t1) - t
    if span == 0.0:
        return IntegrationResult(np.array(times), np.array(states))

    direction = math.copysign(1.0, span)
    targets = [] if t_eval is None else [float(te) for te in t_eval if 0 < direction * (te - t) < abs(span)]
    targets.append(float(t1))

    def fun(tt: float, flat: np.ndarray) -> np.ndarray:
        return np.asarray(rhs(tt, flat.reshape(shape)), dtype=float).reshape(-1)

    tol = max(control.tol / math.sqrt(max(y.size, 1)), _RTOL_FLOOR)
    solver = integrate.RK45(
        fun, t, y.reshape(-1), float(t1), rtol=tol, atol=tol, first_step=min(control.dt_init, abs(span))
    )
    accepted = 0
    pending = 0
    while solver.status == "running":
        if accepted >= control.max_steps:
            raise StepUnderflowError(f"超过最大步数 {control.max_steps}（t={solver.t:.6g}）")
        t_old = solver.t
        message = solver.step()
        if solver.status == "failed":
            raise StepUnderflowError(f"步进器失败: {message}（t={t_old:.6g}）")
        accepted += 1
        t = float(solver.t)
        y = solver.y.reshape(shape)
        _check_domain(in_domain, y, t)

        reached = pending
        while reached < len(targets) - 1 and direction * (targets[reached] - t) <= 0:
            reached += 1
        if reached > pending:
            interpolant = solver.dense_output()
            for target in targets[pending:reached]:
                times.append(target)
                states.append(np.asarray(interpolant(target)).reshape(shape))
            pending = reached
        if dense and solver.status == "running" and t != times[-1]:
            times.append(t)
            states.append(y.copy())

    times.append(float(t1))
    states.append(solver.y.reshape(shape).copy())
    logger.debug(f"[rkf45] t∈[{t0:.4g}, {t1:.4g}] 接受 {accepted} 步，右端求值 {solver.nfev} 次")
    return IntegrationResult(np.array(times), np.array(states), accepted, solver.nfev)


def leapfrog(
    grad: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t: float,
    n_pairs: int,
    dt: float,
    in_domain: DomainCheck | None = None,
) -> IntegrationResult:
    """Störmer–Verlet 蛙跳（可分离哈密顿量 T(p)+V(q)，坐标顺序 q₁..qₙ, p₁..pₙ）

    固定步长取不超过 dt 的 |t|/m。

    Args:
        grad: ∇H，形状 (..., 2n)
        y0: 初值
        t: 积分时间（可为负）
        n_pairs: 自由度 n
        dt: 最大步长
        in_domain: 区域判定
    """
    y = np.array(y0, dtype=float)
    if t == 0:
        return IntegrationResult(np.array([0.0]), y[None].copy())
    steps = max(1, math.ceil(abs(t) / dt))
    h = t / steps
    q, p = y[..., :n_pairs], y[..., n_pairs:]

    def dq(qq: np.ndarray, pp: np.ndarray) -> np.ndarray:
        return grad(np.concatenate([qq, pp], axis=-1))[..., :n_pairs]

    def dp(qq: np.ndarray, pp: np.ndarray) -> np.ndarray:
        return grad(np.concatenate([qq, pp], axis=-1))[..., n_pairs:]

    for i in range(steps):
        p = p - 0.5 * h * dq(q, p)
        q = q + h * dp(q, p)
        p = p - 0.5 * h * dq(q, p)
        _check_domain(in_domain, np.concatenate([q, p], axis=-1), (i + 1) * h)

    final = np.concatenate([q, p], axis=-1)
    return IntegrationResult(np.array([0.0, t]), np.stack([y, final]), steps, 3 * steps)
