"""实验任务调度模块"""

from __future__ import annotations

from collections.abc import Callable, Hashable, Sequence
from concurrent.futures import Future, ThreadPoolExecutor
from threading import Event, Lock
from typing import Generic, TypeVar

from ..utils import logger

T = TypeVar("T")


class ExperimentRunner(Generic[T]):
    """实验任务调度器

    各任务（通常每个 n 一个）相互独立，可并行执行；结果按提交顺序返回，
    on_result 回调在锁内串行调用，输出写入因此不会交错。
    """

    def __init__(
        self,
        name: str,
        workers: int = 1,
        on_result: Callable[[Hashable, T], None] | None = None,
    ):
        """初始化调度器

        Args:
            name: 实验名（日志前缀）
            workers: 工作线程数（1 为串行）
            on_result: 单个任务完成后的回调
        """
        self.name = name
        self.workers = max(1, workers)
        self.on_result = on_result

        self._stop_event = Event()
        self._lock = Lock()
        self.completed = 0

    def _run_one(self, key: Hashable, task: Callable[[], T]) -> T | None:
        if self._stop_event.is_set():
            logger.debug(f"[{self.name}] 已停止，跳过任务 {key}")
            return None
        try:
            result = task()
        except Exception as e:
            logger.error(f"[{self.name}] 任务 {key} 出错: {e}", exc_info=True)
            self._stop_event.set()
            raise
        with self._lock:
            self.completed += 1
            if self.on_result:
                try:
                    self.on_result(key, result)
                except Exception as e:
                    logger.error(f"[{self.name}] 结果回调出错: {e}", exc_info=True)
                    raise
        logger.debug(f"[{self.name}] 任务 {key} 完成")
        return result

    def run(self, tasks: Sequence[tuple[Hashable, Callable[[], T]]]) -> list[T]:
        """执行全部任务

        Args:
            tasks: (键, 无参任务) 列表

        Returns:
            按任务顺序排列的结果

        Raises:
            Exception: 任一任务失败时重新抛出（其余未开始的任务被跳过）
        """
        self._stop_event.clear()
        self.completed = 0
        logger.info(f"[{self.name}] 开始 {len(tasks)} 个任务（{self.workers} 线程）")

        if self.workers == 1:
            results = [self._run_one(key, task) for key, task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix=self.name) as pool:
                futures: list[Future] = [pool.submit(self._run_one, key, task) for key, task in tasks]
                results = [future.result() for future in futures]

        logger.info(f"[{self.name}] 完成 {self.completed}/{len(tasks)} 个任务")
        return results

    def stop(self) -> None:
        """停止调度：尚未开始的任务将被跳过"""
        self._stop_event.set()
        logger.info(f"[{self.name}] 调度器已停止")
