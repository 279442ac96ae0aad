#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
TaskManager —— 场景批处理的有界并发调度 + 步骤状态追踪

设计思路：
  - 每个场景注册为一个 ScenarioTask，内部按 load → compute → check → write 顺序执行 Step。
  - Step 是同步的数值函数，通过 asyncio.to_thread 放进线程，并发上限由 Semaphore 控制。
  - 每个任务在自己的上下文里把 trace id 设为场景名，日志按场景串联。
  - 结果按提交顺序返回，与完成先后无关。
"""

import asyncio
import datetime
from typing import Any, Callable, Dict, List, Optional

from engine.utils.errors import EngineError
from engine.utils.logger import current_trace_id, get_component_logger

log = get_component_logger("task_manager", "task")


# ── 数据模型 ─────────────────────────────────────────────────────────────
class StepStatus:
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"
    SKIPPED = "skipped"


class TaskStatus:
    PENDING = "pending"
    RUNNING = "running"
    SUCCESS = "success"
    FAILED = "failed"


class Step:
    """任务内一个可执行步骤；fn 接收上一步的结果（第一步不接收参数）。"""

    def __init__(self, name: str, fn: Callable[..., Any]):
        self.name = name
        self.fn = fn

        self.status: str = StepStatus.PENDING
        self.result: Any = None
        self.error: Optional[str] = None
        self.diagnostic: Dict[str, Any] = {}
        self.started_at: Optional[str] = None
        self.finished_at: Optional[str] = None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "status": self.status,
            "error": self.error,
            "diagnostic": self.diagnostic,
        }


class ScenarioTask:
    """
    一个场景的完整执行单元。

    用法：
        task = ScenarioTask("square_pulse")
        task.add_step("load", load_fn).add_step("compute", compute_fn)
        results = await task_manager.run_all([task], jobs=2)
    """

    def __init__(self, name: str):
        self.name = name
        self.status: str = TaskStatus.PENDING
        self.steps: List[Step] = []
        self.error: Optional[EngineError] = None
        self.result: Any = None

    def add_step(self, name: str, fn: Callable[..., Any]) -> "ScenarioTask":
        self.steps.append(Step(name, fn))
        return self  # 链式调用

    @property
    def failed_step(self) -> Optional[str]:
        for step in self.steps:
            if step.status == StepStatus.FAILED:
                return step.name
        return None

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "status": self.status,
            "steps": [s.to_dict() for s in self.steps],
        }


# ── TaskManager ───────────────────────────────────────────────────────────
class TaskManager:
    """全局任务管理器（进程级单例）。"""

    _instance: Optional["TaskManager"] = None

    def __new__(cls) -> "TaskManager":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    async def run_all(self, tasks: List[ScenarioTask], jobs: int = 1) -> List[ScenarioTask]:
        """并发执行全部任务，返回顺序与提交顺序一致。"""
        semaphore = asyncio.Semaphore(max(1, int(jobs)))
        log.info(f"running {len(tasks)} scenario(s)", extra={"payload": {"jobs": jobs}})
        await asyncio.gather(*[self._run(task, semaphore) for task in tasks])
        return tasks

    def run_sync(self, tasks: List[ScenarioTask], jobs: int = 1) -> List[ScenarioTask]:
        return asyncio.run(self.run_all(tasks, jobs))

    async def _run(self, task: ScenarioTask, semaphore: asyncio.Semaphore):
        async with semaphore:
            # gather 为每个协程复制上下文，这里的设置只影响本任务
            current_trace_id.set(task.name)
            task.status = TaskStatus.RUNNING
            result: Any = None
            for index, step in enumerate(task.steps):
                if task.status == TaskStatus.FAILED:
                    step.status = StepStatus.SKIPPED
                    continue

                step.status = StepStatus.RUNNING
                step.started_at = datetime.datetime.now().isoformat()
                try:
                    if index == 0:
                        result = await asyncio.to_thread(step.fn)
                    else:
                        result = await asyncio.to_thread(step.fn, result)
                except EngineError as e:
                    self._fail(task, step, e)
                    continue
                except Exception as e:
                    # 非引擎异常也包装成 EngineError，CLI 统一按数值失败处理
                    wrapped = EngineError(f"{type(e).__name__}: {e}", {"step": step.name})
                    log.error(f"step '{step.name}' raised unexpected error", exc_info=True)
                    self._fail(task, step, wrapped)
                    continue

                step.status = StepStatus.SUCCESS
                step.result = result
                step.finished_at = datetime.datetime.now().isoformat()
                log.debug(f"step '{step.name}' OK")

            if task.status != TaskStatus.FAILED:
                task.status = TaskStatus.SUCCESS
                task.result = result
            log.info(f"scenario finished → {task.status}")

    @staticmethod
    def _fail(task: ScenarioTask, step: Step, error: EngineError):
        step.status = StepStatus.FAILED
        step.error = str(error)
        step.diagnostic = error.diagnostic
        step.finished_at = datetime.datetime.now().isoformat()
        task.status = TaskStatus.FAILED
        task.error = error
        log.error(
            f"step '{step.name}' FAILED: {error}",
            extra={"payload": {"diagnostic": error.diagnostic}},
        )


# ── 全局单例 ──────────────────────────────────────────────────────────────
task_manager = TaskManager()
