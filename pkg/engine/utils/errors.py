#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
引擎异常层级。

所有数值模块只抛出 EngineError 的子类；diagnostic 字段携带可序列化的诊断信息，
CLI 会原样打印并写入 JSONL 日志。参数类错误同时继承 ValueError，方便调用方按
标准方式捕获。
"""

from typing import Any, Dict, Optional


class EngineError(Exception):
    def __init__(self, message: str, diagnostic: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostic: Dict[str, Any] = dict(diagnostic or {})


class InvalidInputError(EngineError, ValueError):
    """输入数据不合法：非有限采样、非正参数等。"""


class InvalidArgumentError(EngineError, ValueError):
    """参数取值不合法：未知核类型 / 可观测量、不在网格上的时刻或平移量。"""


class GridMismatchError(InvalidArgumentError):
    pass


class SupportError(InvalidArgumentError):
    """源的支撑超出 [t2, t1]。"""


class DivergentTraceError(EngineError):
    pass


class ConditioningError(EngineError):
    pass


class AsymptoticsError(EngineError):
    pass


class ResolutionError(EngineError):
    pass


class MemoryGuardError(EngineError):
    pass


class ClassificationError(EngineError):
    pass


class CollisionError(EngineError):
    pass


class UnboundOrbitError(EngineError):
    pass


class ScenarioError(EngineError):
    """场景文件解析或校验失败（CLI 以 64 退出）。"""
