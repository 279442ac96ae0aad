#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import time
import inspect
from functools import wraps

from engine.utils.logger import engine_logger


def _summary(obj, limit: int = 500) -> str:
    # 数组参数只记录形状，避免把整段采样写进日志
    shape = getattr(obj, "shape", None)
    if shape is not None and not isinstance(obj, (int, float, complex)):
        return f"<{type(obj).__name__} shape={tuple(shape)}>"
    return str(obj)[:limit]


def trace_action(component_type: str, component_name: str = ""):
    """
    通用追踪装饰器：记录 start / end / error 与耗时。
    同时支持普通函数和 async 函数；组件名缺省取被装饰函数名。
    """

    def decorator(func):
        name = component_name or func.__name__
        tag = f"[{component_type.upper()}] {name}"

        def _start(args, kwargs):
            engine_logger.debug(
                f"{tag} invoked.",
                extra={
                    "component_name": name,
                    "component_type": component_type,
                    "action": "start",
                    "payload": {
                        "args": [_summary(a) for a in args],
                        "kwargs": {k: _summary(v) for k, v in kwargs.items()},
                    },
                },
            )
            return time.time()

        def _end(start_time, result):
            duration = round((time.time() - start_time) * 1000, 2)
            engine_logger.info(
                f"{tag} finished in {duration}ms.",
                extra={
                    "component_name": name,
                    "component_type": component_type,
                    "action": "end",
                    "duration_ms": duration,
                    "payload": {"result": _summary(result)},
                },
            )

        def _fail(start_time, e):
            duration = round((time.time() - start_time) * 1000, 2)
            engine_logger.error(
                f"{tag} FAILED: {str(e)}",
                extra={
                    "component_name": name,
                    "component_type": component_type,
                    "action": "error",
                    "duration_ms": duration,
                    "payload": {"error": str(e), "diagnostic": getattr(e, "diagnostic", {})},
                },
            )

        if inspect.iscoroutinefunction(func):

            @wraps(func)
            async def async_func_wrapper(*args, **kwargs):
                start_time = _start(args, kwargs)
                try:
                    result = await func(*args, **kwargs)
                except Exception as e:
                    _fail(start_time, e)
                    raise
                _end(start_time, result)
                return result

            return async_func_wrapper

        @wraps(func)
        def func_wrapper(*args, **kwargs):
            start_time = _start(args, kwargs)
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                _fail(start_time, e)
                raise
            _end(start_time, result)
            return result

        return func_wrapper

    return decorator
