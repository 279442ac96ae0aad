#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
引擎日志：stderr 一行一条（给人看），logs/trace_<日期>.jsonl 一行一个 JSON（给脚本看）。

每条记录都带 trace_id（CLI 里是场景名）、component_name / component_type、
action（start / end / error / step）和 payload。数值模块统一这样取 logger：

    log = get_component_logger("fock_oracle", "oracle")
    log.info("propagated", extra={"payload": {"leakage": 1e-9}})

logging.dir 配成 "-" 时不写 JSONL 文件。
"""

import json
import logging
import os
from contextvars import ContextVar
from datetime import datetime
from typing import Any, Dict, MutableMapping, Tuple

from engine.config.config_loader import get_section

LOGGER_NAME = "action_engine"
NO_FILE = "-"

current_trace_id: ContextVar[str] = ContextVar("current_trace_id", default="SYSTEM")

_RECORD_FIELDS = ("component_name", "component_type", "action", "duration_ms", "payload")


class JSONLFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        entry: Dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "trace_id": getattr(record, "trace_id", "SYSTEM"),
            "message": record.getMessage(),
        }
        for key in _RECORD_FIELDS:
            entry[key] = getattr(record, key, None)
        if record.exc_info:
            entry["exception"] = self.formatException(record.exc_info)
        # numpy 标量、复数等交给 str
        return json.dumps(entry, ensure_ascii=False, default=str)


class ConsoleFormatter(logging.Formatter):
    """ERROR 及以上把 payload 里的 diagnostic 接在消息后面。"""

    def __init__(self):
        super().__init__("%(asctime)s | %(levelname)-7s | %(trace_id)s | %(message)s", datefmt="%H:%M:%S")

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        diagnostic = (getattr(record, "payload", None) or {}).get("diagnostic")
        if record.levelno >= logging.ERROR and diagnostic:
            line += f" | {json.dumps(diagnostic, ensure_ascii=False, default=str)}"
        return line


class TraceFilter(logging.Filter):
    def filter(self, record: logging.LogRecord) -> bool:
        record.trace_id = current_trace_id.get()
        return True


def setup_engine_logger(log_dir: str = "", level: str = "") -> logging.Logger:
    section = get_section("logging")
    log_dir = log_dir or section["dir"]
    level = (level or section["level"]).upper()

    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(getattr(logging, level, logging.INFO))
    logger.propagate = False
    # 重复调用时先清掉旧 handler / filter
    logger.handlers.clear()
    for flt in list(logger.filters):
        logger.removeFilter(flt)
    logger.addFilter(TraceFilter())

    console = logging.StreamHandler()  # stderr，stdout 留给 CLI 汇总表
    console.setFormatter(ConsoleFormatter())
    logger.addHandler(console)

    if log_dir != NO_FILE:
        os.makedirs(log_dir, exist_ok=True)
        path = os.path.join(log_dir, f"trace_{datetime.now():%Y-%m-%d}.jsonl")
        sink = logging.FileHandler(path, encoding="utf-8")
        sink.setFormatter(JSONLFormatter())
        logger.addHandler(sink)

    return logger


engine_logger = setup_engine_logger()


class ComponentLoggerAdapter(logging.LoggerAdapter):
    """给每条记录补上组件名 / 类型；调用方传的 extra 优先。"""

    def __init__(self, logger: logging.Logger, component_name: str, component_type: str):
        super().__init__(logger, {"component_name": component_name, "component_type": component_type})

    def process(self, msg: str, kwargs: MutableMapping[str, Any]) -> Tuple[str, MutableMapping[str, Any]]:
        extra = {**self.extra, "action": "step", "payload": {}, **kwargs.get("extra", {})}
        kwargs["extra"] = extra
        return f"[{extra['component_type']}] {extra['component_name']}: {msg}", kwargs


def get_component_logger(component_name: str, component_type: str) -> ComponentLoggerAdapter:
    return ComponentLoggerAdapter(engine_logger, component_name, component_type)
