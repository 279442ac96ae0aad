#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
结果文件的原子写入：先写同目录临时文件，再 os.replace。
JSON 按键排序、CSV 列顺序固定，同一场景重复运行逐字节相同。
"""

import csv
import io
import json
import math
import os
import pathlib
import tempfile
from typing import Any, Dict, List, Sequence

import numpy as np

from engine.utils.logger import get_component_logger

log = get_component_logger("artifacts", "cli")


def _plain(obj: Any) -> Any:
    """numpy / complex → JSON 原生类型；非有限数写成字符串。"""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_plain(float(obj.real)), _plain(float(obj.imag))]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def render_json(payload: Dict[str, Any]) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_csv(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def write_atomic(path: pathlib.Path, text: str) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.debug("artifact written", extra={"payload": {"path": str(path), "bytes": len(text)}})
    return path
