#!/usr/bin/env python3
# -*- coding: utf-8 -*-

import os
import re
import pathlib
import yaml
from typing import Any, Dict, Optional
from dotenv import load_dotenv

load_dotenv()

_CONFIG_PATH = pathlib.Path(
    os.environ.get("ENGINE_CONFIG") or pathlib.Path(__file__).parent / "engine_config.yaml"
)

# 配置文件缺项或占位符为空时使用的默认值
_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "logging": {"dir": "logs", "level": "INFO"},
    "quadrature": {"rule": "trapezoid", "romberg": True},
    "oracle": {"n_trunc": 64, "substeps": 1, "leakage_threshold": 1e-6, "leakage_band": 4},
    "keldysh": {"fd_steps": [1e-3, 5e-4], "tau_real_guard": 2 * 3.141592653589793},
    "path": {
        "nu_half_width": 150.0,
        "n_nu": 131072,
        "epsilons": [0.02, 0.01],
        "chunk": 4096,
        "dense_limit": 4096,
    },
    "source_theory": {
        "max_cells": 4_000_000,
        "eta_rel": 1e-6,
        "points_per_wavelength": 16,
        "asymptotic_margin": 2,
    },
    "classical": {"r_min_factor": 1e-6},
    "cli": {"jobs": 1, "out_dir": "out", "write_metadata": False},
}


def _load_config() -> dict:
    if not _CONFIG_PATH.exists():
        return {}
    with open(_CONFIG_PATH, "r", encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}

    # 展开环境变量占位符 ${VAR}
    def expand(val):
        if isinstance(val, str):
            return re.sub(r"\$\{(\w+)\}", lambda m: os.environ.get(m.group(1), ""), val)
        return val

    def walk(obj):
        if isinstance(obj, dict):
            return {k: walk(v) for k, v in obj.items()}
        if isinstance(obj, list):
            return [walk(i) for i in obj]
        return expand(obj)

    return walk(raw)


_config: Optional[dict] = None


def get_config() -> dict:
    global _config
    if _config is None:
        _config = _load_config()
    return _config


def get_section(name: str) -> Dict[str, Any]:
    """返回某一配置段，缺失项和空字符串用默认值补齐。"""
    merged = dict(_DEFAULTS.get(name, {}))
    for key, val in (get_config().get(name) or {}).items():
        if val is None or val == "":
            continue
        merged[key] = val
    return merged
