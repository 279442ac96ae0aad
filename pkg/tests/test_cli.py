#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_cli.py — 命令行与场景文件测试

测试内容：
  1. schema 校验 : 未知字段、未知 kind、负容差都抛 ScenarioError
  2. 退出码      : 64 场景错误 / 2 容差未通过 / 0 全部通过
  3. 输出文件    : JSON 按键排序，重复运行逐字节相同；输出路径不能逃出 --out
  4. 渲染        : 非有限数写成字符串，复数写成 [re, im]

运行方式（在项目根目录）：
  python tests/test_cli.py
"""

import json
import math
import os
import pathlib
import sys
import tempfile

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from engine.cli.artifacts import render_csv, render_json
from engine.cli.scenario_models import load_scenario, parse_scenario
from engine.engine_start import EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE, main
from engine.utils.errors import ScenarioError

PASS = "✅ PASS"
FAIL = "❌ FAIL"

ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def p(label: str, ok: bool) -> bool:
    print(f"  {PASS if ok else FAIL}  {label}")
    return ok


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def _algebra() -> dict:
    return json.loads((SCENARIOS / "algebra.json").read_text(encoding="utf-8"))


def _write(tmp: pathlib.Path, name: str, data) -> pathlib.Path:
    path = tmp / name
    path.write_text(data if isinstance(data, str) else json.dumps(data), encoding="utf-8")
    return path


# ── 1. schema 校验 ───────────────────────────────────────────────────────
def test_schema():
    print("\n=== schema 校验 ===")
    for path in sorted(SCENARIOS.glob("*.json")):
        sc = load_scenario(path)
        assert p(f"{path.name} 通过校验（kind = {sc.kind}）", sc.name == path.stem)

    bad_field = dict(_algebra(), colour="red")
    assert p("未知字段抛 ScenarioError", _raises(ScenarioError, parse_scenario, bad_field))
    assert p("未知 kind 抛 ScenarioError", _raises(ScenarioError, parse_scenario, dict(_algebra(), kind="qed")))
    assert p("负容差抛 ScenarioError", _raises(ScenarioError, parse_scenario, dict(_algebra(), acceptance={"n_failed": -1.0})))
    assert p("名字带斜杠抛 ScenarioError", _raises(ScenarioError, parse_scenario, dict(_algebra(), name="a/b")))
    try:
        parse_scenario(bad_field)
    except ScenarioError as e:
        assert p("诊断里带 pydantic 错误列表", len(e.diagnostic["errors"]) >= 1)
    assert p("文件不存在抛 ScenarioError", _raises(ScenarioError, load_scenario, SCENARIOS / "missing.json"))


# ── 2. 退出码 ────────────────────────────────────────────────────────────
def test_exit_codes():
    print("\n=== 退出码 ===")
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        out = tmp / "out"

        broken = _write(tmp, "broken.json", "{not json")
        assert p("坏 JSON 返回 64", main(["run", str(broken), "--out", str(out)]) == EXIT_USAGE)
        assert p("坏文件时不产生任何输出", not out.exists())

        algebra = str(SCENARIOS / "algebra.json")
        assert p("compare 非比较场景返回 64", main(["compare", algebra, "--out", str(out)]) == EXIT_USAGE)
        assert p("重名场景返回 64", main(["run", algebra, algebra, "--out", str(out)]) == EXIT_USAGE)

        escaping = dict(_algebra(), name="escape", output={"path": "../escape.json"})
        path = _write(tmp, "escaping_scenario.json", escaping)
        assert p("输出路径逃出 --out 返回 64", main(["run", str(path), "--out", str(out)]) == EXIT_USAGE)
        assert p("没有写到 --out 外", not (tmp / "escape.json").exists())

        assert p("代数场景全部通过返回 0", main(["run", algebra, "--out", str(out)]) == EXIT_OK)
        result = out / "algebra.json"
        assert p("写出 out/algebra.json", result.is_file())
        payload = json.loads(result.read_text(encoding="utf-8"))
        assert p("所有检查通过", payload["checks"] and all(c["passed"] for c in payload["checks"]))

        strict = dict(_algebra(), name="strict", targets={"n_failed": 1.0})
        path = _write(tmp, "strict.json", strict)
        assert p("达不到的目标值返回 2", main(["run", str(path), "--out", str(out)]) == EXIT_TOLERANCE)
        checks = json.loads((out / "strict.json").read_text(encoding="utf-8"))["checks"]
        assert p("失败的检查也写进结果文件", any(not c["passed"] for c in checks))

        unknown_metric = dict(_algebra(), name="unknown_metric", acceptance={"no_such_metric": 1.0})
        path = _write(tmp, "unknown_metric.json", unknown_metric)
        assert p("acceptance 引用不存在的指标返回 64", main(["run", str(path), "--out", str(out)]) == EXIT_USAGE)

        assert p("argparse 用法错误抛 SystemExit", _raises(SystemExit, main, ["frobnicate"]))


# ── 3. 输出文件 ──────────────────────────────────────────────────────────
def test_deterministic_output():
    print("\n=== 输出文件 ===")
    csv_scenario = dict(_algebra(), name="algebra_csv", output={"format": "csv"})
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        path = _write(tmp, "algebra_csv.json", csv_scenario)
        texts = []
        for run in ("a", "b"):
            assert p(f"第 {run} 次运行返回 0", main(["run", str(path), "--out", str(tmp / run)]) == EXIT_OK)
            texts.append((tmp / run / "algebra_csv.csv").read_bytes())
        assert p("两次运行逐字节相同", texts[0] == texts[1])
        assert p("CSV 表头为 check,pass", texts[0].decode("utf-8").splitlines()[0] == "check,pass")
        leftovers = [f.name for f in (tmp / "a").iterdir() if f.name.startswith(".")]
        assert p("没有残留临时文件", not leftovers)


# ── 4. 渲染 ──────────────────────────────────────────────────────────────
def test_render():
    print("\n=== 渲染 ===")
    text = render_json({"b": 1.0, "a": complex(1.0, -2.0), "c": math.inf, "d": float("nan")})
    data = json.loads(text)
    assert p("键排序", list(data) == ["a", "b", "c", "d"])
    assert p("复数写成 [re, im]", data["a"] == [1.0, -2.0])
    assert p("非有限数写成字符串", data["c"] == "inf" and data["d"] == "nan")
    assert p("以换行结尾", text.endswith("\n"))

    csv_text = render_csv(["x", "y"], [[0.1, "a"], [2, "b"]])
    assert p("浮点按 repr 写出", csv_text == "x,y\n0.1,a\n2,b\n")


def main_tests():
    test_schema()
    test_exit_codes()
    test_deterministic_output()
    test_render()
    print("\n=== cli tests done ===\n")


if __name__ == "__main__":
    main_tests()
