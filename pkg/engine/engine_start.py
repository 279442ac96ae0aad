#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
命令行入口（在项目根目录）：

    python -m engine.engine_start run scenarios/square_pulse.json scenarios/algebra.json --jobs 2
    python -m engine.engine_start compare scenarios/path_integral.json --out out

退出码：
    0   全部场景通过
    1   数值模块报错（诊断写入日志和 stderr）
    2   计算完成但有容差检查未通过
    64  场景文件无法解析或不符合 schema
"""

import argparse
import pathlib
import sys
from typing import List, Optional, Sequence

from engine.cli.scenario_models import COMPARE_KINDS, load_scenario
from engine.cli.scenario_runner import Outcome, build_task
from engine.config.config_loader import get_section
from engine.task.task_manager import ScenarioTask, TaskStatus, task_manager
from engine.utils.errors import ScenarioError
from engine.utils.logger import get_component_logger

log = get_component_logger("engine_start", "cli")

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_TOLERANCE = 2
EXIT_USAGE = 64


def build_parser() -> argparse.ArgumentParser:
    cli = get_section("cli")
    parser = argparse.ArgumentParser(prog="engine", description="Run action-principle scenarios and write CSV/JSON results.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=cli["out_dir"], help="output directory (default: %(default)s)")
    common.add_argument("--jobs", type=int, default=cli["jobs"], help="scenarios run concurrently (default: %(default)s)")
    common.add_argument("--tolerance-scale", type=float, default=1.0, help="multiply every acceptance tolerance (testing only)")

    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run one or more scenario files")
    run.add_argument("files", nargs="+", type=pathlib.Path)
    compare = sub.add_parser("compare", parents=[common], help="cross-check one comparison scenario")
    compare.add_argument("file", type=pathlib.Path)
    return parser


# ── 输出 ─────────────────────────────────────────────────────────────────
def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6e}"
    return str(v)


def print_summary(tasks: Sequence[ScenarioTask], out=sys.stdout):
    print(f"{'scenario':<28} {'check':<28} {'value':>14} {'expected':>14} {'tolerance':>12}  status", file=out)
    for task in tasks:
        if task.status == TaskStatus.FAILED:
            print(f"{task.name:<28} {'<' + str(task.failed_step) + '>':<28} {'':>14} {'':>14} {'':>12}  ERROR: {task.error}", file=out)
            continue
        outcome: Outcome = task.result
        if not outcome.checks:
            print(f"{task.name:<28} {'(no checks)':<28} {'':>14} {'':>14} {'':>12}  PASS", file=out)
        for c in outcome.checks:
            status = "PASS" if c.passed else "FAIL"
            print(f"{task.name:<28} {c.metric:<28} {_fmt(c.value):>14} {_fmt(c.expected):>14} {_fmt(c.tolerance):>12}  {status}", file=out)
        print(f"{'':<28} -> {outcome.path}", file=out)


def print_comparison(outcome: Outcome, out=sys.stdout):
    comp = outcome.computation
    print(f"{'route':<14} {'re':>16} {'im':>16} {'abs_err':>12} {'rel_err':>12}", file=out)
    for route, re_, im_, abs_err, rel_err in comp.rows:
        print(f"{route:<14} {re_:>16.10f} {im_:>16.10f} {abs_err:>12.3e} {rel_err:>12.3e}", file=out)
    for key in ("lattice_order", "epsilon_order", "spectral_tail_bound"):
        if key in comp.metrics:
            print(f"{key:<14} {comp.metrics[key]:.4f}", file=out)


def exit_code(tasks: Sequence[ScenarioTask]) -> int:
    code = EXIT_OK
    for task in tasks:
        if task.status == TaskStatus.FAILED:
            if isinstance(task.error, ScenarioError):
                return EXIT_USAGE
            code = EXIT_NUMERICAL
        elif code == EXIT_OK and not task.result.passed:
            code = EXIT_TOLERANCE
    return code


# ── 主流程 ───────────────────────────────────────────────────────────────
def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    files = args.files if args.command == "run" else [args.file]

    # 全部场景先通过 schema 校验，再开始任何计算
    scenarios = []
    for path in files:
        try:
            scenarios.append(load_scenario(path))
        except ScenarioError as e:
            log.error(f"invalid scenario {path}: {e}", extra={"payload": {"diagnostic": e.diagnostic}})
            print(f"{path}: {e}", file=sys.stderr)
            for err in e.diagnostic.get("errors", []):
                print(f"  {'.'.join(str(x) for x in err.get('loc', []))}: {err.get('msg')}", file=sys.stderr)
            return EXIT_USAGE

    if args.command == "compare" and scenarios[0].kind not in COMPARE_KINDS:
        print(f"compare needs a scenario of kind {' or '.join(COMPARE_KINDS)}, got '{scenarios[0].kind}'", file=sys.stderr)
        return EXIT_USAGE
    names = [sc.name for sc in scenarios]
    if len(set(names)) != len(names):
        print("scenario names must be unique within one run", file=sys.stderr)
        return EXIT_USAGE
    if args.tolerance_scale != 1.0:
        log.warning("acceptance tolerances scaled", extra={"payload": {"tolerance_scale": args.tolerance_scale}})

    out_dir = pathlib.Path(args.out)
    tasks = [build_task(sc, out_dir, args.tolerance_scale) for sc in scenarios]
    task_manager.run_sync(tasks, args.jobs)

    if args.command == "compare" and tasks[0].status != TaskStatus.FAILED:
        print_comparison(tasks[0].result)
    print_summary(tasks)
    for task in tasks:
        if task.status == TaskStatus.FAILED:
            print(f"{task.name}: {task.error} {task.error.diagnostic}", file=sys.stderr)
    return exit_code(tasks)


if __name__ == "__main__":
    sys.exit(main())
