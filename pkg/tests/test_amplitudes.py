#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_amplitudes.py — 受迫振子振幅与 Poisson 统计测试

测试内容：
  1. 真空保持振幅 : 方波 |γ|² = 1 时为 e^{−1/2} e^{iπ/4}
  2. Poisson 表   : p_n、累积、均值、尾部
  3. 单个跃迁振幅 : |⟨n|0⟩|² = p_n
  4. 变换函数     : 无源极限、基态标签退化为真空振幅、源支撑检查

运行方式（在项目根目录）：
  python tests/test_amplitudes.py
"""

import cmath
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from scipy.stats import poisson

from engine.oscillator.amplitudes import (
    CoherentLabel,
    forced_transformation,
    free_transformation,
    source_pair_persistence,
    transition_amplitude,
    transition_probabilities,
    vacuum_persistence,
)
from engine.signal.signal_core import ComplexSignal, TimeGrid, make_signal
from engine.utils.errors import InvalidArgumentError, InvalidInputError, SupportError

PASS = "✅ PASS"
FAIL = "❌ FAIL"

EXPECTED_PERSISTENCE = math.exp(-0.5) * cmath.exp(0.25j * math.pi)


def p(label: str, ok: bool) -> bool:
    print(f"  {PASS if ok else FAIL}  {label}")
    return ok


def _square_pulse() -> ComplexSignal:
    return make_signal("square", TimeGrid.from_span(0.0, math.pi, 3143), amplitude=0.5)


# ── 1. 真空保持振幅 ──────────────────────────────────────────────────────
def test_vacuum_persistence():
    print("\n=== 真空保持振幅 ===")
    K = _square_pulse()
    P = vacuum_persistence(K, 1.0, romberg=True)
    assert p(f"⟨0|0⟩ = e^(−1/2) e^(iπ/4)（{P:.12f}）", abs(P - EXPECTED_PERSISTENCE) < 1e-10)
    assert p("|⟨0|0⟩|² = e^{−|γ|²}", abs(abs(P) ** 2 - math.exp(-1.0)) < 1e-9)

    zero = ComplexSignal.zeros(K.grid)
    assert p("无源时振幅为 1", vacuum_persistence(zero, 1.0) == 1.0)

    K_bar = ComplexSignal(K.grid, np.conj(K.samples))
    assert p("K̄ = K* 时源对振幅退化", abs(source_pair_persistence(K, K_bar, 1.0) - vacuum_persistence(K, 1.0)) < 1e-14)


# ── 2. Poisson 表 ────────────────────────────────────────────────────────
def test_transition_table():
    print("\n=== Poisson 表 ===")
    K = _square_pulse()
    table = transition_probabilities(K, 1.0, n_max=64, romberg=True)
    reference = poisson.pmf(np.arange(65), 1.0)
    assert p("|γ|² = 1", abs(table.gamma.intensity - 1.0) < 1e-9)
    assert p("p_n = e^{−1}/n!", np.max(np.abs(table.p_n - reference)) < 1e-9)
    assert p("Σ p_n = 1", abs(table.p_n.sum() - 1.0) < 1e-12)
    assert p("⟨n⟩ = |γ|²", abs(table.mean - table.gamma.intensity) < 1e-12)
    assert p("p_n 只读", not table.p_n.flags.writeable)

    short = transition_probabilities(K, 1.0, n_max=3)
    assert p("尾部质量 = Poisson 生存函数", abs(short.tail_mass - poisson.sf(3, short.gamma.intensity)) < 1e-15)
    rows = short.to_csv_rows()
    assert p("CSV 行数 = n_max + 1", len(rows) == 4 and rows[-1]["n"] == 3)
    assert p("累积列末项 = Σ p_n", abs(rows[-1]["cumulative"] - short.p_n.sum()) < 1e-15)
    d = short.to_dict()
    assert p("to_dict 带有 gamma_sq 与 p_n", d["gamma_sq"] == short.gamma.intensity and len(d["p_n"]) == 4)

    try:
        transition_probabilities(K, 1.0, n_max=-1)
        ok = False
    except InvalidInputError:
        ok = True
    assert p("n_max < 0 抛 InvalidInputError", ok)


# ── 3. 单个跃迁振幅 ──────────────────────────────────────────────────────
def test_transition_amplitude():
    print("\n=== 跃迁振幅 ===")
    K = _square_pulse()
    table = transition_probabilities(K, 1.0, n_max=6)
    for n in (0, 1, 2, 5):
        amp = transition_amplitude(K, 1.0, n)
        assert p(f"|⟨{n}|0⟩|² = p_{n}", abs(abs(amp) ** 2 - table.p_n[n]) < 1e-12)


# ── 4. 变换函数 ──────────────────────────────────────────────────────────
def test_transformation_functions():
    print("\n=== 变换函数 ===")
    label = CoherentLabel(0.3 - 0.1j, 0.2 + 0.4j)
    free = free_transformation(label, 1.0, 2.0, 2.0)
    assert p("t1 = t2 时为 exp(y†′ y″)", abs(free - cmath.exp(label.y_dag_prime * label.y_double_prime)) < 1e-15)
    try:
        free_transformation(label, 1.0, 0.0, 1.0)
        ok = False
    except InvalidArgumentError:
        ok = True
    assert p("t1 < t2 抛 InvalidArgumentError", ok)

    K = _square_pulse()
    ground = forced_transformation(CoherentLabel(), K, 1.0, math.pi, 0.0)
    assert p("基态标签退化为真空振幅", abs(ground - vacuum_persistence(K, 1.0)) < 1e-14)

    zero = ComplexSignal.zeros(K.grid)
    forced = forced_transformation(label, zero, 1.0, math.pi, 0.0)
    assert p("无源时与自由变换函数一致", abs(forced - free_transformation(label, 1.0, math.pi, 0.0)) < 1e-14)

    try:
        forced_transformation(label, K, 1.0, 2.0, 0.0)
        ok = False
    except SupportError:
        ok = True
    assert p("源支撑超出 [t2, t1] 抛 SupportError", ok)


def main():
    test_vacuum_persistence()
    test_transition_table()
    test_transition_amplitude()
    test_transformation_functions()
    print("\n=== amplitudes tests done ===\n")


if __name__ == "__main__":
    main()
