#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_keldysh_cycle.py — 时间回路生成泛函测试

测试内容：
  1. 归一化       : K₊ = K₋ 时泛函为 1（随机源）
  2. 位移对       : 直接代入 vs 闭式 e^{|γ|²(e^{−iωT} − 1)}；ωT = π 时为 e^{−2}
  3. 矩           : 真空 / 数态 / 热态的均值与方差
  4. 生成函数反演 : DFT 还原 Poisson 表
  5. 复 τ 初态    : τ = −iβ 与热态一致；Im τ ≥ 0 发散
  6. 关联函数     : 泛函二阶导数的差分 vs 闭式

运行方式（在项目根目录）：
  python tests/test_keldysh_cycle.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from scipy.stats import poisson

from engine.oscillator.keldysh_cycle import (
    InitialState,
    KeldyshScenario,
    complex_tau_occupation,
    correlation_closed_form,
    correlation_fd,
    cycle_trace,
    displaced_cross_check,
    displaced_generator,
    displaced_pair,
    generating_function_inversion,
    moments,
    number_state_generator,
    thermal_occupation,
    time_cycle_functional,
)
from engine.signal.signal_core import ComplexSignal, TimeGrid, make_signal
from engine.utils.errors import DivergentTraceError, GridMismatchError, InvalidArgumentError

PASS = "✅ PASS"
FAIL = "❌ FAIL"

THERMAL_VAR = 1.0 + 2.0 / (math.e - 1.0)


def p(label: str, ok: bool) -> bool:
    print(f"  {PASS if ok else FAIL}  {label}")
    return ok


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def _square_pulse() -> ComplexSignal:
    return make_signal("square", TimeGrid.from_span(0.0, math.pi, 3143), amplitude=0.5)


def _shiftable_gaussian() -> ComplexSignal:
    """dt = π/500，平移 π 对应 500 步，源两侧留足空白。"""
    grid = TimeGrid(0.0, math.pi / 500, 2001)
    return make_signal("gaussian", grid, amplitude=0.5, center=5.0, width=0.6)


# ── 1. 归一化 ────────────────────────────────────────────────────────────
def test_normalization():
    print("\n=== K₊ = K₋ 归一化 ===")
    rng = np.random.default_rng(7)
    grid = TimeGrid(0.0, 0.01, 301)
    worst = 0.0
    for _ in range(20):
        K = ComplexSignal(grid, rng.normal(size=301) + 1j * rng.normal(size=301))
        worst = max(worst, abs(time_cycle_functional(KeldyshScenario(K, K, 1.3)) - 1.0))
    assert p(f"20 个随机源的最大偏差 {worst:.2e} < 1e-12", worst < 1e-12)

    other = ComplexSignal(TimeGrid(0.0, 0.02, 301), np.zeros(301))
    assert p("两支不同网格抛 GridMismatchError", _raises(GridMismatchError, KeldyshScenario, other, ComplexSignal.zeros(grid), 1.0))


# ── 2. 位移对 ────────────────────────────────────────────────────────────
def test_displaced_pair():
    print("\n=== 位移对生成函数 ===")
    K = _shiftable_gaussian()
    report = displaced_cross_check(K, 1.0, -math.pi)
    assert p(f"直接代入与闭式一致（{report['abs_err']:.2e}）", report["abs_err"] < 1e-8)

    assert p("T = 0 时生成函数为 1", abs(displaced_generator(K, 1.0, 0.0) - 1.0) < 1e-14)

    square = _square_pulse()
    G = displaced_generator(square, 1.0, math.pi)
    assert p(f"|γ|² = 1, ωT = π 时为 e^(−2)（{G.real:.10f}）", abs(G - math.exp(-2.0)) < 1e-9)
    assert p("平移量不是 dt 整数倍抛错", _raises(InvalidArgumentError, displaced_generator, square, 1.0, 1e-4))

    pair = displaced_pair(K, 1.0, -math.pi, InitialState.number(2))
    direct = cycle_trace(pair)
    closed = number_state_generator(K, 1.0, -math.pi, 2)
    assert p("数态回路迹与 Laguerre 闭式一致", abs(direct - closed) < 1e-8)


# ── 3. 矩 ────────────────────────────────────────────────────────────────
def test_moments():
    print("\n=== 均值与方差 ===")
    K = _square_pulse()
    vac = moments(KeldyshScenario(K, K, 1.0))
    assert p("真空 ⟨N⟩ = |γ|²", abs(vac.mean_n - vac.gamma_sq) < 1e-6)
    assert p("真空 Var = |γ|²", abs(vac.var_n - vac.gamma_sq) < 1e-6)

    num = moments(KeldyshScenario(K, K, 1.0, InitialState.number(3)))
    assert p(f"数态 n = 3 方差为 7（{num.var_n:.8f}）", abs(num.var_n - 7.0) < 1e-5)
    assert p("数态末态均值 = n + |γ|²", abs(num.final_mean - 4.0) < 1e-5)

    th = moments(KeldyshScenario(K, K, 1.0, InitialState.thermal(1.0)))
    assert p(f"热态 β = ω = 1 方差为 2.16395（{th.var_n:.8f}）", abs(th.var_n - THERMAL_VAR) < 1e-5)
    assert p("热态初始占有 = 1/(e − 1)", abs(th.initial_mean - thermal_occupation(1.0, 1.0)) < 1e-15)

    tau = KeldyshScenario(K, K, 1.0, InitialState.complex_tau(-1j))
    assert p("复 τ 初态没有矩", _raises(InvalidArgumentError, moments, tau))


# ── 4. 生成函数反演 ──────────────────────────────────────────────────────
def test_inversion():
    print("\n=== 生成函数反演 ===")
    K = _square_pulse()
    p_inv = generating_function_inversion(K, 1.0, 10)
    ref = poisson.pmf(np.arange(11), 1.0)
    assert p("DFT 还原 Poisson 表（1e-8）", np.max(np.abs(p_inv - ref)) < 1e-8)


# ── 5. 复 τ 初态 ─────────────────────────────────────────────────────────
def test_complex_tau():
    print("\n=== 复 τ 初态 ===")
    K = _shiftable_gaussian()
    thermal = cycle_trace(displaced_pair(K, 1.0, -math.pi, InitialState.thermal(1.0)))
    tau = cycle_trace(displaced_pair(K, 1.0, -math.pi, InitialState.complex_tau(-1j)))
    assert p("τ = −iβ 与热态一致", abs(thermal - tau) < 1e-12)
    assert p("Im τ ≥ 0 抛 DivergentTraceError", _raises(DivergentTraceError, complex_tau_occupation, 0.5 + 0.1j, 1.0))
    assert p("β = 0 占有数发散", _raises(DivergentTraceError, thermal_occupation, 0.0, 1.0))
    assert p("τ 实部超出范围抛错", _raises(InvalidArgumentError, complex_tau_occupation, 100.0 - 1j, 1.0))

    infinite = displaced_pair(K, 1.0, -math.pi, InitialState.thermal(0.0))
    assert p("β = 0 且两支不同时回路迹发散", _raises(DivergentTraceError, cycle_trace, infinite))


# ── 6. 关联函数 ──────────────────────────────────────────────────────────
def test_correlation():
    print("\n=== 关联函数 ===")
    grid = TimeGrid(0.0, 0.05, 201)
    K = make_signal("gaussian", grid, amplitude=0.6 - 0.2j, center=4.0, width=1.0)
    K2 = make_signal("gaussian", grid, amplitude=0.3, center=5.0, width=1.5)
    s = KeldyshScenario(K2, K, 1.0)
    for t, t_prime in ((6.0, 3.0), (2.0, 7.5)):
        fd = correlation_fd(s, t, t_prime)
        closed = correlation_closed_form(s, t, t_prime)
        assert p(f"t = {t}, t′ = {t_prime}: 差分与闭式一致", abs(fd - closed) < 1e-7 * max(1.0, abs(closed)))
    thermal = KeldyshScenario(K, K, 1.0, InitialState.thermal(1.0))
    assert p("关联函数只定义在真空初态", _raises(InvalidArgumentError, correlation_closed_form, thermal, 1.0, 1.0))


def main():
    test_normalization()
    test_displaced_pair()
    test_moments()
    test_inversion()
    test_complex_tau()
    test_correlation()
    print("\n=== keldysh_cycle tests done ===\n")


if __name__ == "__main__":
    main()
