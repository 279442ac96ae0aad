#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_fock_oracle.py — 截断 Fock 空间对照测试

测试内容：
  1. 演化        : 真空列与 Poisson 表一致，U[0,0] 与闭式保持振幅一致；瞬时哈密顿量厄米、节点间线性插值
  2. 截断诊断    : 幺正性、顶部泄漏
  3. 回路迹      : 位移对 / 热态的 Tr[ρ U₋†U₊] 与闭式一致
  4. 可观测量    : 热态转移量子数方差 2.16395
  5. 周期性      : Tr(ρ M y) = e^{−iωτ} Tr(ρ y M)
  6. 参数校验

运行方式（在项目根目录）：
  python tests/test_fock_oracle.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
from scipy.stats import poisson

from engine.oracle.fock_oracle import (
    FockState,
    Observable,
    compare_report,
    evolve,
    hamiltonian_at,
    observable_average,
    periodicity_check,
    time_cycle_trace,
)
from engine.oscillator.amplitudes import vacuum_persistence
from engine.oscillator.keldysh_cycle import InitialState, KeldyshScenario, cycle_trace, displaced_generator, displaced_pair
from engine.signal.signal_core import TimeGrid, make_signal
from engine.utils.errors import InvalidArgumentError, InvalidInputError

PASS = "✅ PASS"
FAIL = "❌ FAIL"


def p(label: str, ok: bool) -> bool:
    print(f"  {PASS if ok else FAIL}  {label}")
    return ok


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def _square_pulse():
    return make_signal("square", TimeGrid.from_span(0.0, math.pi, 3143), amplitude=0.5)


def _shiftable_gaussian():
    grid = TimeGrid(0.0, math.pi / 1000, 4001)
    return make_signal("gaussian", grid, amplitude=0.5, center=5.0, width=0.6)


# ── 1. 演化 ──────────────────────────────────────────────────────────────
def test_evolve():
    print("\n=== 真空列 vs Poisson ===")
    K = _square_pulse()
    prop = evolve(K, 1.0, n_trunc=64)
    p_vac = prop.probabilities()[:11, 0]
    delta = np.max(np.abs(p_vac - poisson.pmf(np.arange(11), 1.0)))
    assert p(f"n ≤ 10 最大偏差 {delta:.2e} < 1e-6", delta < 1e-6)
    err = abs(prop.U[0, 0] - vacuum_persistence(K, 1.0))
    assert p(f"U[0,0] 与闭式保持振幅一致（{err:.2e}）", err < 1e-6)

    report = compare_report(vacuum_persistence(K, 1.0), prop.U[0, 0], prop)
    assert p("对照报告带泄漏与幺正性", report["leakage"] is not None and abs(report["abs_err"] - err) < 1e-15)

    half = evolve(K, 1.0, n_trunc=32, stop_index=1571)
    assert p("stop_index 截止在中点", half.stop_index == 1571)

    H = hamiltonian_at(1.0, K, 1.0, 8)
    assert p("瞬时哈密顿量厄米", np.allclose(H, H.conj().T, atol=0.0))
    assert p("对角线为 ωn", np.allclose(np.diag(H), np.arange(8)))
    assert p("次对角线为 √n·K(t)", np.allclose(np.diag(H, k=-1), 0.5 * np.sqrt(np.arange(1, 8))))
    g = make_signal("gaussian", TimeGrid(0.0, 0.1, 11), amplitude=1.0, center=0.5, width=0.3)
    mid = hamiltonian_at(0.15, g, 1.0, 4)[1, 0]
    assert p("节点之间线性插值", abs(mid - 0.5 * (g.samples[1] + g.samples[2])) < 1e-14)
    assert p("网格外的时刻抛 InvalidArgumentError", _raises(InvalidArgumentError, hamiltonian_at, 4.0, K, 1.0, 8))


# ── 2. 截断诊断 ──────────────────────────────────────────────────────────
def test_truncation():
    print("\n=== 截断诊断 ===")
    K = _square_pulse()
    prop = evolve(K, 1.0, n_trunc=64)
    assert p("U 幺正（1e-10）", prop.unitarity_defect < 1e-10)
    assert p("n_trunc = 64 时泄漏可忽略", prop.leakage() < 1e-12)
    small = evolve(K, 1.0, n_trunc=6)
    assert p("n_trunc = 6 时泄漏明显", small.leakage() > 1e-3)

    state = small.apply(FockState.vacuum(6))
    assert p("作用在真空上保持范数", abs(state.norm_sq - 1.0) < 1e-10)


# ── 3. 回路迹 ────────────────────────────────────────────────────────────
def test_cycle_trace():
    print("\n=== 回路迹 ===")
    K = _shiftable_gaussian()
    pair = displaced_pair(K, 1.0, -math.pi)
    oracle = time_cycle_trace(pair, n_trunc=32)
    closed = displaced_generator(K, 1.0, -math.pi)
    assert p(f"位移对：对照与闭式一致（{abs(oracle - closed):.2e}）", abs(oracle - closed) < 1e-5)

    thermal = displaced_pair(K, 1.0, -math.pi, InitialState.thermal(1.0))
    t_oracle = time_cycle_trace(thermal, n_trunc=48)
    t_closed = cycle_trace(thermal)
    assert p(f"热态：对照与闭式一致（{abs(t_oracle - t_closed):.2e}）", abs(t_oracle - t_closed) < 1e-5)


# ── 4. 可观测量 ──────────────────────────────────────────────────────────
def test_observables():
    print("\n=== 可观测量 ===")
    K = _square_pulse()
    vac = KeldyshScenario(K, K, 1.0)
    assert p("真空 ⟨N⟩ = 1", abs(observable_average(vac, Observable.N, 64) - 1.0) < 1e-6)
    assert p("真空 Var N = 1", abs(observable_average(vac, Observable.VAR_N, 64) - 1.0) < 1e-6)

    s = KeldyshScenario(K, K, 1.0, InitialState.thermal(1.0))
    var = observable_average(s, Observable.VAR_DELTA_N, 64)
    expected = 1.0 + 2.0 / (math.e - 1.0)
    assert p(f"热态转移方差 2.16395（{var:.8f}）", abs(var - expected) < 1e-5)
    assert p("热态转移均值 = |γ|²", abs(observable_average(s, Observable.DELTA_N, 64) - 1.0) < 1e-5)

    assert p("未知可观测量抛错", _raises(InvalidArgumentError, observable_average, vac, "parity", 16))
    tau = KeldyshScenario(K, K, 1.0, InitialState.complex_tau(0.3 - 1j))
    assert p("复权重初态不能求可观测量", _raises(InvalidArgumentError, observable_average, tau, Observable.N, 16))


# ── 5. 周期性 ────────────────────────────────────────────────────────────
def test_periodicity():
    print("\n=== 周期性 ===")
    grid = TimeGrid(0.0, 0.01, 801)
    K = make_signal("gaussian", grid, amplitude=0.4, center=3.0, width=0.8)
    K2 = make_signal("gaussian", grid, amplitude=0.2j, center=5.0, width=0.8)
    for initial in (InitialState.thermal(0.7), InitialState.complex_tau(0.5 - 1.2j)):
        report = periodicity_check(KeldyshScenario(K2, K, 1.0, initial), n_trunc=24)
        assert p(f"{initial.kind}: Tr(ρMy) = q·Tr(ρyM)", report["abs_err"] < 1e-10)
    assert p("真空初态不适用", _raises(InvalidArgumentError, periodicity_check, KeldyshScenario(K, K, 1.0), 8))


# ── 6. 参数校验 ──────────────────────────────────────────────────────────
def test_validation():
    print("\n=== 参数校验 ===")
    K = _square_pulse()
    assert p("n_trunc 超上限抛错", _raises(InvalidInputError, evolve, K, 1.0, 1024))
    assert p("n_trunc < 2 抛错", _raises(InvalidInputError, evolve, K, 1.0, 1))
    assert p("stop_index 越界抛错", _raises(InvalidArgumentError, evolve, K, 1.0, 8, 1, 10**6))
    assert p("数态超出截断抛错", _raises(InvalidInputError, FockState.number, 8, 8))


def main():
    test_evolve()
    test_truncation()
    test_cycle_trace()
    test_observables()
    test_periodicity()
    test_validation()
    print("\n=== fock_oracle tests done ===\n")


if __name__ == "__main__":
    main()
