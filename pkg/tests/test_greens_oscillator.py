#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_greens_oscillator.py — 振子格林函数与双线性型测试

测试内容：
  1. 核恒等式   : −iG_r + iG_a + e^{−iωτ} = 0（机器精度）
  2. 离散恒等式 : 三种双线性型在网格上逐项相消
  3. 保持概率   : Re(−iB_r) = −|γ|²/2 在梯形网格上精确成立
  4. 卷积       : 推迟/超前解之差为 −i e^{−iωt} γ；运动方程残差 O(dt)

运行方式（在项目根目录）：
  python tests/test_greens_oscillator.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from engine.oscillator.greens_oscillator import (
    KernelKind,
    PropagatorKernel,
    bilinear,
    convolution_bilinear_defect,
    convolve_advanced,
    convolve_retarded,
    kernel_identity_defect,
    kernel_value,
    mode_bilinear,
    ode_residual,
)
from engine.signal.signal_core import TimeGrid, fourier_at_frequency, make_signal
from engine.utils.errors import InvalidArgumentError

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


def _gaussian(n: int = 2001, carrier: float = 0.0):
    grid = TimeGrid.from_span(0.0, 10.0, n)
    return make_signal("gaussian", grid, amplitude=0.7 + 0.2j, center=5.0, width=0.5, carrier=carrier)


# ── 1. 核恒等式 ──────────────────────────────────────────────────────────
def test_kernel_identity():
    print("\n=== 核恒等式 ===")
    taus = np.linspace(-10.0, 10.0, 1000)
    for omega in (0.3, 1.0, 7.5):
        assert p(f"ω = {omega}: 恒等式残差为 0", kernel_identity_defect(omega, taus) < 1e-15)
    assert p("G_r(0) = −i（η(0) = 1）", kernel_value(KernelKind.RETARDED, 1.0, 0.0, 0.0) == -1j)
    assert p("G_a(0) = 0", kernel_value(KernelKind.ADVANCED, 1.0, 0.0, 0.0) == 0)
    assert p("G_r 在 τ < 0 为 0", kernel_value(KernelKind.RETARDED, 1.0, -1.0, 0.0) == 0)
    try:
        PropagatorKernel(1.0, "feynman")
        ok = False
    except InvalidArgumentError:
        ok = True
    assert p("未知核类型抛 InvalidArgumentError", ok)


# ── 2. 离散恒等式 ────────────────────────────────────────────────────────
def test_discrete_identity():
    print("\n=== 离散恒等式 ===")
    K = _gaussian(carrier=0.4)
    L = _gaussian(n=2001, carrier=-0.3)
    for romberg in (False, True):
        br = bilinear(L, PropagatorKernel(1.0, KernelKind.RETARDED), K, romberg=romberg)
        ba = bilinear(L, PropagatorKernel(1.0, KernelKind.ADVANCED), K, romberg=romberg)
        b0 = bilinear(L, PropagatorKernel(1.0, KernelKind.ONSHELL), K, romberg=romberg)
        assert p(f"romberg={romberg}: −iB_r + iB_a + B_0 = 0", abs(-1j * br + 1j * ba + b0) < 1e-12)

    grid = K.grid
    omegas = np.array([0.5, 1.0, 2.0])
    rows = mode_bilinear(
        KernelKind.RETARDED,
        omegas,
        np.tile(K.samples, (3, 1)),
        np.tile(K.samples, (3, 1)),
        grid.times,
        grid.trapezoid_weights(),
    )
    single = [bilinear(K, PropagatorKernel(w, KernelKind.RETARDED), K, romberg=False) for w in omegas]
    assert p("批量双线性型与逐个计算一致", np.allclose(rows, single, rtol=0, atol=1e-12))


# ── 3. 保持概率 ──────────────────────────────────────────────────────────
def test_persistence_modulus():
    print("\n=== 保持概率 ===")
    K = _gaussian(n=401)
    br = bilinear(K, PropagatorKernel(1.0, KernelKind.RETARDED), K, romberg=False)
    g_sq = fourier_at_frequency(K, 1.0, rule="trapezoid").intensity
    assert p("Re(−iB_r) = −|γ|²/2（离散精确）", abs((-1j * br).real + 0.5 * g_sq) < 1e-13)
    assert p("|e^{−iB_r}|² = e^{−|γ|²}", abs(abs(np.exp(-1j * br)) ** 2 - math.exp(-g_sq)) < 1e-13)


# ── 4. 卷积 ──────────────────────────────────────────────────────────────
def test_convolutions():
    print("\n=== 推迟 / 超前卷积 ===")
    K = _gaussian()
    yr = convolve_retarded(K, 1.0).samples
    ya = convolve_advanced(K, 1.0).samples
    assert p("推迟解在源之前为 0", abs(yr[0]) < 1e-12)
    assert p("超前解在源之后为 0", abs(ya[-1]) < 1e-12)

    gamma = fourier_at_frequency(K, 1.0, rule="trapezoid").gamma
    diff = yr - ya + 1j * np.exp(-1j * K.times) * gamma
    assert p("y_r − y_a = −i e^{−iωt} γ", np.max(np.abs(diff)) < 1e-12)

    coarse = np.max(np.abs(ode_residual(_gaussian(1001), 1.0)))
    fine = np.max(np.abs(ode_residual(_gaussian(2001), 1.0)))
    ratio = coarse / fine
    assert p(f"运动方程残差一阶收敛（比值 {ratio:.3f}）", 1.8 < ratio < 2.2)

    coarse_a = np.max(np.abs(ode_residual(_gaussian(1001), 1.0, KernelKind.ADVANCED)))
    fine_a = np.max(np.abs(ode_residual(_gaussian(2001), 1.0, KernelKind.ADVANCED)))
    assert p(f"超前解满足同一方程，残差一阶收敛（比值 {coarse_a / fine_a:.3f}）", 1.8 < coarse_a / fine_a < 2.2)
    assert p("在壳核没有运动方程残差", _raises(InvalidArgumentError, ode_residual, K, 1.0, KernelKind.ONSHELL))

    defect = convolution_bilinear_defect(K, 1.0)
    assert p(f"∫K*·(G∗K) 与双线性型逐项一致（{defect:.1e}）", defect < 1e-12)


def main():
    test_kernel_identity()
    test_discrete_identity()
    test_persistence_modulus()
    test_convolutions()
    print("\n=== greens_oscillator tests done ===\n")


if __name__ == "__main__":
    main()
