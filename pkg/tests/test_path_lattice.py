#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_path_lattice.py — 路径积分两条路线测试

测试内容：
  1. 格点路线 : 方波保持振幅一阶收敛到 e^{−1/2} e^{iπ/4}
  2. 格点格林函数 : 严格因果、与 −i e^{−iωτ} 一致、稠密上限
  3. 频域路线 : ε 外推后的误差、尾部估计、ε → 0⁺ 单调趋近
  4. 参数校验 : 频率窗必须包住 ω

运行方式（在项目根目录）：
  python tests/test_path_lattice.py
"""

import cmath
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from engine.path.path_lattice import (
    FrequencyGrid,
    convergence_study,
    epsilon_study,
    fit_order,
    lattice_greens,
    lattice_persistence,
    spectral_persistence,
)
from engine.signal.signal_core import ComplexSignal, TimeGrid, make_signal
from engine.utils.errors import InvalidArgumentError, InvalidInputError, MemoryGuardError

PASS = "✅ PASS"
FAIL = "❌ FAIL"

EXPECTED = math.exp(-0.5) * cmath.exp(0.25j * math.pi)


def p(label: str, ok: bool) -> bool:
    print(f"  {PASS if ok else FAIL}  {label}")
    return ok


def _raises(exc, fn, *args, **kwargs) -> bool:
    try:
        fn(*args, **kwargs)
    except exc:
        return True
    return False


def _square_at(dt: float) -> ComplexSignal:
    n = int(round(math.pi / dt)) + 1
    return make_signal("square", TimeGrid.from_span(0.0, math.pi, n), amplitude=0.5)


# ── 1. 格点路线 ──────────────────────────────────────────────────────────
def test_lattice_route():
    print("\n=== 格点路线 ===")
    dts = [math.pi / 1000, math.pi / 2000, math.pi / 4000]
    study = convergence_study(_square_at, 1.0, dts, EXPECTED)
    errs = [r["abs_err"] for r in study["rows"]]
    assert p(f"误差随 dt 减小（{errs[0]:.2e} → {errs[-1]:.2e}）", errs[0] > errs[1] > errs[2])
    assert p(f"收敛阶 ≈ 1（{study['order']:.3f}）", abs(study["order"] - 1.0) < 0.1)
    assert p("最细网格误差 < 1e-3", errs[-1] < 1e-3)

    zero = ComplexSignal.zeros(TimeGrid(0.0, 0.1, 10))
    assert p("无源时严格为 1", lattice_persistence(zero, 1.0) == 1.0)

    assert p("fit_order 还原斜率 2", abs(fit_order([0.1, 0.05, 0.025], [0.01, 0.0025, 0.000625]) - 2.0) < 1e-12)


# ── 2. 格点格林函数 ──────────────────────────────────────────────────────
def test_lattice_greens():
    print("\n=== 格点格林函数 ===")
    grid = TimeGrid(0.0, 0.01, 200)
    G = lattice_greens(grid, 1.0)
    assert p("对角线以上严格为 0", np.all(np.triu(G, k=1) == 0))

    tau = grid.times[:, None] - grid.times[None, :]
    continuum = np.where(tau >= 0, -1j * np.exp(-1j * tau), 0.0)
    dev = np.max(np.abs(np.tril(G - continuum)))
    assert p(f"下三角与 −i e^(−iωτ) 一致（{dev:.2e}）", dev < 0.05)

    big = TimeGrid(0.0, 0.01, 5000)
    assert p("超过 dense_limit 抛 MemoryGuardError", _raises(MemoryGuardError, lattice_greens, big, 1.0))


# ── 3. 频域路线 ──────────────────────────────────────────────────────────
def test_spectral_route():
    print("\n=== 频域路线 ===")
    K = _square_at(math.pi / 1000)
    fg = FrequencyGrid.around(1.0, half_width=40.0, n_nu=32768)
    value, report = spectral_persistence(K, 1.0, fg, epsilons=[0.04, 0.02], details=True)
    err = abs(value - EXPECTED)
    assert p(f"ε 外推后误差 {err:.2e} < 2e-3", err < 2e-3)
    assert p(f"尾部估计很小（{report['tail_bound']:.2e}）", report["tail_bound"] < 1e-4)
    assert p("ε 按降序使用", report["epsilons"] == [0.04, 0.02])
    assert p("每个 ε 至少两个频点", report["points_per_epsilon"] >= 2)

    study = epsilon_study(K, 1.0, [0.16, 0.08, 0.04], value, fg)
    errs = [r["abs_err"] for r in study["rows"]]
    assert p("ε → 0⁺ 时误差单调减小", errs[0] > errs[1] > errs[2])
    assert p(f"ε 方向近似一阶（{study['order']:.3f}）", 0.7 < study["order"] < 1.3)


# ── 4. 参数校验 ──────────────────────────────────────────────────────────
def test_validation():
    print("\n=== 参数校验 ===")
    K = _square_at(math.pi / 100)
    off = FrequencyGrid(2.0, 3.0, 100, 0.01)
    assert p("频率窗不含 ω 抛 InvalidArgumentError", _raises(InvalidArgumentError, spectral_persistence, K, 1.0, off))
    assert p("空频率窗抛 InvalidInputError", _raises(InvalidInputError, FrequencyGrid, 1.0, 0.0, 100, 0.01))
    assert p("ε ≤ 0 抛 InvalidInputError", _raises(InvalidInputError, FrequencyGrid, 0.0, 2.0, 100, 0.0))
    assert p("with_epsilon 只换 ε", off.with_epsilon(0.5).n_nu == 100 and off.with_epsilon(0.5).epsilon == 0.5)


def main():
    test_lattice_route()
    test_lattice_greens()
    test_spectral_route()
    test_validation()
    print("\n=== path_lattice tests done ===\n")


if __name__ == "__main__":
    main()
