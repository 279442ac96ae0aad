#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
tests/test_classical_action.py — 经典守恒律与时间平均测试

测试内容：
  1. Kepler 轨道 : 角动量精确守恒、能量无长期漂移、周期 2π√(ma³/k)
  2. 时间平均    : 维里定理与精细结构平均，窗口残差按 1/τ 衰减
  3. 两体成对力  : 总动量逐步守恒、质心律 N = P·t − M·R 守恒
  4. 异常        : 碰撞、非束缚轨道、参数校验

运行方式（在项目根目录）：
  python tests/test_classical_action.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from engine.classical.classical_action import (
    CentralPotential,
    ForceMode,
    MechSystem,
    average_convergence,
    conservation_report,
    energy_trend,
    fine_structure_average,
    integrate,
    kepler_orbit,
    kepler_period,
    orbital_period,
    system_from_spec,
    virial_average,
)
from engine.utils.errors import CollisionError, InvalidArgumentError, InvalidInputError, UnboundOrbitError

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


def _kepler(periods: int):
    P = kepler_period()
    return integrate(kepler_orbit(0.5), P / 1000, periods * 1000), P


# ── 1. Kepler 轨道 ───────────────────────────────────────────────────────
def test_kepler():
    print("\n=== Kepler 轨道 ===")
    traj, P = _kepler(10)
    cons = conservation_report(traj)
    assert p(f"角动量漂移 {cons.angular_momentum:.2e} < 1e-10", cons.angular_momentum < 1e-10)
    assert p(f"能量漂移 {cons.energy:.2e} < 1e-2", cons.energy < 1e-2)
    trend = energy_trend(traj)
    assert p(f"能量偏差没有长期增长（末/首 = {trend['ratio']:.2f}）", trend["ratio"] < 3.0)

    measured = orbital_period(traj)
    assert p(f"周期 {measured:.6f} ≈ 2π", abs(measured - P) / P < 1e-3)
    assert p("kepler_period(a=4) = 16π", abs(kepler_period(4.0) - 16 * math.pi) < 1e-12)

    assert p("CSV 表头与行等长", len(traj.csv_header()) == len(traj.to_csv_rows(1000)[0]))
    assert p("stride 抽样", len(traj.to_csv_rows(1000)) == 11)


# ── 2. 时间平均 ──────────────────────────────────────────────────────────
def test_time_averages():
    print("\n=== 维里与精细结构平均 ===")
    traj, P = _kepler(10)
    virial = virial_average(traj)
    assert p(f"整周期窗口：2T̄ = −V̄（残差 {virial.residual:.2e}）", virial.residual < 1e-3)
    assert p("Coulomb 时 ⟨r·V'⟩ = −V̄", abs(virial.rhs + np.mean(traj.potential)) < 1e-2)
    fine = fine_structure_average(traj)
    assert p(f"整周期窗口：L²/m⟨1/r³⟩ = ⟨V'⟩（残差 {fine.residual:.2e}）", fine.residual < 1e-3)

    long_traj, _ = _kepler(34)
    conv = average_convergence(long_traj, P)
    assert p(f"维里残差斜率 ≈ −1（{conv['virial_slope']:.3f}）", abs(conv["virial_slope"] + 1.0) < 0.1)
    assert p(f"精细结构残差斜率 ≈ −1（{conv['fine_structure_slope']:.3f}）", abs(conv["fine_structure_slope"] + 1.0) < 0.1)

    assert p("窗口为 0 抛错", _raises(InvalidArgumentError, virial_average, traj, 0.0))
    assert p("窗口超出轨迹抛错", _raises(InvalidArgumentError, virial_average, traj, 100 * P))


# ── 3. 两体成对力 ────────────────────────────────────────────────────────
def test_two_body():
    print("\n=== 两体成对力 ===")
    v = math.sqrt(0.5)
    sys_ = MechSystem(
        [1.0, 1.0],
        [[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]],
        [[0.0, v, 0.0], [0.0, -v, 0.0]],
        CentralPotential.coulomb(1.0),
        ForceMode.PAIRWISE,
    )
    traj = integrate(sys_, 0.01, 2000)
    cons = conservation_report(traj)
    assert p(f"总动量逐步守恒（{cons.momentum_per_step:.2e}）", cons.momentum_per_step < 1e-12)
    assert p("总动量漂移 < 1e-12", cons.momentum < 1e-12)
    assert p("角动量漂移 < 1e-10", cons.angular_momentum < 1e-10)
    assert p("质心律漂移 < 1e-10", cons.boost < 1e-10)

    moving = MechSystem(
        [1.0, 2.0],
        [[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]],
        [[0.3, v, 0.0], [0.1, -v, 0.0]],
        CentralPotential.coulomb(1.0),
        ForceMode.PAIRWISE,
    )
    mtraj = integrate(moving, 0.01, 2000)
    assert p("质心运动时 N 仍守恒", conservation_report(mtraj).boost < 1e-10)
    r_rel = mtraj.positions[:, 0, :] - mtraj.positions[:, 1, :]
    p_rel = (2.0 / 3.0) * (mtraj.momenta[:, 0, :] / 1.0 - mtraj.momenta[:, 1, :] / 2.0)
    boundary = abs(r_rel[-1] @ p_rel[-1] - r_rel[0] @ p_rel[0]) / mtraj.times[-1]
    residual = virial_average(mtraj).residual
    assert p(f"质心系维里残差 = 边界项 d(r·p)/τ（{residual:.3e}）", abs(residual - boundary) < 1e-3)

    spec = {
        "masses": [1.0, 1.0],
        "positions": [[0.5, 0.0], [-0.5, 0.0]],
        "momenta": [[0.0, v], [0.0, -v]],
        "potential": {"kind": "coulomb", "coupling": 1.0},
        "mode": "pairwise",
    }
    built = system_from_spec(spec)
    assert p("场景写法：二维矢量补成三维", built.positions.shape == (2, 3) and built.mode == ForceMode.PAIRWISE)


# ── 4. 异常 ──────────────────────────────────────────────────────────────
def test_errors():
    print("\n=== 异常 ===")
    straight = MechSystem([1.0], [[1.0, 0.0, 0.0]], [[-1.0, 0.0, 0.0]], CentralPotential.harmonic(0.0))
    with np.errstate(all="ignore"):
        assert p("穿过力心抛 CollisionError", _raises(CollisionError, integrate, straight, 0.25, 10))

    escaping = MechSystem([1.0], [[1.0, 0.0, 0.0]], [[0.0, 2.0, 0.0]], CentralPotential.coulomb(1.0))
    traj = integrate(escaping, 0.01, 100)
    assert p("E > 0 时时间平均抛 UnboundOrbitError", _raises(UnboundOrbitError, virial_average, traj))

    assert p("e = 1 抛 InvalidInputError", _raises(InvalidInputError, kepler_orbit, 1.0))
    assert p("dt ≤ 0 抛错", _raises(InvalidInputError, integrate, escaping, 0.0, 10))
    assert p("未知势抛错", _raises(InvalidArgumentError, CentralPotential, "yukawa"))
    assert p("成对力只有一个粒子抛错", _raises(InvalidInputError, MechSystem, [1.0], [[1, 0, 0]], [[0, 1, 0]], CentralPotential.free(), ForceMode.PAIRWISE))
    assert p("场景不能写自定义势", _raises(InvalidArgumentError, system_from_spec, {"masses": [1], "positions": [[1, 0]], "momenta": [[0, 1]], "potential": {"kind": "custom"}}))
    assert p("势参数写错抛错", _raises(InvalidArgumentError, system_from_spec, {"masses": [1], "positions": [[1, 0]], "momenta": [[0, 1]], "potential": {"kind": "coulomb", "k": 1}}))

    three = MechSystem([1, 1], [[1, 0, 0], [0, 2, 0]], [[0, 1, 0], [1, 0, 0]], CentralPotential.harmonic(1.0))
    assert p("没有单一相对坐标时抛错", _raises(InvalidArgumentError, fine_structure_average, integrate(three, 0.01, 10)))


def main():
    test_kepler()
    test_time_averages()
    test_two_body()
    test_errors()
    print("\n=== classical_action tests done ===\n")


if __name__ == "__main__":
    main()
