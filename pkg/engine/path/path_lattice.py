#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
path_lattice —— 真空保持振幅的两条路径积分路线

1. 格点路线：作用量 ∫dt[i y† dy/dt − ω y†y − y†K − K*y] 在网格上离散为
       (D y)_k = i(y_k − y_{k−1})/dt − ω y_k
   D 为下双对角矩阵，逆矩阵自动是推迟的（严格因果）。二次型的 Gaussian 积分给出
       ⟨0|0⟩^K = exp(−i·dt·K† D⁻¹ K)
   行列式因子在 K ≡ 0 时为同一个常数，直接归一化掉。

2. 频域路线：G_r(τ) = ∫dν/2π e^{−iντ}/(ν − ω + iε)，于是
       ⟨0|0⟩^K = exp(−i ∫dν/2π |K(ν)|² / (ν − ω + iε))
   在有限频率窗上做梯形积分，两个 ε 值线性外推到 ε → 0⁺。

p 积分约化到位形空间的推导见同目录 readme.md。
"""

from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate, sparse
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import spsolve_triangular

from engine.config.config_loader import get_section
from engine.signal.signal_core import ComplexSignal, TimeGrid, fourier_transform, require_finite
from engine.utils.decorators import trace_action
from engine.utils.errors import ConditioningError, InvalidArgumentError, InvalidInputError, MemoryGuardError
from engine.utils.logger import get_component_logger

log = get_component_logger("path_lattice", "path")


# ── 数据类型 ─────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class FrequencyGrid:
    nu_min: float
    nu_max: float
    n_nu: int
    epsilon: float

    def __post_init__(self):
        if not self.nu_min < self.nu_max:
            raise InvalidInputError("empty frequency window", {"nu_min": self.nu_min, "nu_max": self.nu_max})
        if self.n_nu < 2:
            raise InvalidInputError("frequency grid needs at least two points", {"n_nu": self.n_nu})
        if not self.epsilon > 0:
            raise InvalidInputError("epsilon must be positive", {"epsilon": self.epsilon})

    @classmethod
    def around(
        cls,
        omega: float,
        half_width: Optional[float] = None,
        n_nu: Optional[int] = None,
        epsilon: Optional[float] = None,
    ) -> "FrequencyGrid":
        cfg = get_section("path")
        half = float(half_width or cfg["nu_half_width"])
        eps = float(epsilon or min(cfg["epsilons"]))
        return cls(omega - half, omega + half, int(n_nu or cfg["n_nu"]), eps)

    @property
    def nus(self) -> np.ndarray:
        return np.linspace(self.nu_min, self.nu_max, self.n_nu)

    @property
    def d_nu(self) -> float:
        return (self.nu_max - self.nu_min) / (self.n_nu - 1)

    def brackets(self, omega: float) -> bool:
        return self.nu_min < omega < self.nu_max

    def with_epsilon(self, epsilon: float) -> "FrequencyGrid":
        return replace(self, epsilon=epsilon)


@dataclass(frozen=True, eq=False)
class LatticeAction:
    grid: TimeGrid
    omega: float
    operator: sparse.csr_matrix

    @property
    def diagonal(self) -> complex:
        return 1j / self.grid.dt - self.omega

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return spsolve_triangular(self.operator, np.asarray(rhs, dtype=complex), lower=True)


# ── 格点路线 ──────────────────────────────────────────────────────────────
def lattice_operator(grid: TimeGrid, omega: float) -> LatticeAction:
    require_finite("omega", omega)
    diag = 1j / grid.dt - omega
    if abs(diag) < 1e-300:
        raise ConditioningError("lattice operator is singular", {"dt": grid.dt, "omega": omega})
    D = sparse.diags(
        [np.full(grid.n, diag, dtype=complex), np.full(grid.n - 1, -1j / grid.dt, dtype=complex)],
        [0, -1],
        format="csr",
    )
    return LatticeAction(grid, omega, D)


@trace_action("path", "lattice_persistence")
def lattice_persistence(K: ComplexSignal, omega: float) -> complex:
    action = lattice_operator(K.grid, omega)
    if K.is_zero():
        return 1.0 + 0j
    y = action.solve(K.samples)
    exponent = -1j * K.grid.dt * np.vdot(K.samples, y)
    return complex(np.exp(exponent))


def lattice_greens(grid: TimeGrid, omega: float) -> np.ndarray:
    """稠密 G_lat = D⁻¹/dt，仅用于小网格的因果性与收敛阶检查。"""
    limit = int(get_section("path")["dense_limit"])
    if grid.n > limit:
        raise MemoryGuardError("dense lattice Green's function above limit", {"n": grid.n, "dense_limit": limit})
    D = lattice_operator(grid, omega).operator.toarray()
    return solve_triangular(D, np.eye(grid.n, dtype=complex), lower=True) / grid.dt


# ── 频域路线 ──────────────────────────────────────────────────────────────
def _spectral_exponent(k_sq: np.ndarray, nus: np.ndarray, omega: float, epsilon: float) -> complex:
    integrand = k_sq / (nus - omega + 1j * epsilon)
    return complex(-1j * integrate.trapezoid(integrand, nus) / (2 * np.pi))


def spectral_tail_bound(K_nu: np.ndarray, omega: float, fg: FrequencyGrid) -> float:
    """窗外尾部估计 (|K(ν_min)|² + |K(ν_max)|²)/(π·d)，d 为 ω 到最近窗边的距离。"""
    distance = min(omega - fg.nu_min, fg.nu_max - omega)
    return float((abs(K_nu[0]) ** 2 + abs(K_nu[-1]) ** 2) / (np.pi * distance))


def _epsilon_limit(values: Sequence[complex], epsilons: Sequence[float]) -> complex:
    """对 ε 线性外推到 0。"""
    if len(values) == 1:
        return values[0]
    (e1, e2), (v1, v2) = epsilons[:2], values[:2]
    return (e1 * v2 - e2 * v1) / (e1 - e2)


@trace_action("path", "spectral_persistence")
def spectral_persistence(
    K: ComplexSignal,
    omega: float,
    fg: Optional[FrequencyGrid] = None,
    epsilons: Optional[Sequence[float]] = None,
    details: bool = False,
):
    """
    epsilons 缺省取配置（两级，降序）；fg.epsilon 只在只给一个 ε 时使用。
    details=True 时返回 (value, report)。
    """
    cfg = get_section("path")
    fg = fg or FrequencyGrid.around(omega)
    if not fg.brackets(omega):
        raise InvalidArgumentError("frequency window must bracket omega", {"omega": omega, "nu_min": fg.nu_min, "nu_max": fg.nu_max})
    eps = sorted([float(e) for e in (epsilons or cfg["epsilons"])], reverse=True)

    nus = fg.nus
    k_sq = np.abs(fourier_transform(K, nus, int(cfg["chunk"]))) ** 2
    exps = [_spectral_exponent(k_sq, nus, omega, e) for e in eps]
    exponent = _epsilon_limit(exps, eps)
    value = complex(np.exp(exponent))

    report = {
        "epsilons": eps,
        "values_at_epsilon": [[complex(np.exp(x)).real, complex(np.exp(x)).imag] for x in exps],
        "tail_bound": spectral_tail_bound(np.sqrt(k_sq), omega, fg),
        "points_per_epsilon": min(eps) / fg.d_nu,
    }
    if report["points_per_epsilon"] < 2:
        log.warning("frequency grid does not resolve the smallest epsilon", extra={"payload": report})
    return (value, report) if details else value


def epsilon_scan(K: ComplexSignal, omega: float, epsilons: Sequence[float], fg: Optional[FrequencyGrid] = None) -> List[complex]:
    """单个 ε 下不外推的值，用于观察 ε → 0⁺ 的趋近。"""
    fg = fg or FrequencyGrid.around(omega)
    nus = fg.nus
    k_sq = np.abs(fourier_transform(K, nus, int(get_section("path")["chunk"]))) ** 2
    return [complex(np.exp(_spectral_exponent(k_sq, nus, omega, e))) for e in epsilons]


# ── 收敛研究 ──────────────────────────────────────────────────────────────
def fit_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    """log-log 拟合斜率。"""
    x = np.log(np.asarray(steps, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def convergence_study(
    make_signal: Callable[[float], ComplexSignal],
    omega: float,
    dts: Sequence[float],
    reference: complex,
) -> Dict[str, Any]:
    """格点路线对 dt 的收敛：每个 dt 重新采样源。"""
    rows = []
    for dt in dts:
        value = lattice_persistence(make_signal(dt), omega)
        rows.append({"param": float(dt), "value_re": value.real, "value_im": value.imag, "abs_err": abs(value - reference)})
    errs = [r["abs_err"] for r in rows]
    order = fit_order(dts, errs) if len(rows) >= 2 and min(errs) > 0 else None
    log.info("lattice convergence study done", extra={"payload": {"order": order, "n": len(rows)}})
    return {"rows": rows, "order": order}


def epsilon_study(
    K: ComplexSignal,
    omega: float,
    epsilons: Sequence[float],
    reference: complex,
    fg: Optional[FrequencyGrid] = None,
) -> Dict[str, Any]:
    values = epsilon_scan(K, omega, epsilons, fg)
    rows = [
        {"param": float(e), "value_re": v.real, "value_im": v.imag, "abs_err": abs(v - reference)}
        for e, v in zip(epsilons, values)
    ]
    errs = [r["abs_err"] for r in rows]
    order = fit_order(epsilons, errs) if len(rows) >= 2 and min(errs) > 0 else None
    return {"rows": rows, "order": order}
