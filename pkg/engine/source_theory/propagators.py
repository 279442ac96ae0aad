#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
propagators —— 一维非相对论源理论：自由传播子、时空源的真空保持振幅、多粒子振幅

时空源 K(x,t) 按动量分解为独立振子：
    K(p,t) = ∫dx e^{−ipx} K(x,t)，每个动量模式频率 E_p = p²/2m
    ⟨0₊|0₋⟩^K = exp(−i Σ_p w_p ∫∫ K*(p,t) G_r^{E_p}(t−t') K(p,t'))，w_p = dp/2π
动量网格缺省取 n_x 个点、dp = 2π/(n_x dx)，即空间窗口上的周期盒子；
传入更密的动量网格即趋近无限空间。
|⟨0₊|0₋⟩|² = exp(−Σ_p |K_p|²)，K_p = √w_p·K(p, E_p)，在网格上逐位成立。
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from engine.config.config_loader import get_section
from engine.oscillator.greens_oscillator import KernelKind, mode_bilinear, retarded_profile
from engine.signal.signal_core import TimeGrid
from engine.utils.decorators import trace_action
from engine.utils.errors import InvalidArgumentError, InvalidInputError, MemoryGuardError
from engine.utils.logger import get_component_logger

log = get_component_logger("propagators", "source_theory")


# ── 数据类型 ─────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class SpaceGrid:
    x_start: float
    dx: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.x_start) and math.isfinite(self.dx)) or self.dx <= 0:
            raise InvalidInputError("space grid needs a finite positive step", {"x_start": self.x_start, "dx": self.dx})
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInputError("space grid needs at least two points", {"n": self.n})
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_span(cls, x_start: float, x_end: float, n: int) -> "SpaceGrid":
        if n < 2 or x_end <= x_start:
            raise InvalidInputError("empty space span", {"x_start": x_start, "x_end": x_end, "n": n})
        return cls(x_start, (x_end - x_start) / (n - 1), n)

    @property
    def x_end(self) -> float:
        return self.x_start + (self.n - 1) * self.dx

    @property
    def positions(self) -> np.ndarray:
        return self.x_start + self.dx * np.arange(self.n)

    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def nearest_index(self, x: float) -> int:
        j = int(round((x - self.x_start) / self.dx))
        return min(max(j, 0), self.n - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {"x_start": self.x_start, "dx": self.dx, "n": self.n}


@dataclass(frozen=True, eq=False)
class SpaceTimeSource:
    x_grid: SpaceGrid
    t_grid: TimeGrid
    samples: np.ndarray      # 形如 (n_x, n_t)
    mass: float

    def __post_init__(self):
        arr = np.array(self.samples, dtype=complex)
        if arr.shape != (self.x_grid.n, self.t_grid.n):
            raise InvalidInputError(
                "source samples do not match the grids", {"shape": list(arr.shape), "n_x": self.x_grid.n, "n_t": self.t_grid.n}
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("source has non-finite samples")
        if not self.mass > 0:
            raise InvalidInputError("mass must be positive", {"mass": self.mass})
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def n_cells(self) -> int:
        return self.x_grid.n * self.t_grid.n

    def is_zero(self) -> bool:
        return not np.any(self.samples)


@dataclass(frozen=True)
class MomentumCell:
    p: float
    weight: float
    K_p: complex

    def __post_init__(self):
        if not self.weight > 0:
            raise InvalidInputError("momentum cell weight must be positive", {"weight": self.weight})

    @property
    def intensity(self) -> float:
        return float(abs(self.K_p) ** 2)


@dataclass(frozen=True)
class OccupationPattern:
    """动量格点下标 → 占有数 n_p。"""

    counts: Mapping[int, int]

    def __post_init__(self):
        clean = {}
        for idx, n in dict(self.counts).items():
            if int(n) != n or n < 0:
                raise InvalidInputError("occupation numbers must be non-negative integers", {"index": idx, "n": n})
            if n:
                clean[int(idx)] = int(n)
        object.__setattr__(self, "counts", clean)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


# ── 源的构造与变换 ─────────────────────────────────────────────────────────
def separable_source(
    x_grid: SpaceGrid, t_grid: TimeGrid, f_x: np.ndarray, g_t: np.ndarray, mass: float
) -> SpaceTimeSource:
    return SpaceTimeSource(x_grid, t_grid, np.outer(np.asarray(f_x, dtype=complex), np.asarray(g_t, dtype=complex)), mass)


def gaussian_source(
    x_grid: SpaceGrid,
    t_grid: TimeGrid,
    mass: float,
    amplitude: complex = 1.0,
    x0: float = 0.0,
    sigma_x: float = 1.0,
    t0: Optional[float] = None,
    sigma_t: float = 1.0,
    momentum: float = 0.0,
) -> SpaceTimeSource:
    t0 = 0.5 * (t_grid.t_start + t_grid.t_end) if t0 is None else t0
    x = x_grid.positions
    t = t_grid.times
    f = np.exp(-0.5 * ((x - x0) / sigma_x) ** 2 + 1j * momentum * x)
    g = amplitude * np.exp(-0.5 * ((t - t0) / sigma_t) ** 2)
    return separable_source(x_grid, t_grid, f, g, mass)


def source_transform(K: SpaceTimeSource, p: float, on_shell: bool = True, energy: Optional[float] = None) -> complex:
    """K(p, E) = ∫dx dt e^{−ipx + iEt} K(x,t)；on_shell 时 E = p²/2m。"""
    if on_shell:
        energy = p * p / (2 * K.mass)
    elif energy is None:
        raise InvalidArgumentError("off-shell transform needs an explicit energy", {"p": p})
    ex = K.x_grid.weights() * np.exp(-1j * p * K.x_grid.positions)
    et = K.t_grid.trapezoid_weights() * np.exp(1j * energy * K.t_grid.times)
    return complex(ex @ K.samples @ et)


def default_momenta(x_grid: SpaceGrid, n_p: Optional[int] = None, p_max: Optional[float] = None) -> np.ndarray:
    """缺省为空间窗口的周期盒子动量 p_k = (k − n/2)·2π/(n_x dx)。"""
    if n_p is None and p_max is None:
        dp = 2 * np.pi / (x_grid.n * x_grid.dx)
        return (np.arange(x_grid.n) - x_grid.n // 2) * dp
    n_p = int(n_p or x_grid.n)
    p_max = float(p_max or np.pi / x_grid.dx)
    dp = 2 * p_max / n_p
    return -p_max + dp * np.arange(n_p)


def _momentum_weight(ps: np.ndarray) -> float:
    if ps.shape[0] < 2:
        raise InvalidInputError("momentum grid needs at least two points", {"n_p": int(ps.shape[0])})
    return float(ps[1] - ps[0]) / (2 * np.pi)


def _guard(K: SpaceTimeSource, n_p: int) -> None:
    limit = int(float(get_section("source_theory")["max_cells"]))
    cells = max(K.x_grid.n, n_p) * K.t_grid.n
    if cells > limit:
        raise MemoryGuardError("space-time quadrature above configured cell bound", {"cells": cells, "max_cells": limit})


def momentum_modes(K: SpaceTimeSource, ps: np.ndarray) -> np.ndarray:
    """K(p,t)，形如 (n_p, n_t)。"""
    _guard(K, ps.shape[0])
    phase = np.exp(-1j * np.outer(ps, K.x_grid.positions)) * K.x_grid.weights()
    return phase @ K.samples


def momentum_cells(K: SpaceTimeSource, ps: Optional[np.ndarray] = None) -> List[MomentumCell]:
    """K_p = √w_p · K(p, p²/2m)，每个动量格点取一次在壳变换。"""
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    w_p = _momentum_weight(ps)
    _guard(K, ps.shape[0])
    return [MomentumCell(float(p), w_p, complex(math.sqrt(w_p) * source_transform(K, float(p)))) for p in ps]


# ── 真空保持振幅 ──────────────────────────────────────────────────────────
def _persistence_exponent(K: SpaceTimeSource, ps: np.ndarray, left: Optional[SpaceTimeSource] = None) -> complex:
    w_p = _momentum_weight(ps)
    energies = ps**2 / (2 * K.mass)
    right = momentum_modes(K, ps)
    lhs = right if left is None else momentum_modes(left, ps)
    b = mode_bilinear(KernelKind.RETARDED, energies, lhs, right, K.t_grid.times, K.t_grid.trapezoid_weights())
    return complex(-1j * w_p * np.sum(b))


@trace_action("source_theory", "vacuum_persistence_st")
def vacuum_persistence_st(K: SpaceTimeSource, ps: Optional[np.ndarray] = None) -> complex:
    if K.is_zero():
        return 1.0 + 0j
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    return complex(np.exp(_persistence_exponent(K, ps)))


def causal_cross_term(K_early: SpaceTimeSource, K_late: SpaceTimeSource, ps: Optional[np.ndarray] = None) -> complex:
    """exp(−i∫∫ K_late* G K_early)：K_late 完全在 K_early 之后时，整体振幅 = 两部分之积 × 该因子。"""
    if not K_early.t_grid.matches(K_late.t_grid) or K_early.x_grid != K_late.x_grid:
        raise InvalidArgumentError("sub-sources must share the space-time grid")
    ps = default_momenta(K_early.x_grid) if ps is None else np.asarray(ps, dtype=float)
    return complex(np.exp(_persistence_exponent(K_early, ps, left=K_late)))


# ── 多粒子振幅 ────────────────────────────────────────────────────────────
def stimulated_amplitude(K_p: complex, n: int) -> complex:
    """⟨{n+1_p}|{n}⟩ 中的一阶因子 −iK_p·√(n+1)。"""
    if n < 0:
        raise InvalidInputError("occupation must be non-negative", {"n": n})
    return complex(-1j * K_p * math.sqrt(n + 1))


def multi_particle_amplitude(
    pattern: OccupationPattern, K: SpaceTimeSource, ps: Optional[np.ndarray] = None
) -> complex:
    """∏_p (−iK_p)^{n_p}/√(n_p!) · ⟨0₊|0₋⟩^K。"""
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    amp = vacuum_persistence_st(K, ps)
    if not pattern.counts:
        return amp
    cells = momentum_cells(K, ps)
    for idx, n in pattern.counts.items():
        if not 0 <= idx < len(cells):
            raise InvalidArgumentError("pattern index outside momentum grid", {"index": idx, "n_p": len(cells)})
        amp *= (-1j * cells[idx].K_p) ** n * math.exp(-0.5 * float(gammaln(n + 1)))
    return complex(amp)


def probability_report(K: SpaceTimeSource, n_max: int = 8, ps: Optional[np.ndarray] = None) -> Dict[str, Any]:
    """每个模式截断在 n_max 时，全部占有模式的总概率 ∏_p P(n_p ≤ n_max)。"""
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    cells = momentum_cells(K, ps)
    lam = np.array([c.intensity for c in cells])
    persistence = vacuum_persistence_st(K, ps)
    covered = float(np.prod(poisson.cdf(n_max, lam)))
    return {
        "mean_particles": float(lam.sum()),
        "persistence_prob": float(abs(persistence) ** 2),
        "expected_persistence_prob": float(np.exp(-lam.sum())),
        "covered_probability": covered,
        "n_max": n_max,
    }


# ── 自由传播子 ────────────────────────────────────────────────────────────
def free_propagator(x, t: float, m: float):
    """G(x,t) = −iη(t)·√(m/(2πit))·e^{imx²/(2t)}；t = 0 处是 δ 极限，不在此求值。"""
    if not m > 0:
        raise InvalidInputError("mass must be positive", {"m": m})
    if t == 0:
        raise InvalidArgumentError("propagator at t = 0 is a delta limit", {"t": t})
    x = np.asarray(x, dtype=float)
    if t < 0:
        out = np.zeros_like(x, dtype=complex)
    else:
        out = -1j * np.sqrt(m / (2j * np.pi * t)) * np.exp(1j * m * x**2 / (2 * t))
    return out[()] if out.ndim == 0 else out


def on_shell_kernel(x, t: float, m: float):
    """∫dp/2π e^{ipx − iEt}，对 t > 0 与 t < 0 都成立（主值分支）。"""
    if t == 0:
        raise InvalidArgumentError("on-shell kernel at t = 0 is a delta limit", {"t": t})
    x = np.asarray(x, dtype=float)
    out = np.sqrt(m / (2j * np.pi * t)) * np.exp(1j * m * x**2 / (2 * t))
    return out[()] if out.ndim == 0 else out


def on_shell_combination_residual(xs: np.ndarray, ts: np.ndarray, m: float) -> Dict[str, float]:
    """
    S(x,t) = iG(x,t) + [iG(−x,−t)]*，与 on_shell_kernel 比较，
    并用中心差分检查 (i∂_t + ∂_x²/2m) S = 0。ts 不得跨过 0。
    """
    xs = np.asarray(xs, dtype=float)
    ts = np.asarray(ts, dtype=float)
    if np.any(ts == 0) or (ts.min() < 0 < ts.max()):
        raise InvalidArgumentError("time samples must stay on one side of t = 0")
    S = np.array([1j * free_propagator(xs, t, m) + np.conj(1j * free_propagator(-xs, -t, m)) for t in ts])
    ref = np.array([on_shell_kernel(xs, t, m) for t in ts])
    dx = xs[1] - xs[0]
    dt = ts[1] - ts[0]
    d_t = (S[2:, 1:-1] - S[:-2, 1:-1]) / (2 * dt)
    d_xx = (S[1:-1, 2:] - 2 * S[1:-1, 1:-1] + S[1:-1, :-2]) / dx**2
    residual = 1j * d_t + d_xx / (2 * m)
    scale = float(np.max(np.abs(S)))
    return {
        "kernel_mismatch": float(np.max(np.abs(S - ref))),
        "residual": float(np.max(np.abs(residual))) / scale,
        "scale": scale,
    }


# ── 辐射场 ────────────────────────────────────────────────────────────────
def _mode_profiles(K: SpaceTimeSource, ps: np.ndarray) -> np.ndarray:
    energies = ps**2 / (2 * K.mass)
    return retarded_profile(energies, momentum_modes(K, ps), K.t_grid.times, K.t_grid.trapezoid_weights())


def field_amplitude(K: SpaceTimeSource, x, t: float, ps: Optional[np.ndarray] = None):
    """源辐射的单粒子场 ψ(x,t) = ∫dx'dt' G(x−x',t−t') K(x',t')，经动量模式求和。"""
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    k = K.t_grid.index_of(t)
    y = _mode_profiles(K, ps)[:, k]
    x = np.asarray(x, dtype=float)
    psi = _momentum_weight(ps) * (np.exp(1j * np.multiply.outer(x, ps)) @ y)
    return psi[()] if np.ndim(psi) == 0 else psi


def two_particle_field(K: SpaceTimeSource, xs, t: float, ps: Optional[np.ndarray] = None) -> np.ndarray:
    """ψ(x1,t)ψ(x2,t)，按构造对交换对称。"""
    psi = np.atleast_1d(field_amplitude(K, xs, t, ps))
    return np.outer(psi, psi)


def field_equation_residual(K: SpaceTimeSource, ps: Optional[np.ndarray] = None) -> float:
    """
    i(ψ_k − ψ_{k−1})/dt − (p²/2m)ψ_k − K_k 在各模式上的最大值，相对 max|K(p,t)|。
    缺省动量网格下模式求和精确还原 K(x,t)，残差只剩 O(dt) 的时间差分误差。
    """
    ps = default_momenta(K.x_grid) if ps is None else np.asarray(ps, dtype=float)
    modes = momentum_modes(K, ps)
    y = _mode_profiles(K, ps)
    energies = ps**2 / (2 * K.mass)
    dt = K.t_grid.dt
    res = 1j * (y[:, 1:] - y[:, :-1]) / dt - energies[:, None] * y[:, 1:] - modes[:, 1:]
    scale = float(np.max(np.abs(modes))) or 1.0
    return float(np.max(np.abs(res))) / scale
