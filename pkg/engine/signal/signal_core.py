#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
signal_core —— 时间网格、复数源信号、求积与单频谱分量

约定：
  - 自然单位 ħ = 1；振子的 Fourier 核固定为 e^{+iωt}，即 γ = ∫dt e^{iωt} K(t)。
  - 信号视为采样点的分段线性插值，网格外为 0。
  - 默认复合梯形公式；Simpson 通过 rule="simpson" 打开。
  - 平移只允许 dt 的整数倍，不做插值，保证各验证路线逐位可复现。
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from scipy import integrate

from engine.config.config_loader import get_section
from engine.utils.errors import GridMismatchError, InvalidArgumentError, InvalidInputError
from engine.utils.logger import get_component_logger

log = get_component_logger("signal_core", "signal")

# 判断"是否落在网格上"的相对容差（以 dt 为单位）
_ON_GRID_TOL = 1e-9


# ── 数据类型 ─────────────────────────────────────────────────────────────
@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    dt: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.t_start) and math.isfinite(self.dt)):
            raise InvalidInputError("time grid must be finite", {"t_start": self.t_start, "dt": self.dt})
        if self.dt <= 0:
            raise InvalidInputError("time step must be positive", {"dt": self.dt})
        if int(self.n) != self.n or self.n < 2:
            raise InvalidInputError("time grid needs at least two samples", {"n": self.n})
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_span(cls, t_start: float, t_end: float, n: int) -> "TimeGrid":
        if n < 2 or t_end <= t_start:
            raise InvalidInputError("empty time span", {"t_start": t_start, "t_end": t_end, "n": n})
        return cls(t_start, (t_end - t_start) / (n - 1), n)

    @property
    def t_end(self) -> float:
        return self.t_start + (self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n)

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n, self.dt)
        w[0] = w[-1] = 0.5 * self.dt
        return w

    def index_of(self, t: float) -> int:
        """t 必须恰好是网格点，否则抛 InvalidArgumentError。"""
        k = (t - self.t_start) / self.dt
        j = int(round(k))
        if abs(k - j) > _ON_GRID_TOL * max(1.0, abs(k)) or not (0 <= j < self.n):
            raise InvalidArgumentError("time is not a grid node", {"t": t, "t_start": self.t_start, "dt": self.dt})
        return j

    def nearest_index(self, t: float) -> int:
        j = int(round((t - self.t_start) / self.dt))
        return min(max(j, 0), self.n - 1)

    def steps_for(self, T: float) -> int:
        """平移量 T 换算为整数步数。"""
        k = T / self.dt
        j = int(round(k))
        if abs(k - j) > _ON_GRID_TOL * max(1.0, abs(k)):
            raise InvalidArgumentError("shift is not a multiple of dt", {"T": T, "dt": self.dt})
        return j

    def coarsened(self) -> "TimeGrid":
        """隔点子网格（2dt），要求 n 为奇数。"""
        if self.n % 2 == 0 or self.n < 3:
            raise InvalidArgumentError("coarsening needs an odd sample count >= 3", {"n": self.n})
        return TimeGrid(self.t_start, 2 * self.dt, (self.n + 1) // 2)

    def matches(self, other: "TimeGrid") -> bool:
        scale = max(abs(self.dt), 1e-300)
        return (
            self.n == other.n
            and abs(self.dt - other.dt) <= 1e-12 * scale
            and abs(self.t_start - other.t_start) <= 1e-9 * scale
        )

    def to_dict(self) -> Dict[str, Any]:
        return {"t_start": self.t_start, "dt": self.dt, "n": self.n}


@dataclass(frozen=True, eq=False)
class ComplexSignal:
    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self):
        arr = np.array(self.samples, dtype=complex).reshape(-1)
        if arr.shape[0] != self.grid.n:
            raise InvalidInputError(
                "sample count does not match grid", {"samples": int(arr.shape[0]), "n": self.grid.n}
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("signal has non-finite samples", {"bad": int(np.sum(~np.isfinite(arr)))})
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "ComplexSignal":
        return cls(grid, np.zeros(grid.n, dtype=complex))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def coarsened(self) -> "ComplexSignal":
        return ComplexSignal(self.grid.coarsened(), self.samples[::2])

    def is_zero(self) -> bool:
        return not np.any(self.samples)


@dataclass(frozen=True)
class OscillatorParams:
    omega: float

    def __post_init__(self):
        if not math.isfinite(self.omega) or self.omega <= 0:
            raise InvalidInputError("oscillator frequency must be positive", {"omega": self.omega})


@dataclass(frozen=True)
class SpectralAmplitude:
    gamma: complex

    @property
    def intensity(self) -> float:
        """|γ|²，即真空受驱后产生的平均量子数。"""
        return float(abs(self.gamma) ** 2)


# ── 校验辅助 ──────────────────────────────────────────────────────────────
def require_same_grid(*signals: ComplexSignal) -> TimeGrid:
    grid = signals[0].grid
    for other in signals[1:]:
        if not grid.matches(other.grid):
            raise GridMismatchError(
                "signals live on different grids", {"left": grid.to_dict(), "right": other.grid.to_dict()}
            )
    return grid


def require_finite(name: str, value: complex) -> None:
    if not np.isfinite(value):
        raise InvalidInputError(f"{name} must be finite", {name: str(value)})


def support_check(K: ComplexSignal, rel_tol: float = 1e-8) -> bool:
    """首末采样近似为 0 时视为紧支撑；否则只记 warning。"""
    scale = float(np.max(np.abs(K.samples))) if K.samples.size else 0.0
    if scale == 0.0:
        return True
    edge = max(abs(K.samples[0]), abs(K.samples[-1]))
    ok = edge <= rel_tol * scale
    if not ok:
        log.warning(
            "source is not compactly supported inside the grid",
            extra={"payload": {"edge": float(edge), "scale": scale}},
        )
    return ok


# ── 求积 ──────────────────────────────────────────────────────────────────
def integrate_samples(values: np.ndarray, dt: float, rule: Optional[str] = None) -> complex:
    rule = rule or get_section("quadrature")["rule"]
    if rule == "trapezoid":
        return complex(integrate.trapezoid(values, dx=dt))
    if rule == "simpson":
        return complex(integrate.simpson(values, dx=dt))
    raise InvalidArgumentError(f"unknown quadrature rule '{rule}'", {"rule": rule})


def romberg_usable(grid: TimeGrid, where: str) -> bool:
    """隔点子网格要求 n 为奇数且 n ≥ 5；不满足时记一条 warning 并退回 O(dt²)。"""
    if grid.n % 2 == 1 and grid.n >= 5:
        return True
    log.warning(
        "romberg requested but grid does not coarsen, falling back to plain rule",
        extra={"payload": {"where": where, "n": grid.n}},
    )
    return False


def fourier_at_frequency(
    K: ComplexSignal,
    omega: float,
    rule: Optional[str] = None,
    romberg: bool = False,
) -> SpectralAmplitude:
    """γ = ∫ e^{iωt} K(t) dt。romberg=True 时用 dt / 2dt 组合消去 O(dt²) 项。"""
    require_finite("omega", omega)
    phase = np.exp(1j * omega * K.times)
    value = integrate_samples(phase * K.samples, K.grid.dt, rule)
    if romberg and romberg_usable(K.grid, "fourier_at_frequency"):
        coarse = integrate_samples(phase[::2] * K.samples[::2], 2 * K.grid.dt, rule)
        value = (4.0 * value - coarse) / 3.0
    return SpectralAmplitude(value)


def fourier_transform(K: ComplexSignal, nus: np.ndarray, chunk: int = 4096) -> np.ndarray:
    """多频点梯形求积 K(ν) = ∫ e^{iνt} K(t) dt，频率分块以限制内存。"""
    nus = np.asarray(nus, dtype=float)
    w = K.grid.trapezoid_weights() * K.samples
    t = K.times
    out = np.empty(nus.shape[0], dtype=complex)
    for start in range(0, nus.shape[0], chunk):
        block = nus[start:start + chunk]
        out[start:start + chunk] = np.exp(1j * np.outer(block, t)) @ w
    return out


# ── 信号变换 ─────────────────────────────────────────────────────────────
def shift_signal(K: ComplexSignal, T: float) -> ComplexSignal:
    """输出满足 out(t) = K(t + T)；移出网格的部分丢弃为 0。"""
    k = K.grid.steps_for(T)
    out = np.zeros(K.grid.n, dtype=complex)
    n = K.grid.n
    if k >= 0:
        if k < n:
            out[: n - k] = K.samples[k:]
    else:
        if -k < n:
            out[-k:] = K.samples[: n + k]
    return ComplexSignal(K.grid, out)


def add_signals(*signals: ComplexSignal) -> ComplexSignal:
    return linear_combination([1.0] * len(signals), signals)


def scale_signal(K: ComplexSignal, factor: complex) -> ComplexSignal:
    return ComplexSignal(K.grid, factor * K.samples)


def pad_signal(K: ComplexSignal, n_before: int, n_after: int) -> ComplexSignal:
    if n_before < 0 or n_after < 0:
        raise InvalidInputError("padding must be non-negative", {"n_before": n_before, "n_after": n_after})
    grid = TimeGrid(K.grid.t_start - n_before * K.grid.dt, K.grid.dt, K.grid.n + n_before + n_after)
    return ComplexSignal(grid, np.concatenate([np.zeros(n_before), K.samples, np.zeros(n_after)]))


def impulse(grid: TimeGrid, t0: float, strength: complex = 1.0) -> ComplexSignal:
    """δ(t − t0) 的单点实现：最近网格点上高度 strength/dt。"""
    out = np.zeros(grid.n, dtype=complex)
    out[grid.nearest_index(t0)] = strength / grid.dt
    return ComplexSignal(grid, out)


def interpolate(K: ComplexSignal, t) -> np.ndarray:
    """分段线性取值，网格外为 0。"""
    t = np.asarray(t, dtype=float)
    xp = K.times
    re = np.interp(t, xp, K.samples.real, left=0.0, right=0.0)
    im = np.interp(t, xp, K.samples.imag, left=0.0, right=0.0)
    return re + 1j * im


# ── 构造 ──────────────────────────────────────────────────────────────────
def make_signal(kind: str, grid: TimeGrid, **params) -> ComplexSignal:
    """
    kind:
      square   —— amplitude(κ), t_on, t_off
      gaussian —— amplitude, center, width, carrier(ω_c，乘 e^{−iω_c t})
      samples  —— values: [[re, im], ...] 或复数列表
      impulse  —— amplitude（冲量强度），center（t0，缺省为网格中点）
      zero
    """
    t = grid.times
    if kind == "zero":
        return ComplexSignal.zeros(grid)
    if kind == "square":
        amp = _to_complex(params.get("amplitude", 1.0))
        t_on = float(params.get("t_on", grid.t_start))
        t_off = float(params.get("t_off", grid.t_end))
        tol = _ON_GRID_TOL * grid.dt
        mask = (t >= t_on - tol) & (t <= t_off + tol)
        return ComplexSignal(grid, np.where(mask, amp, 0.0))
    if kind == "gaussian":
        amp = _to_complex(params.get("amplitude", 1.0))
        center = float(params.get("center", 0.5 * (grid.t_start + grid.t_end)))
        width = float(params.get("width", 1.0))
        carrier = float(params.get("carrier", 0.0))
        if width <= 0:
            raise InvalidInputError("gaussian width must be positive", {"width": width})
        env = np.exp(-0.5 * ((t - center) / width) ** 2)
        return ComplexSignal(grid, amp * env * np.exp(-1j * carrier * t))
    if kind == "samples":
        values = params.get("values")
        if values is None:
            raise InvalidInputError("samples signal needs 'values'")
        return ComplexSignal(grid, _as_complex(values))
    if kind == "impulse":
        t0 = float(params.get("center", 0.5 * (grid.t_start + grid.t_end)))
        return impulse(grid, t0, _to_complex(params.get("amplitude", 1.0)))
    raise InvalidArgumentError(f"unknown signal kind '{kind}'", {"kind": kind})


def _to_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    return complex(v)


def _as_complex(values: Iterable) -> np.ndarray:
    return np.array([_to_complex(v) for v in values], dtype=complex)


_SHAPE_KEYS = ("amplitude", "t_on", "t_off", "center", "width", "carrier", "values")


def _shape(spec: Dict[str, Any], grid: TimeGrid) -> ComplexSignal:
    return make_signal(spec.get("kind", "zero"), grid, **{k: v for k, v in spec.items() if k in _SHAPE_KEYS})


def signal_from_spec(spec: Dict[str, Any]) -> ComplexSignal:
    """
    场景 JSON 中的 {"grid": {...}, "kind": ..., 参数...}。可选组合项按顺序作用：
      add    同一网格上叠加的其他形状
      scale  整体乘一个复数
      pad    [n_before, n_after]，两端补零扩展网格
    """
    g = spec["grid"]
    if "dt" in g:
        grid = TimeGrid(g.get("t_start", 0.0), g["dt"], g["n"])
    else:
        grid = TimeGrid.from_span(g.get("t_start", 0.0), g["t_end"], g["n"])
    K = _shape(spec, grid)
    if spec.get("add"):
        K = add_signals(K, *(_shape(part, grid) for part in spec["add"]))
    if spec.get("scale") is not None:
        K = scale_signal(K, _to_complex(spec["scale"]))
    if spec.get("pad") is not None:
        K = pad_signal(K, *spec["pad"])
    return K


def linear_combination(coeffs: Sequence[complex], signals: Sequence[ComplexSignal]) -> ComplexSignal:
    grid = require_same_grid(*signals)
    return ComplexSignal(grid, sum(c * s.samples for c, s in zip(coeffs, signals)))
