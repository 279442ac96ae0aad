#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
greens_oscillator —— 振子的推迟 / 超前 / 在壳格林函数与源双线性型

    G_r(τ) = −i η(τ) e^{−iωτ}      η(0) = 1
    G_a(τ) =  i η(−τ) e^{−iωτ}     η(0) = 0
    G_0(τ) =  e^{−iωτ}

三者满足 −iG_r + iG_a + G_0 = 0。双线性型

    B[L, G, R] = ∫∫ L*(t) G(t − t') R(t') dt dt'

在网格上用三角累加实现：只累加 t' ≤ t（推迟）或 t' ≥ t（超前）的项，对角线取半权。
三种核共用同一套权重，因此上面的恒等式在离散层面逐项成立，而非仅在 dt → 0 时成立。
误差展开只含 dt 的偶次项；romberg=True 时与隔点子网格组合得到 O(dt⁴)。
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from engine.config.config_loader import get_section
from engine.signal.signal_core import ComplexSignal, require_finite, require_same_grid, romberg_usable
from engine.utils.errors import InvalidArgumentError


class KernelKind:
    RETARDED = "retarded"
    ADVANCED = "advanced"
    ONSHELL = "onshell"

    ALL = (RETARDED, ADVANCED, ONSHELL)


@dataclass(frozen=True)
class PropagatorKernel:
    omega: float
    kind: str

    def __post_init__(self):
        if self.kind not in KernelKind.ALL:
            raise InvalidArgumentError(f"unknown kernel kind '{self.kind}'", {"kind": self.kind})
        require_finite("omega", self.omega)

    def __call__(self, tau):
        return kernel_value(self.kind, self.omega, tau, 0.0)


def kernel_value(kind: str, omega: float, t, t_prime):
    """核的精确取值，支持数组广播。"""
    if kind not in KernelKind.ALL:
        raise InvalidArgumentError(f"unknown kernel kind '{kind}'", {"kind": kind})
    tau = np.asarray(t, dtype=float) - np.asarray(t_prime, dtype=float)
    phase = np.exp(-1j * omega * tau)
    if kind == KernelKind.RETARDED:
        out = np.where(tau >= 0, -1j * phase, 0.0)
    elif kind == KernelKind.ADVANCED:
        out = np.where(tau < 0, 1j * phase, 0.0)
    else:
        out = phase
    return out[()] if out.ndim == 0 else out


# ── 三角累加 ──────────────────────────────────────────────────────────────
def _triangular(kind: str, conj_g: np.ndarray, f: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    conj_g, f 形如 (..., n)，沿最后一维求和。
    conj_g = e^{−iωt} L*(t)，f = e^{iωt} R(t)。
    """
    wf = w * f
    if kind == KernelKind.ONSHELL:
        return np.sum(w * conj_g, axis=-1) * np.sum(wf, axis=-1)
    inclusive = np.cumsum(wf, axis=-1)
    if kind == KernelKind.RETARDED:
        inner = inclusive - 0.5 * wf
        return -1j * np.sum(w * conj_g * inner, axis=-1)
    total = inclusive[..., -1:]
    inner = (total - inclusive) + 0.5 * wf
    return 1j * np.sum(w * conj_g * inner, axis=-1)


def resolve_romberg(romberg: Optional[bool]) -> bool:
    if romberg is None:
        return bool(get_section("quadrature")["romberg"])
    return romberg


def bilinear(
    K_left: ComplexSignal,
    kernel: PropagatorKernel,
    K_right: ComplexSignal,
    romberg: Optional[bool] = None,
) -> complex:
    grid = require_same_grid(K_left, K_right)
    t = grid.times
    phase = np.exp(1j * kernel.omega * t)
    conj_g = np.conj(phase * K_left.samples)
    f = phase * K_right.samples
    value = complex(_triangular(kernel.kind, conj_g, f, grid.trapezoid_weights()))
    if resolve_romberg(romberg) and romberg_usable(grid, "bilinear"):
        coarse = complex(_triangular(kernel.kind, conj_g[::2], f[::2], grid.coarsened().trapezoid_weights()))
        value = (4.0 * value - coarse) / 3.0
    return value


def mode_bilinear(
    kind: str,
    omegas: np.ndarray,
    left: np.ndarray,
    right: np.ndarray,
    times: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """逐行不同频率的批量双线性型；行对应独立模式（动量网格等）。"""
    phase = np.exp(1j * np.outer(omegas, times))
    return _triangular(kind, np.conj(phase * left), phase * right, weights)


# ── 卷积与方程残差 ─────────────────────────────────────────────────────────
def retarded_profile(omegas, samples: np.ndarray, times: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """
    y(t_i) = ∫ G_r(t_i − t') K(t') dt'，与 bilinear 使用相同的半权对角。
    omegas 可为标量或逐行频率，samples 形如 (..., n)。
    """
    omegas = np.asarray(omegas, dtype=float)
    phase = np.exp(1j * np.multiply.outer(omegas, times)) if omegas.ndim else np.exp(1j * omegas * times)
    wf = weights * phase * samples
    inner = np.cumsum(wf, axis=-1) - 0.5 * wf
    return -1j * np.conj(phase) * inner


def convolve_retarded(K: ComplexSignal, omega: float) -> ComplexSignal:
    """驱动运动方程 i dy/dt = ωy + K 的因果解。"""
    grid = K.grid
    return ComplexSignal(grid, retarded_profile(omega, K.samples, grid.times, grid.trapezoid_weights()))


def convolve_advanced(K: ComplexSignal, omega: float) -> ComplexSignal:
    grid = K.grid
    t = grid.times
    w = grid.trapezoid_weights()
    phase = np.exp(1j * omega * t)
    wf = w * phase * K.samples
    inclusive = np.cumsum(wf)
    inner = (inclusive[-1] - inclusive) + 0.5 * wf
    return ComplexSignal(grid, 1j * np.conj(phase) * inner)


def ode_residual(K: ComplexSignal, omega: float, kind: str = KernelKind.RETARDED) -> np.ndarray:
    """
    把离散算子 i(y_k − y_{k−1})/dt − ω y_k 作用在推迟（或超前）卷积上再减去 K。
    两种卷积满足同一个运动方程，只是边界条件不同；前向步进格式下残差为 O(dt)。
    """
    if kind == KernelKind.RETARDED:
        y = convolve_retarded(K, omega).samples
    elif kind == KernelKind.ADVANCED:
        y = convolve_advanced(K, omega).samples
    else:
        raise InvalidArgumentError("ode residual needs a retarded or advanced kernel", {"kind": kind})
    dt = K.grid.dt
    return 1j * (y[1:] - y[:-1]) / dt - omega * y[1:] - K.samples[1:]


def convolution_bilinear_defect(K: ComplexSignal, omega: float) -> float:
    """
    ∫ w K*·(G ∗ K) 与 bilinear(K, G, K) 之差，推迟与超前取较大者。
    卷积与双线性型共用半权对角，离散层面应只剩舍入误差。
    """
    w = K.grid.trapezoid_weights()
    worst = 0.0
    for kind, conv in ((KernelKind.RETARDED, convolve_retarded), (KernelKind.ADVANCED, convolve_advanced)):
        via_conv = complex(np.sum(w * np.conj(K.samples) * conv(K, omega).samples))
        direct = bilinear(K, PropagatorKernel(omega, kind), K, romberg=False)
        worst = max(worst, abs(via_conv - direct))
    return worst


def kernel_identity_defect(omega: float, taus) -> float:
    """max |−iG_r + iG_a + e^{−iωτ}| over the given lags."""
    taus = np.asarray(taus, dtype=float)
    r = kernel_value(KernelKind.RETARDED, omega, taus, 0.0)
    a = kernel_value(KernelKind.ADVANCED, omega, taus, 0.0)
    s = kernel_value(KernelKind.ONSHELL, omega, taus, 0.0)
    return float(np.max(np.abs(-1j * r + 1j * a + s)))
