#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
bound_states —— 等质量两粒子的束缚态通道

相对坐标哈密顿量 p²/2μ + V(r)，μ = m/2；质心质量 M = 2m。
光滑势用五点差分，δ 势用三点差分；带状矩阵交给 eig_banded。
两粒子格林函数按通道展开 Σ_n φ_n(r) G_n(R,T) φ_n*(r')，
G_n 为质量 M 的自由传播子乘 e^{−iE_n T}。
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.linalg import eig_banded

from engine.source_theory.propagators import SpaceGrid, free_propagator
from engine.source_theory.scattering import PotentialKind, PotentialSpec
from engine.utils.decorators import trace_action
from engine.utils.errors import InvalidArgumentError, InvalidInputError
from engine.utils.logger import get_component_logger

log = get_component_logger("bound_states", "source_theory")


@dataclass(frozen=True, eq=False)
class BoundStateSpectrum:
    grid: SpaceGrid
    mass: float                 # 单粒子质量 m
    energies: np.ndarray
    functions: np.ndarray       # 列为 φ_n，∫|φ_n|² dr = 1

    @property
    def reduced_mass(self) -> float:
        return 0.5 * self.mass

    @property
    def total_mass(self) -> float:
        return 2.0 * self.mass

    @property
    def bound(self) -> np.ndarray:
        return self.energies < 0

    @property
    def bound_energies(self) -> np.ndarray:
        return self.energies[self.bound]

    def completeness_defect(self) -> float:
        """Σ_n φ_n(r)φ_n(r')·dr 与单位矩阵之差，仅当求出全部本征态时为 0。"""
        P = self.functions @ self.functions.conj().T * self.grid.dx
        return float(np.max(np.abs(P - np.eye(self.grid.n))))

    def to_dict(self) -> List[Dict[str, Any]]:
        return [{"n": n, "E_n": float(e), "bound": bool(e < 0)} for n, e in enumerate(self.energies)]


def _kinetic_band(n: int, dx: float, mu: float, five_point: bool) -> np.ndarray:
    """−(1/2μ) d²/dr² 的下三角带状存储。"""
    if five_point:
        c = 1.0 / (24.0 * mu * dx * dx)
        band = np.zeros((3, n))
        band[0, :] = 30 * c
        band[1, :-1] = -16 * c
        band[2, :-2] = 1 * c
        return band
    c = 1.0 / (2.0 * mu * dx * dx)
    band = np.zeros((2, n))
    band[0, :] = 2 * c
    band[1, :-1] = -1 * c
    return band


@trace_action("source_theory", "bound_state_channels")
def bound_state_channels(
    V12: PotentialSpec,
    m: float,
    grid: SpaceGrid,
    n_states: Optional[int] = None,
) -> BoundStateSpectrum:
    """n_states 缺省求出全部本征对；否则只求最低的 n_states 个。"""
    if not m > 0:
        raise InvalidInputError("mass must be positive", {"m": m})
    mu = 0.5 * m
    V, _ = V12.sample(grid, mu=mu)
    band = _kinetic_band(grid.n, grid.dx, mu, five_point=V12.kind != PotentialKind.DELTA)
    band[0, :] += V
    if n_states is None:
        energies, vecs = eig_banded(band, lower=True)
    else:
        if not 1 <= n_states <= grid.n:
            raise InvalidInputError("n_states outside grid size", {"n_states": n_states, "n": grid.n})
        energies, vecs = eig_banded(band, lower=True, select="i", select_range=(0, n_states - 1))
    spectrum = BoundStateSpectrum(grid, m, energies, vecs / np.sqrt(grid.dx))
    log.info(
        "relative-motion spectrum solved",
        extra={"payload": {"n_states": int(energies.shape[0]), "n_bound": int(np.sum(energies < 0))}},
    )
    return spectrum


def _channel(spectrum: BoundStateSpectrum, n: int) -> int:
    if not 0 <= n < spectrum.energies.shape[0]:
        raise InvalidArgumentError("channel index outside computed spectrum", {"n": n, "n_states": int(spectrum.energies.shape[0])})
    return n


def channel_propagator(spectrum: BoundStateSpectrum, n: int, R, T: float):
    """G_n(R,T) = G_free^{M}(R,T)·e^{−iE_n T}。"""
    n = _channel(spectrum, n)
    return free_propagator(R, T, spectrum.total_mass) * np.exp(-1j * spectrum.energies[n] * T)


def effective_channel_source(
    spectrum: BoundStateSpectrum,
    n: int,
    V12: PotentialSpec,
    psi_x: np.ndarray,
    psi: np.ndarray,
    R,
) -> np.ndarray:
    """
    K_n(R) = (1/√2) ∫dr φ_n*(r) V(r) ψ(R + r/2) ψ(R − r/2)，
    ψ 为给定的单粒子场采样（线性插值，范围外为 0）。只作报告。
    """
    n = _channel(spectrum, n)
    r = spectrum.grid.positions
    V, _ = V12.sample(spectrum.grid, mu=spectrum.reduced_mass)
    psi = np.asarray(psi, dtype=complex)

    def field(x):
        return np.interp(x, psi_x, psi.real, left=0.0, right=0.0) + 1j * np.interp(x, psi_x, psi.imag, left=0.0, right=0.0)

    weight = np.conj(spectrum.functions[:, n]) * V * spectrum.grid.dx
    out = np.array([np.sum(weight * field(Rc + 0.5 * r) * field(Rc - 0.5 * r)) for Rc in np.atleast_1d(R)]) / np.sqrt(2.0)
    return out if np.ndim(R) else out[0]
