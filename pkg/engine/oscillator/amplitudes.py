#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
amplitudes —— 受迫振子的变换函数与跃迁统计

  ⟨y†′,t1|y″,t2⟩      = exp[y†′ e^{−iω(t1−t2)} y″]                      （无源）
  ⟨0,t1|0,t2⟩^K      = exp[−i·B_r(K, K)]                               （真空保持振幅）
  ⟨y†′,t1|y″,t2⟩^K   = exp[自由项 − i y†′∫e^{−iω(t1−t)}K − i∫e^{−iω(t−t2)}K* y″ − i·B_r]
  p(n,0)             = |γ|^{2n} e^{−|γ|²} / n!                           （Poisson）

相位约定与 fock_oracle 相同：哈密顿量去掉零点能。
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from engine.oscillator.greens_oscillator import KernelKind, PropagatorKernel, bilinear, resolve_romberg
from engine.signal.signal_core import (
    ComplexSignal,
    SpectralAmplitude,
    fourier_at_frequency,
    require_finite,
    support_check,
)
from engine.utils.errors import InvalidArgumentError, InvalidInputError, SupportError
from engine.utils.logger import get_component_logger

log = get_component_logger("amplitudes", "oscillator")

DEFAULT_N_MAX = 64


@dataclass(frozen=True)
class CoherentLabel:
    y_dag_prime: complex = 0.0
    y_double_prime: complex = 0.0

    def __post_init__(self):
        require_finite("y_dag_prime", self.y_dag_prime)
        require_finite("y_double_prime", self.y_double_prime)
        object.__setattr__(self, "y_dag_prime", complex(self.y_dag_prime))
        object.__setattr__(self, "y_double_prime", complex(self.y_double_prime))

    @property
    def is_ground(self) -> bool:
        return self.y_dag_prime == 0 and self.y_double_prime == 0


@dataclass(frozen=True, eq=False)
class TransitionTable:
    omega: float
    gamma: SpectralAmplitude
    persistence: complex
    p_n: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p_n, dtype=float).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "p_n", arr)

    @property
    def n_max(self) -> int:
        return self.p_n.shape[0] - 1

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.p_n)

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(self.p_n.shape[0]), self.p_n))

    @property
    def tail_mass(self) -> float:
        """截断之外的概率，由 Poisson 生存函数直接给出，避免 1 − Σ 的相消。"""
        return float(poisson.sf(self.n_max, self.gamma.intensity))

    def to_csv_rows(self) -> List[Dict[str, Any]]:
        cum = self.cumulative
        return [{"n": n, "p_n": float(p), "cumulative": float(c)} for n, (p, c) in enumerate(zip(self.p_n, cum))]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "omega": self.omega,
            "gamma_re": self.gamma.gamma.real,
            "gamma_im": self.gamma.gamma.imag,
            "gamma_sq": self.gamma.intensity,
            "persistence_re": self.persistence.real,
            "persistence_im": self.persistence.imag,
            "mean": self.mean,
            "tail_mass": self.tail_mass,
            "p_n": self.p_n.tolist(),
        }


# ── 无源与真空振幅 ─────────────────────────────────────────────────────────
def free_transformation(label: CoherentLabel, omega: float, t1: float, t2: float) -> complex:
    require_finite("omega", omega)
    if t1 < t2:
        raise InvalidArgumentError("transformation function needs t1 >= t2", {"t1": t1, "t2": t2})
    return complex(np.exp(label.y_dag_prime * np.exp(-1j * omega * (t1 - t2)) * label.y_double_prime))


def vacuum_persistence(K: ComplexSignal, omega: float, romberg: Optional[bool] = None) -> complex:
    support_check(K)
    b = bilinear(K, PropagatorKernel(omega, KernelKind.RETARDED), K, romberg=romberg)
    return complex(np.exp(-1j * b))


def source_pair_persistence(
    K: ComplexSignal, K_bar: ComplexSignal, omega: float, romberg: Optional[bool] = None
) -> complex:
    """
    y 与 y† 的源作为独立变量时的真空保持振幅 exp[−i∫∫K̄(t) G_r(t−t') K(t')]。
    K̄ = K* 时退化为 vacuum_persistence。
    """
    left = ComplexSignal(K_bar.grid, np.conj(K_bar.samples))
    b = bilinear(left, PropagatorKernel(omega, KernelKind.RETARDED), K, romberg=romberg)
    return complex(np.exp(-1j * b))


def _require_support(K: ComplexSignal, t1: float, t2: float) -> None:
    active = K.times[np.abs(K.samples) > 0]
    if active.size == 0:
        return
    tol = 1e-9 * K.grid.dt
    if active[0] < t2 - tol or active[-1] > t1 + tol:
        raise SupportError(
            "source support leaves [t2, t1]",
            {"t2": t2, "t1": t1, "support": [float(active[0]), float(active[-1])]},
        )


def forced_transformation(
    label: CoherentLabel,
    K: ComplexSignal,
    omega: float,
    t1: float,
    t2: float,
    romberg: Optional[bool] = None,
) -> complex:
    if t1 < t2:
        raise InvalidArgumentError("transformation function needs t1 >= t2", {"t1": t1, "t2": t2})
    _require_support(K, t1, t2)
    t = K.times
    w = K.grid.trapezoid_weights()
    free = label.y_dag_prime * np.exp(-1j * omega * (t1 - t2)) * label.y_double_prime
    emit = -1j * label.y_dag_prime * np.sum(w * np.exp(-1j * omega * (t1 - t)) * K.samples)
    absorb = -1j * np.sum(w * np.exp(-1j * omega * (t - t2)) * np.conj(K.samples)) * label.y_double_prime
    b = bilinear(K, PropagatorKernel(omega, KernelKind.RETARDED), K, romberg=romberg)
    return complex(np.exp(free + emit + absorb - 1j * b))


# ── 跃迁统计 ──────────────────────────────────────────────────────────────
def _intensity(K: ComplexSignal, omega: float, romberg: Optional[bool]) -> SpectralAmplitude:
    return fourier_at_frequency(K, omega, rule="trapezoid", romberg=resolve_romberg(romberg))


def transition_probabilities(
    K: ComplexSignal,
    omega: float,
    n_max: int = DEFAULT_N_MAX,
    romberg: Optional[bool] = None,
) -> TransitionTable:
    if n_max < 0:
        raise InvalidInputError("n_max must be non-negative", {"n_max": n_max})
    gamma = _intensity(K, omega, romberg)
    persistence = vacuum_persistence(K, omega, romberg=romberg)
    table = TransitionTable(omega, gamma, persistence, poisson.pmf(np.arange(n_max + 1), gamma.intensity))
    log.debug(
        "poisson table built",
        extra={"payload": {"gamma_sq": gamma.intensity, "n_max": n_max, "tail_mass": table.tail_mass}},
    )
    if table.tail_mass > 1e-12:
        log.warning("truncated Poisson tail is not negligible", extra={"payload": {"tail_mass": table.tail_mass}})
    return table


def transition_amplitude(K: ComplexSignal, omega: float, n: int, romberg: Optional[bool] = None) -> complex:
    """⟨n,t1|0,t2⟩^K = (−i)^n γ^n / √n! · e^{−inωt1} · ⟨0,t1|0,t2⟩^K，t1 取网格终点。"""
    if n < 0:
        raise InvalidInputError("occupation number must be non-negative", {"n": n})
    gamma = _intensity(K, omega, romberg).gamma
    persistence = vacuum_persistence(K, omega, romberg=romberg)
    t1 = K.grid.t_end
    norm = math.exp(-0.5 * float(gammaln(n + 1)))
    return complex(persistence * (-1j * gamma) ** n * norm * np.exp(-1j * n * omega * t1))
