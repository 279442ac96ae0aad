#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
fock_oracle —— 截断 Fock 空间中的暴力演化，作为全部闭式结果的独立对照

H(t) = ω y†y + y† K(t) + y K*(t)，去掉零点能，与闭式的相位约定一致。
时间推进用四阶无对易子指数积分（每步两次 expm，Gauss 两点取 K）：

    U ← exp(−ih(α1 H1 + α2 H2)) · exp(−ih(α2 H1 + α1 H2)) · U
    α1,2 = (3 ∓ 2√3)/12，H1,2 = H(t + (1/2 ∓ √3/6) h)

K 在采样点之间线性插值。
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
from scipy.linalg import expm

from engine.config.config_loader import get_section
from engine.oscillator.keldysh_cycle import InitialKind, InitialState, KeldyshScenario, complex_tau_occupation
from engine.signal.signal_core import ComplexSignal, TimeGrid, interpolate, require_finite
from engine.utils.decorators import trace_action
from engine.utils.errors import DivergentTraceError, InvalidArgumentError, InvalidInputError
from engine.utils.logger import get_component_logger

log = get_component_logger("fock_oracle", "oracle")

_SQRT3 = math.sqrt(3.0)
_ALPHA1 = (3.0 - 2.0 * _SQRT3) / 12.0
_ALPHA2 = (3.0 + 2.0 * _SQRT3) / 12.0
_C1 = 0.5 - _SQRT3 / 6.0
_C2 = 0.5 + _SQRT3 / 6.0

MAX_TRUNC = 256


# ── 数据类型 ─────────────────────────────────────────────────────────────
@dataclass(frozen=True, eq=False)
class FockState:
    n_trunc: int
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if arr.shape[0] != self.n_trunc:
            raise InvalidInputError("state length does not match truncation", {"n_trunc": self.n_trunc, "len": arr.shape[0]})
        if np.vdot(arr, arr).real > 1.0 + 1e-9:
            raise InvalidInputError("state norm exceeds one", {"norm_sq": float(np.vdot(arr, arr).real)})
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @classmethod
    def number(cls, n: int, n_trunc: int) -> "FockState":
        if not 0 <= n < n_trunc:
            raise InvalidInputError("occupation outside truncation", {"n": n, "n_trunc": n_trunc})
        vec = np.zeros(n_trunc, dtype=complex)
        vec[n] = 1.0
        return cls(n_trunc, vec)

    @classmethod
    def vacuum(cls, n_trunc: int) -> "FockState":
        return cls.number(0, n_trunc)

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)


@dataclass(frozen=True, eq=False)
class Propagation:
    grid: TimeGrid
    omega: float
    U: np.ndarray
    stop_index: int
    leakage_band: int = 4

    @property
    def n_trunc(self) -> int:
        return self.U.shape[0]

    @property
    def unitarity_defect(self) -> float:
        return float(np.max(np.abs(self.U.conj().T @ self.U - np.eye(self.n_trunc))))

    def leakage(self, weights: Optional[np.ndarray] = None) -> float:
        """顶部 leakage_band 个 Fock 态上的概率，按初态权重平均；缺省为真空列。"""
        cut = max(self.n_trunc - self.leakage_band, 0)
        per_column = np.sum(np.abs(self.U[cut:, :]) ** 2, axis=0)
        if weights is None:
            return float(per_column[0])
        w = np.abs(weights)
        return float(np.dot(w, per_column) / np.sum(w))

    def probabilities(self) -> np.ndarray:
        """p(n ← m) = |U_nm|²。"""
        return np.abs(self.U) ** 2

    def apply(self, state: FockState) -> FockState:
        return FockState(self.n_trunc, self.U @ state.amplitudes)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid": self.grid.to_dict(),
            "omega": self.omega,
            "n_trunc": self.n_trunc,
            "stop_index": self.stop_index,
            "unitarity_defect": self.unitarity_defect,
            "leakage": self.leakage(),
        }


# ── 哈密顿量与演化 ─────────────────────────────────────────────────────────
def _ladder(n_trunc: int) -> np.ndarray:
    """湮灭算符 y 的截断矩阵。"""
    return np.diag(np.sqrt(np.arange(1, n_trunc, dtype=float)), k=1).astype(complex)


def _hamiltonian(k_value: complex, omega: float, n_trunc: int) -> np.ndarray:
    H = np.diag(omega * np.arange(n_trunc, dtype=float)).astype(complex)
    off = np.sqrt(np.arange(1, n_trunc, dtype=float))
    H[np.arange(1, n_trunc), np.arange(n_trunc - 1)] = off * k_value
    H[np.arange(n_trunc - 1), np.arange(1, n_trunc)] = off * np.conj(k_value)
    return H


def _resolve_trunc(n_trunc: Optional[int]) -> int:
    n_trunc = int(n_trunc or get_section("oracle")["n_trunc"])
    if n_trunc < 2:
        raise InvalidInputError("n_trunc must be at least 2", {"n_trunc": n_trunc})
    if n_trunc > MAX_TRUNC:
        raise InvalidInputError("n_trunc above supported dense size", {"n_trunc": n_trunc, "max": MAX_TRUNC})
    return n_trunc


def hamiltonian_at(t: float, K: ComplexSignal, omega: float, n_trunc: Optional[int] = None) -> np.ndarray:
    n_trunc = _resolve_trunc(n_trunc)
    tol = 1e-9 * K.grid.dt
    if t < K.grid.t_start - tol or t > K.grid.t_end + tol:
        raise InvalidArgumentError("time outside the signal grid", {"t": t, "grid": K.grid.to_dict()})
    return _hamiltonian(complex(interpolate(K, t)), omega, n_trunc)


@trace_action("oracle", "evolve")
def evolve(
    K: ComplexSignal,
    omega: float,
    n_trunc: Optional[int] = None,
    substeps: Optional[int] = None,
    stop_index: Optional[int] = None,
) -> Propagation:
    """从网格起点演化到 stop_index（缺省为终点）。"""
    require_finite("omega", omega)
    cfg = get_section("oracle")
    n_trunc = _resolve_trunc(n_trunc)
    substeps = int(substeps or cfg["substeps"])
    if substeps < 1:
        raise InvalidInputError("substeps must be >= 1", {"substeps": substeps})
    grid = K.grid
    stop = grid.n - 1 if stop_index is None else int(stop_index)
    if not 0 <= stop < grid.n:
        raise InvalidArgumentError("stop index outside grid", {"stop_index": stop, "n": grid.n})

    h = grid.dt / substeps
    starts = grid.t_start + h * np.arange(stop * substeps)

    U = np.eye(n_trunc, dtype=complex)
    for t in starts:
        H1 = hamiltonian_at(t + _C1 * h, K, omega, n_trunc)
        H2 = hamiltonian_at(t + _C2 * h, K, omega, n_trunc)
        U = expm(-1j * h * (_ALPHA1 * H1 + _ALPHA2 * H2)) @ expm(-1j * h * (_ALPHA2 * H1 + _ALPHA1 * H2)) @ U

    prop = Propagation(grid, omega, U, stop, int(cfg["leakage_band"]))
    leak = prop.leakage()
    if leak > float(cfg["leakage_threshold"]):
        log.warning("truncation leakage above threshold", extra={"payload": {"leakage": leak, "n_trunc": n_trunc}})
    return prop


# ── 初态权重与迹 ──────────────────────────────────────────────────────────
def initial_weights(initial: InitialState, omega: float, n_trunc: int) -> np.ndarray:
    """未归一化的对角权重 w_n。"""
    n = np.arange(n_trunc)
    if initial.kind == InitialKind.VACUUM:
        return (n == 0).astype(complex)
    if initial.kind == InitialKind.NUMBER:
        if initial.n >= n_trunc:
            raise InvalidInputError("number state outside truncation", {"n": initial.n, "n_trunc": n_trunc})
        return (n == initial.n).astype(complex)
    if initial.kind == InitialKind.THERMAL:
        if initial.beta == 0:
            raise DivergentTraceError("uniform weights: thermal trace diverges at beta = 0", {"beta": 0.0})
        if initial.beta == math.inf:
            return (n == 0).astype(complex)
        return np.exp(-initial.beta * omega * n).astype(complex)
    # 复 τ 的收敛条件与闭式一致
    complex_tau_occupation(initial.tau, omega)
    return np.exp(-1j * omega * initial.tau * n)


@trace_action("oracle", "time_cycle_trace")
def time_cycle_trace(s: KeldyshScenario, n_trunc: Optional[int] = None, substeps: Optional[int] = None) -> complex:
    n_trunc = _resolve_trunc(n_trunc)
    U_plus = evolve(s.K_plus, s.omega, n_trunc, substeps).U
    U_minus = evolve(s.K_minus, s.omega, n_trunc, substeps).U
    w = initial_weights(s.initial, s.omega, n_trunc)
    cycle = np.diag(U_minus.conj().T @ U_plus)
    return complex(np.sum(w * cycle) / np.sum(w))


class Observable:
    N = "N"
    N2 = "N2"
    VAR_N = "var_N"
    DELTA_N = "delta_N"
    VAR_DELTA_N = "var_delta_N"
    Y_DAG_Y = "y_dag_y"

    ALL = (N, N2, VAR_N, DELTA_N, VAR_DELTA_N, Y_DAG_Y)


@trace_action("oracle", "observable_average")
def observable_average(
    s: KeldyshScenario,
    observable: str,
    n_trunc: Optional[int] = None,
    t: Optional[float] = None,
    substeps: Optional[int] = None,
) -> float:
    """
    Heisenberg 绘景平均 Tr[ρ U(t)† O U(t)]，物理源取 K₋；t 缺省为网格终点。
    delta_N / var_delta_N 是转移量子数 N(t) − N(t2) 的均值与方差。
    """
    if observable not in Observable.ALL:
        raise InvalidArgumentError(f"unknown observable '{observable}'", {"observable": observable})
    n_trunc = _resolve_trunc(n_trunc)
    stop = None if t is None else s.K_minus.grid.index_of(t)
    prop = evolve(s.K_minus, s.omega, n_trunc, substeps, stop_index=stop)
    w = initial_weights(s.initial, s.omega, n_trunc)
    if np.any(np.abs(w.imag) > 0):
        raise InvalidArgumentError("observables need a real (probabilistic) initial state", {"initial": s.initial.to_dict()})
    w = w.real / np.sum(w.real)

    P = prop.probabilities()          # P[n, m] = p(n ← m)
    n = np.arange(n_trunc, dtype=float)
    mean_n = float(w @ (n @ P))
    mean_n2 = float(w @ ((n**2) @ P))
    if observable in (Observable.N, Observable.Y_DAG_Y):
        return mean_n
    if observable == Observable.N2:
        return mean_n2
    if observable == Observable.VAR_N:
        return mean_n2 - mean_n**2

    shift = n[:, None] - n[None, :]
    delta = float(np.sum(w * np.sum(P * shift, axis=0)))
    if observable == Observable.DELTA_N:
        return delta
    second = float(np.sum(w * np.sum(P * shift**2, axis=0)))
    return second - delta**2


# ── 周期性与对照报告 ─────────────────────────────────────────────────────────
def periodicity_check(s: KeldyshScenario, n_trunc: Optional[int] = None, substeps: Optional[int] = None) -> Dict[str, Any]:
    """
    ρ = Σ q^n |n⟩⟨n|，q = e^{−iωτ}：yρ = qρy，于是 Tr(ρ M y) = q·Tr(ρ y M)，
    M 为回路算符 U₋†U₊。左边是 t2 处 y₊ 的插入，右边是 t2′ 处 y₋ 的插入。
    """
    if s.initial.kind not in (InitialKind.THERMAL, InitialKind.COMPLEX_TAU):
        raise InvalidArgumentError("periodicity needs a thermal or complex-tau initial state", {"initial": s.initial.to_dict()})
    n_trunc = _resolve_trunc(n_trunc)
    tau = -1j * s.initial.beta if s.initial.kind == InitialKind.THERMAL else s.initial.tau
    q = complex(np.exp(-1j * s.omega * tau))
    U_plus = evolve(s.K_plus, s.omega, n_trunc, substeps).U
    U_minus = evolve(s.K_minus, s.omega, n_trunc, substeps).U
    M = U_minus.conj().T @ U_plus
    rho = np.diag(initial_weights(s.initial, s.omega, n_trunc))
    y = _ladder(n_trunc)
    lhs = complex(np.trace(rho @ M @ y))
    rhs = complex(q * np.trace(rho @ y @ M))
    return {"lhs_re": lhs.real, "lhs_im": lhs.imag, "rhs_re": rhs.real, "rhs_im": rhs.imag, "abs_err": abs(lhs - rhs)}


def compare_report(closed_form: complex, oracle: complex, propagation: Optional[Propagation] = None) -> Dict[str, Any]:
    report: Dict[str, Any] = {
        "closed_form": [complex(closed_form).real, complex(closed_form).imag],
        "oracle": [complex(oracle).real, complex(oracle).imag],
        "abs_err": abs(complex(closed_form) - complex(oracle)),
        "leakage": None,
        "unitarity_defect": None,
    }
    if propagation is not None:
        report["leakage"] = propagation.leakage()
        report["unitarity_defect"] = propagation.unitarity_defect
    return report
