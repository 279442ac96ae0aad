#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
keldysh_cycle —— 时间回路生成泛函

振子在 K₊ 作用下从 t2 演化到 t1，再在 K₋ 作用下退回 t2：

    ⟨0t2|0t2⟩^{K₋K₊} = exp[−i B_r(K₊,K₊) + i B_a(K₋,K₋) + B_0(K₋,K₊)]

K₊ = K₋ 时三项由离散恒等式精确相消，结果为 1。
热初态（τ = −iβ）与复 τ 初态额外乘 exp[−n̄_τ |γ₊ − γ₋|²]，n̄_τ = 1/(e^{iωτ} − 1)；
数态 n 乘 L_n(|γ₊ − γ₋|²)。

位移对 K₋(t) = K(t)，K₊(t) = K(t + T) 给出 e^{|γ|²(e^{−iωT} − 1)} = Σ_n e^{−inωT} p(n,0)，
从中读出均值、方差和整个分布。
"""

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.special import eval_laguerre

from engine.config.config_loader import get_section
from engine.oscillator.greens_oscillator import (
    KernelKind,
    PropagatorKernel,
    bilinear,
    convolve_retarded,
    resolve_romberg,
)
from engine.signal.signal_core import (
    ComplexSignal,
    fourier_at_frequency,
    require_finite,
    require_same_grid,
    shift_signal,
)
from engine.utils.decorators import trace_action
from engine.utils.errors import DivergentTraceError, InvalidArgumentError, InvalidInputError
from engine.utils.logger import get_component_logger

log = get_component_logger("keldysh_cycle", "oscillator")


# ── 初态与场景 ─────────────────────────────────────────────────────────────
class InitialKind:
    VACUUM = "vacuum"
    NUMBER = "number"
    THERMAL = "thermal"
    COMPLEX_TAU = "complex_tau"

    ALL = (VACUUM, NUMBER, THERMAL, COMPLEX_TAU)


@dataclass(frozen=True)
class InitialState:
    kind: str = InitialKind.VACUUM
    n: int = 0
    beta: float = math.inf
    tau: complex = 0j

    def __post_init__(self):
        if self.kind not in InitialKind.ALL:
            raise InvalidArgumentError(f"unknown initial state '{self.kind}'", {"kind": self.kind})
        if self.kind == InitialKind.NUMBER and (int(self.n) != self.n or self.n < 0):
            raise InvalidInputError("number state needs n >= 0", {"n": self.n})
        if self.kind == InitialKind.THERMAL and not self.beta >= 0:
            raise InvalidInputError("inverse temperature must be >= 0", {"beta": self.beta})

    @classmethod
    def vacuum(cls) -> "InitialState":
        return cls(InitialKind.VACUUM)

    @classmethod
    def number(cls, n: int) -> "InitialState":
        return cls(InitialKind.NUMBER, n=int(n))

    @classmethod
    def thermal(cls, beta: float) -> "InitialState":
        return cls(InitialKind.THERMAL, beta=float(beta))

    @classmethod
    def complex_tau(cls, tau: complex) -> "InitialState":
        return cls(InitialKind.COMPLEX_TAU, tau=complex(tau))

    @classmethod
    def from_dict(cls, spec: Optional[Dict[str, Any]]) -> "InitialState":
        """场景 JSON 写法：{"type": "thermal", "beta": 1.0} / {"type": "complex_tau", "tau": [re, im]}。"""
        spec = spec or {}
        kind = spec.get("type", InitialKind.VACUUM)
        if kind == InitialKind.NUMBER:
            return cls.number(spec.get("n", 0))
        if kind == InitialKind.THERMAL:
            return cls.thermal(spec.get("beta", math.inf))
        if kind == InitialKind.COMPLEX_TAU:
            tau = spec.get("tau", [0.0, -1.0])
            if isinstance(tau, (list, tuple)):
                tau = complex(tau[0], tau[1])
            return cls.complex_tau(tau)
        return cls(kind)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"type": self.kind}
        if self.kind == InitialKind.NUMBER:
            out["n"] = self.n
        elif self.kind == InitialKind.THERMAL:
            out["beta"] = self.beta
        elif self.kind == InitialKind.COMPLEX_TAU:
            out["tau"] = [self.tau.real, self.tau.imag]
        return out


@dataclass(frozen=True)
class KeldyshScenario:
    K_plus: ComplexSignal
    K_minus: ComplexSignal
    omega: float
    initial: InitialState = field(default_factory=InitialState.vacuum)

    def __post_init__(self):
        require_same_grid(self.K_plus, self.K_minus)
        require_finite("omega", self.omega)


@dataclass(frozen=True)
class MomentReport:
    mean_n: float       # ⟨N − n⟩：源转移的平均量子数
    var_n: float        # (N − n) 的方差
    gamma_sq: float
    initial_mean: float = 0.0

    @property
    def final_mean(self) -> float:
        return self.initial_mean + self.mean_n

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean_n": self.mean_n,
            "var_n": self.var_n,
            "gamma_sq": self.gamma_sq,
            "initial_mean": self.initial_mean,
        }


# ── 基本泛函 ──────────────────────────────────────────────────────────────
def _cycle_exponent(K_plus: ComplexSignal, K_minus: ComplexSignal, omega: float, romberg: Optional[bool]) -> complex:
    br = bilinear(K_plus, PropagatorKernel(omega, KernelKind.RETARDED), K_plus, romberg=romberg)
    ba = bilinear(K_minus, PropagatorKernel(omega, KernelKind.ADVANCED), K_minus, romberg=romberg)
    b0 = bilinear(K_minus, PropagatorKernel(omega, KernelKind.ONSHELL), K_plus, romberg=romberg)
    return -1j * br + 1j * ba + b0


def _require_initial(s: KeldyshScenario, *kinds: str) -> None:
    if s.initial.kind not in kinds:
        raise InvalidArgumentError(
            f"operation needs initial state in {list(kinds)}", {"initial": s.initial.to_dict()}
        )


def time_cycle_functional(s: KeldyshScenario, romberg: Optional[bool] = None) -> complex:
    _require_initial(s, InitialKind.VACUUM)
    return complex(np.exp(_cycle_exponent(s.K_plus, s.K_minus, s.omega, romberg)))


def displaced_pair(K: ComplexSignal, omega: float, T: float, initial: Optional[InitialState] = None) -> KeldyshScenario:
    """K₋ = K，K₊(t) = K(t + T)。"""
    return KeldyshScenario(shift_signal(K, T), K, omega, initial or InitialState.vacuum())


def _gamma_sq(K: ComplexSignal, omega: float, romberg: Optional[bool]) -> float:
    return fourier_at_frequency(K, omega, rule="trapezoid", romberg=resolve_romberg(romberg)).intensity


def generating_function(gamma_sq: float, theta, initial: Optional[InitialState] = None, omega: float = 1.0):
    """
    位移对在 ωT = θ 处的生成函数 ⟨e^{−iθ(N − n)}⟩。
    复 τ 初态没有概率解释，这里只接受真空 / 数态 / 热态。
    """
    initial = initial or InitialState.vacuum()
    theta = np.asarray(theta, dtype=float)
    z = np.exp(-1j * theta) - 1.0
    base = np.exp(gamma_sq * z)
    x = gamma_sq * np.abs(z) ** 2
    if initial.kind == InitialKind.VACUUM:
        out = base
    elif initial.kind == InitialKind.NUMBER:
        out = base * eval_laguerre(initial.n, x)
    elif initial.kind == InitialKind.THERMAL:
        if initial.beta == 0:
            if np.any(x > 0):
                raise DivergentTraceError("infinite-temperature trace diverges for distinct branch sources", {"beta": 0.0})
            out = base
        else:
            out = base * np.exp(-thermal_occupation(initial.beta, omega) * x)
    else:
        raise InvalidArgumentError("moments are undefined for a complex-tau initial state", {"initial": initial.to_dict()})
    return out[()] if out.ndim == 0 else out


def thermal_occupation(beta: float, omega: float) -> float:
    """⟨n⟩_β = 1/(e^{βω} − 1)。"""
    if beta == math.inf:
        return 0.0
    if beta <= 0:
        raise DivergentTraceError("thermal occupation diverges at beta = 0", {"beta": beta})
    return 1.0 / math.expm1(beta * omega)


def displaced_generator(K: ComplexSignal, omega: float, T: float, romberg: Optional[bool] = None) -> complex:
    K.grid.steps_for(T)
    theta = omega * T
    return complex(np.exp(_gamma_sq(K, omega, romberg) * (np.exp(-1j * theta) - 1.0)))


def number_state_generator(K: ComplexSignal, omega: float, T: float, n: int, romberg: Optional[bool] = None) -> complex:
    K.grid.steps_for(T)
    return complex(generating_function(_gamma_sq(K, omega, romberg), omega * T, InitialState.number(n)))


def displaced_cross_check(K: ComplexSignal, omega: float, T: float, romberg: Optional[bool] = None) -> Dict[str, float]:
    """位移对的两条路线：直接代入时间回路泛函 vs 闭式 e^{|γ|²(e^{−iωT}−1)}。"""
    direct = time_cycle_functional(displaced_pair(K, omega, T), romberg=romberg)
    closed = displaced_generator(K, omega, T, romberg=romberg)
    err = abs(direct - closed)
    if err > 1e-6:
        log.warning(
            "displaced-pair routes disagree",
            extra={"payload": {"direct": str(direct), "closed": str(closed), "abs_err": err}},
        )
    return {
        "direct_re": direct.real,
        "direct_im": direct.imag,
        "closed_re": closed.real,
        "closed_im": closed.imag,
        "abs_err": err,
    }


# ── 混合态的迹 ────────────────────────────────────────────────────────────
def complex_tau_occupation(tau: complex, omega: float) -> complex:
    """n̄_τ = 1/(e^{iωτ} − 1)，要求 Im τ < 0 且 |Re τ·ω| 不超过配置上限。"""
    tau = complex(tau)
    if not tau.imag < 0:
        raise DivergentTraceError("trace over e^{-inωτ} diverges unless Im(tau) < 0", {"tau": [tau.real, tau.imag]})
    guard = float(get_section("keldysh")["tau_real_guard"])
    if abs(tau.real * omega) > guard:
        raise InvalidArgumentError(
            "real part of tau outside the supported band", {"tau": [tau.real, tau.imag], "guard": guard}
        )
    return complex(1.0 / (np.exp(1j * omega * tau) - 1.0))


def _branch_difference_sq(s: KeldyshScenario, romberg: Optional[bool]) -> float:
    rb = resolve_romberg(romberg)
    gp = fourier_at_frequency(s.K_plus, s.omega, rule="trapezoid", romberg=rb).gamma
    gm = fourier_at_frequency(s.K_minus, s.omega, rule="trapezoid", romberg=rb).gamma
    return float(abs(gp - gm) ** 2)


@trace_action("oscillator", "thermal_generator")
def thermal_generator(s: KeldyshScenario, romberg: Optional[bool] = None) -> complex:
    _require_initial(s, InitialKind.THERMAL, InitialKind.COMPLEX_TAU)
    exponent = _cycle_exponent(s.K_plus, s.K_minus, s.omega, romberg)
    diff_sq = _branch_difference_sq(s, romberg)
    if s.initial.kind == InitialKind.THERMAL:
        if s.initial.beta == 0:
            if diff_sq > 0:
                raise DivergentTraceError(
                    "infinite-temperature trace diverges for distinct branch sources",
                    {"beta": 0.0, "diff_sq": diff_sq},
                )
            occupation = 0.0
        else:
            occupation = thermal_occupation(s.initial.beta, s.omega)
    else:
        occupation = complex_tau_occupation(s.initial.tau, s.omega)
    return complex(np.exp(exponent - occupation * diff_sq))


def cycle_trace(s: KeldyshScenario, romberg: Optional[bool] = None) -> complex:
    """按初态分派：真空 / 数态 / 热态 / 复 τ。"""
    if s.initial.kind == InitialKind.VACUUM:
        return time_cycle_functional(s, romberg=romberg)
    if s.initial.kind == InitialKind.NUMBER:
        base = np.exp(_cycle_exponent(s.K_plus, s.K_minus, s.omega, romberg))
        return complex(base * eval_laguerre(s.initial.n, _branch_difference_sq(s, romberg)))
    return thermal_generator(s, romberg=romberg)


# ── 矩 ────────────────────────────────────────────────────────────────────
def _richardson(values: Sequence[complex], steps: Sequence[float], order: int = 2) -> complex:
    (d1, d2), (h1, h2) = values, steps
    r = (h1 / h2) ** order
    return (r * d2 - d1) / (r - 1.0)


def moments(s: KeldyshScenario, romberg: Optional[bool] = None, steps: Sequence[float] = (1e-3, 5e-4)) -> MomentReport:
    """
    以 K₋ 为物理源构造位移对，对 ln G(θ) 在 θ = 0 处做中心差分：
        κ1 = i·d lnG/dθ，κ2 = −d² lnG/dθ²。
    """
    if s.initial.kind == InitialKind.COMPLEX_TAU:
        raise InvalidArgumentError("moments are undefined for a complex-tau initial state", {"initial": s.initial.to_dict()})
    g = _gamma_sq(s.K_minus, s.omega, romberg)

    def log_g(theta):
        return np.log(generating_function(g, theta, s.initial, s.omega))

    firsts, seconds = [], []
    for h in steps:
        lp, l0, lm = log_g(h), log_g(0.0), log_g(-h)
        firsts.append(1j * (lp - lm) / (2 * h))
        seconds.append(-(lp - 2 * l0 + lm) / h**2)
    mean = _richardson(firsts, steps).real
    var = _richardson(seconds, steps).real

    if s.initial.kind == InitialKind.NUMBER:
        initial_mean = float(s.initial.n)
    elif s.initial.kind == InitialKind.THERMAL and s.initial.beta > 0:
        initial_mean = thermal_occupation(s.initial.beta, s.omega)
    else:
        initial_mean = 0.0
    return MomentReport(mean_n=float(mean), var_n=float(max(var, 0.0)), gamma_sq=g, initial_mean=initial_mean)


def generating_function_inversion(
    K: ComplexSignal, omega: float, n_max: int, samples: int = 128, romberg: Optional[bool] = None
) -> np.ndarray:
    """在 ωT_k = 2πk/M 上取生成函数，逆 DFT 得到 p(n,0)。"""
    if n_max < 0 or n_max >= samples:
        raise InvalidInputError("need 0 <= n_max < samples", {"n_max": n_max, "samples": samples})
    g = _gamma_sq(K, omega, romberg)
    thetas = 2 * np.pi * np.arange(samples) / samples
    p = np.fft.ifft(generating_function(g, thetas))
    return p[: n_max + 1].real


# ── 关联函数 ──────────────────────────────────────────────────────────────
def correlation_closed_form(s: KeldyshScenario, t: float, t_prime: float) -> complex:
    """F·conj(y₋(t))·y₊(t')，y± 为推迟卷积；对离散泛函（不做外推）精确。"""
    _require_initial(s, InitialKind.VACUUM)
    j = s.K_minus.grid.index_of(t)
    k = s.K_plus.grid.index_of(t_prime)
    y_minus = convolve_retarded(s.K_minus, s.omega).samples
    y_plus = convolve_retarded(s.K_plus, s.omega).samples
    return complex(time_cycle_functional(s, romberg=False) * np.conj(y_minus[j]) * y_plus[k])


def correlation_fd(s: KeldyshScenario, t: float, t_prime: float, steps: Optional[Sequence[float]] = None) -> complex:
    """
    ∂²F / ∂K₋(t) ∂K₊*(t') 的对称差分。单点扰动高度 h/w_j，等价于积分强度 h 的 δ 源；
    对 K 的实部与虚部分别差分后按 Wirtinger 导数组合，两级步长做 Richardson。
    """
    _require_initial(s, InitialKind.VACUUM)
    grid = s.K_minus.grid
    j = grid.index_of(t)
    k = grid.index_of(t_prime)
    w = grid.trapezoid_weights()
    steps = list(steps or get_section("keldysh")["fd_steps"])
    if len(steps) != 2:
        raise InvalidInputError("correlation_fd needs exactly two step sizes", {"steps": steps})

    base_m = np.array(s.K_minus.samples)
    base_p = np.array(s.K_plus.samples)

    def F(dm: complex, dp: complex) -> complex:
        km = base_m.copy()
        kp = base_p.copy()
        km[j] += dm / w[j]
        kp[k] += dp / w[k]
        return complex(np.exp(_cycle_exponent(ComplexSignal(grid, kp), ComplexSignal(grid, km), s.omega, False)))

    def mixed(a: complex, b: complex, h: float) -> complex:
        return (F(a * h, b * h) - F(a * h, -b * h) - F(-a * h, b * h) + F(-a * h, -b * h)) / (4 * h * h)

    estimates = []
    for h in steps:
        d_xu = mixed(1, 1, h)
        d_xv = mixed(1, 1j, h)
        d_yu = mixed(1j, 1, h)
        d_yv = mixed(1j, 1j, h)
        estimates.append(0.25 * (d_xu + 1j * d_xv - 1j * d_yu + d_yv))
    value = _richardson(estimates, steps)
    log.debug(
        "functional derivative evaluated",
        extra={"payload": {"t": t, "t_prime": t_prime, "steps": steps, "value": str(value)}},
    )
    return complex(value)
