#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
classical_action —— 经典作用量原理的守恒律与时间平均定理

  - 积分器：velocity-Verlet，辛格式；中心力下角动量精确守恒，成对力下总动量精确守恒。
  - 守恒量：E、L、P 以及质心律 N = P·t − M·R。
  - 时间平均：维里定理 2T̄ = ⟨r·∇V⟩（Coulomb 时即 2T̄ = −V̄），
    精细结构平均 L²/m·⟨1/r³⟩ = ⟨V'(r)⟩；两者的窗口残差都按 1/τ 衰减。
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from engine.config.config_loader import get_section
from engine.utils.decorators import trace_action
from engine.utils.errors import CollisionError, InvalidArgumentError, InvalidInputError, UnboundOrbitError
from engine.utils.logger import get_component_logger

log = get_component_logger("classical_action", "classical")


class PotentialForm:
    FREE = "free"
    COULOMB = "coulomb"
    HARMONIC = "harmonic"
    POWER = "power"
    CUSTOM = "custom"

    ALL = (FREE, COULOMB, HARMONIC, POWER, CUSTOM)


class ForceMode:
    CENTRAL = "central"       # 每个粒子受原点处固定力心作用
    PAIRWISE = "pairwise"     # 粒子两两之间 V(|r_a − r_b|)

    ALL = (CENTRAL, PAIRWISE)


@dataclass(frozen=True)
class CentralPotential:
    kind: str
    coupling: float = 1.0     # coulomb 的 k、harmonic 的 κ、power 的系数 s
    exponent: float = 1.0     # 仅 power 使用：V = s·rⁿ
    value_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    slope_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in PotentialForm.ALL:
            raise InvalidArgumentError("unknown potential kind", {"kind": self.kind, "allowed": list(PotentialForm.ALL)})
        if self.kind == PotentialForm.CUSTOM and (self.value_fn is None or self.slope_fn is None):
            raise InvalidArgumentError("custom potential needs value and slope functions")
        if not math.isfinite(self.coupling) or not math.isfinite(self.exponent):
            raise InvalidInputError("potential parameters must be finite", {"coupling": self.coupling, "exponent": self.exponent})

    @classmethod
    def coulomb(cls, k: float = 1.0) -> "CentralPotential":
        return cls(PotentialForm.COULOMB, coupling=k)

    @classmethod
    def harmonic(cls, kappa: float = 1.0) -> "CentralPotential":
        return cls(PotentialForm.HARMONIC, coupling=kappa)

    @classmethod
    def power(cls, strength: float, exponent: float) -> "CentralPotential":
        return cls(PotentialForm.POWER, coupling=strength, exponent=exponent)

    @classmethod
    def free(cls) -> "CentralPotential":
        return cls(PotentialForm.FREE, coupling=0.0)

    def value(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.kind == PotentialForm.COULOMB:
            return -self.coupling / r
        if self.kind == PotentialForm.HARMONIC:
            return 0.5 * self.coupling * r * r
        if self.kind == PotentialForm.POWER:
            return self.coupling * r**self.exponent
        if self.kind == PotentialForm.CUSTOM:
            return np.asarray(self.value_fn(r), dtype=float)
        return np.zeros_like(r)

    def slope(self, r: np.ndarray) -> np.ndarray:
        """V'(r)。"""
        r = np.asarray(r, dtype=float)
        if self.kind == PotentialForm.COULOMB:
            return self.coupling / (r * r)
        if self.kind == PotentialForm.HARMONIC:
            return self.coupling * r
        if self.kind == PotentialForm.POWER:
            return self.coupling * self.exponent * r ** (self.exponent - 1.0)
        if self.kind == PotentialForm.CUSTOM:
            return np.asarray(self.slope_fn(r), dtype=float)
        return np.zeros_like(r)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "coupling": self.coupling, "exponent": self.exponent}


def _as_vectors(arr, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(arr, dtype=float))
    if a.ndim != 2 or a.shape[1] not in (2, 3):
        raise InvalidInputError(f"{name} must be a list of 2D or 3D vectors", {"shape": list(a.shape)})
    if a.shape[1] == 2:
        a = np.hstack([a, np.zeros((a.shape[0], 1))])
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be finite")
    return a


@dataclass(frozen=True, eq=False)
class MechSystem:
    masses: np.ndarray
    positions: np.ndarray     # (N, 3)
    momenta: np.ndarray       # (N, 3)
    potential: CentralPotential
    mode: str = ForceMode.CENTRAL

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        x = _as_vectors(self.positions, "positions")
        p = _as_vectors(self.momenta, "momenta")
        if not np.all(m > 0) or not np.all(np.isfinite(m)):
            raise InvalidInputError("masses must be positive", {"masses": m.tolist()})
        if x.shape != p.shape or x.shape[0] != m.shape[0]:
            raise InvalidInputError("positions, momenta and masses disagree", {"n_masses": int(m.shape[0]), "x": list(x.shape), "p": list(p.shape)})
        if self.mode not in ForceMode.ALL:
            raise InvalidArgumentError("unknown force mode", {"mode": self.mode, "allowed": list(ForceMode.ALL)})
        if self.mode == ForceMode.PAIRWISE and m.shape[0] < 2:
            raise InvalidInputError("pairwise mode needs at least two particles")
        for name, arr in (("masses", m), ("positions", x), ("momenta", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_particles(self) -> int:
        return int(self.masses.shape[0])

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.masses))


# ── 力与能量 ─────────────────────────────────────────────────────────────
def _pairs(n: int) -> Tuple[np.ndarray, np.ndarray]:
    a, b = np.triu_indices(n, k=1)
    return a, b


def _separations(sys: MechSystem, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """返回 (相对矢量, 距离)；central 模式下是各粒子到原点。"""
    if sys.mode == ForceMode.CENTRAL:
        d = x
    else:
        a, b = _pairs(sys.n_particles)
        d = x[a] - x[b]
    return d, np.linalg.norm(d, axis=1)


def _forces(sys: MechSystem, x: np.ndarray) -> Tuple[np.ndarray, float]:
    d, r = _separations(sys, x)
    if sys.potential.kind == PotentialForm.FREE:
        # 自由粒子没有碰撞奇点
        return np.zeros_like(x), math.inf
    f = -(sys.potential.slope(r) / r)[:, None] * d
    if sys.mode == ForceMode.CENTRAL:
        return f, float(np.min(r))
    a, b = _pairs(sys.n_particles)
    F = np.zeros_like(x)
    # 作用与反作用逐对相消
    np.add.at(F, a, f)
    np.add.at(F, b, -f)
    return F, float(np.min(r))


def _potential_energy(sys: MechSystem, x: np.ndarray) -> float:
    _, r = _separations(sys, x)
    return float(np.sum(sys.potential.value(r)))


def _kinetic_energy(masses: np.ndarray, p: np.ndarray) -> float:
    return float(np.sum(np.sum(p * p, axis=1) / (2.0 * masses)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    system: MechSystem
    dt: float
    times: np.ndarray
    positions: np.ndarray     # (n_t, N, 3)
    momenta: np.ndarray       # (n_t, N, 3)
    kinetic: np.ndarray
    potential: np.ndarray
    r_min: float

    @property
    def energy(self) -> np.ndarray:
        return self.kinetic + self.potential

    @property
    def angular_momentum(self) -> np.ndarray:
        return np.sum(np.cross(self.positions, self.momenta), axis=1)

    @property
    def total_momentum(self) -> np.ndarray:
        return np.sum(self.momenta, axis=1)

    @property
    def center_of_mass(self) -> np.ndarray:
        m = self.system.masses
        return np.einsum("i,tij->tj", m, self.positions) / self.system.total_mass

    @property
    def boost_charge(self) -> np.ndarray:
        """N(t) = P·t − M·R(t)。"""
        return self.total_momentum * self.times[:, None] - self.system.total_mass * self.center_of_mass

    def csv_header(self) -> List[str]:
        cols = ["t"]
        for i in range(self.system.n_particles):
            cols += [f"x{i}_{c}" for c in "xyz"]
        for i in range(self.system.n_particles):
            cols += [f"p{i}_{c}" for c in "xyz"]
        cols += ["E", "Lx", "Ly", "Lz", "Nx", "Ny", "Nz"]
        return cols

    def to_csv_rows(self, stride: int = 1) -> List[List[float]]:
        E, L, N = self.energy, self.angular_momentum, self.boost_charge
        rows = []
        for k in range(0, self.times.shape[0], max(1, int(stride))):
            rows.append(
                [float(self.times[k])]
                + self.positions[k].ravel().tolist()
                + self.momenta[k].ravel().tolist()
                + [float(E[k])]
                + L[k].tolist()
                + N[k].tolist()
            )
        return rows


def kepler_orbit(e: float, a: float = 1.0, k: float = 1.0, m: float = 1.0) -> MechSystem:
    """力心固定的 Kepler 轨道，从近心点出发：r_p = a(1−e)，v_p = √(k(1+e)/(m·a(1−e)))。"""
    if not 0 <= e < 1 or a <= 0 or k <= 0 or m <= 0:
        raise InvalidInputError("bound Kepler orbit needs 0 <= e < 1 and positive a, k, m", {"e": e, "a": a, "k": k, "m": m})
    r_p = a * (1.0 - e)
    v_p = math.sqrt(k * (1.0 + e) / (m * a * (1.0 - e)))
    return MechSystem([m], [[r_p, 0.0, 0.0]], [[0.0, m * v_p, 0.0]], CentralPotential.coulomb(k))


def kepler_period(a: float = 1.0, k: float = 1.0, m: float = 1.0) -> float:
    return 2.0 * math.pi * math.sqrt(m * a**3 / k)


# ── 积分 ─────────────────────────────────────────────────────────────────
@trace_action("classical", "integrate")
def integrate(sys: MechSystem, dt: float, steps: int) -> Trajectory:
    if not (math.isfinite(dt) and dt > 0):
        raise InvalidInputError("time step must be positive", {"dt": dt})
    steps = int(steps)
    if steps < 1:
        raise InvalidInputError("need at least one step", {"steps": steps})

    m = sys.masses[:, None]
    x = sys.positions.copy()
    p = sys.momenta.copy()
    F, r0 = _forces(sys, x)
    r_min = get_section("classical")["r_min_factor"] * r0

    xs = np.empty((steps + 1,) + x.shape)
    ps = np.empty_like(xs)
    xs[0], ps[0] = x, p
    half = 0.5 * dt
    for n in range(1, steps + 1):
        p = p + half * F
        x = x + dt * p / m
        F, r = _forces(sys, x)
        if r < r_min:
            raise CollisionError(
                "particle separation fell below collision threshold",
                {"step": n, "t": n * dt, "r": r, "r_min": r_min},
            )
        p = p + half * F
        xs[n], ps[n] = x, p

    kinetic = np.sum(np.sum(ps * ps, axis=2) / (2.0 * sys.masses[None, :]), axis=1)
    potential = np.array([_potential_energy(sys, xs[k]) for k in range(steps + 1)])
    return Trajectory(sys, float(dt), dt * np.arange(steps + 1), xs, ps, kinetic, potential, float(r_min))


@dataclass(frozen=True)
class ConservationReport:
    energy: float
    angular_momentum: float
    momentum: float
    boost: float
    momentum_per_step: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "energy": self.energy,
            "angular_momentum": self.angular_momentum,
            "momentum": self.momentum,
            "boost": self.boost,
            "momentum_per_step": self.momentum_per_step,
        }


def _max_drift(series: np.ndarray) -> float:
    series = np.asarray(series)
    delta = series - series[0]
    if delta.ndim > 1:
        delta = np.linalg.norm(delta, axis=1)
    return float(np.max(np.abs(delta)))


def conservation_report(traj: Trajectory) -> ConservationReport:
    P = traj.total_momentum
    per_step = float(np.max(np.linalg.norm(np.diff(P, axis=0), axis=1))) if P.shape[0] > 1 else 0.0
    return ConservationReport(
        energy=_max_drift(traj.energy),
        angular_momentum=_max_drift(traj.angular_momentum),
        momentum=_max_drift(P),
        boost=_max_drift(traj.boost_charge),
        momentum_per_step=per_step,
    )


def energy_trend(traj: Trajectory, parts: int = 10) -> Dict[str, float]:
    """首段与末段的最大能量偏差；辛积分下两者同量级，没有长期增长。"""
    dE = np.abs(traj.energy - traj.energy[0])
    chunks = np.array_split(dE, max(2, int(parts)))
    first, last = float(np.max(chunks[0])), float(np.max(chunks[-1]))
    return {"first": first, "last": last, "ratio": last / first if first > 0 else 0.0}


def orbital_period(traj: Trajectory, particle: int = 0) -> float:
    """极角累计到 2π 的时刻，相邻样本间线性插值。"""
    x = traj.positions[:, particle, :]
    phi = np.unwrap(np.arctan2(x[:, 1], x[:, 0]))
    phi = np.abs(phi - phi[0])
    idx = np.nonzero(phi >= 2.0 * math.pi)[0]
    if idx.size == 0:
        raise InvalidArgumentError("trajectory does not complete a revolution", {"angle": float(phi[-1])})
    j = int(idx[0])
    frac = (2.0 * math.pi - phi[j - 1]) / (phi[j] - phi[j - 1])
    return float(traj.times[j - 1] + frac * traj.dt)


# ── 时间平均定理 ──────────────────────────────────────────────────────────
class AverageCheck(NamedTuple):
    lhs: float
    rhs: float
    residual: float


def _window(traj: Trajectory, window: Optional[float]) -> slice:
    if window is None:
        return slice(0, traj.times.shape[0])
    if not window > 0:
        raise InvalidArgumentError("averaging window must be positive", {"window": window})
    n = int(round(window / traj.dt))
    if n < 1 or n >= traj.times.shape[0]:
        raise InvalidArgumentError("averaging window outside trajectory", {"window": window, "t_end": float(traj.times[-1])})
    return slice(0, n + 1)


def _time_average(values: np.ndarray, dt: float) -> float:
    w = np.full(values.shape[0], dt)
    w[0] = w[-1] = 0.5 * dt
    return float(np.sum(w * values) / (dt * (values.shape[0] - 1)))


def _require_bound(traj: Trajectory) -> None:
    if traj.system.potential.kind == PotentialForm.COULOMB:
        P = traj.total_momentum[0]
        # 质心系能量
        E = float(traj.energy[0]) - float(P @ P) / (2.0 * traj.system.total_mass)
        if E >= 0:
            raise UnboundOrbitError("Coulomb orbit is not bound", {"energy": E})


def virial_average(traj: Trajectory, window: Optional[float] = None) -> AverageCheck:
    """(2T̄, ⟨r·∇V⟩, |差|)；动能取质心系。Coulomb 时右端即 −V̄。"""
    _require_bound(traj)
    sl = _window(traj, window)
    sys = traj.system
    P = traj.total_momentum[sl]
    two_t = 2.0 * (traj.kinetic[sl] - np.sum(P * P, axis=1) / (2.0 * sys.total_mass))
    r_dv = np.empty(two_t.shape[0])
    for n, k in enumerate(range(sl.start, sl.stop)):
        _, r = _separations(sys, traj.positions[k])
        r_dv[n] = float(np.sum(r * sys.potential.slope(r)))
    lhs, rhs = _time_average(two_t, traj.dt), _time_average(r_dv, traj.dt)
    return AverageCheck(lhs, rhs, abs(lhs - rhs))


def _relative_motion(traj: Trajectory, sl: slice) -> Tuple[np.ndarray, np.ndarray, float]:
    """单一相对坐标 (r, p_rel, μ)。"""
    sys = traj.system
    if sys.mode == ForceMode.CENTRAL and sys.n_particles == 1:
        return traj.positions[sl, 0, :], traj.momenta[sl, 0, :], float(sys.masses[0])
    if sys.mode == ForceMode.PAIRWISE and sys.n_particles == 2:
        m1, m2 = sys.masses
        mu = m1 * m2 / (m1 + m2)
        r = traj.positions[sl, 0, :] - traj.positions[sl, 1, :]
        v = traj.momenta[sl, 0, :] / m1 - traj.momenta[sl, 1, :] / m2
        return r, mu * v, float(mu)
    raise InvalidArgumentError("fine-structure average needs a single relative coordinate", {"mode": sys.mode, "n": sys.n_particles})


def fine_structure_average(traj: Trajectory, window: Optional[float] = None) -> AverageCheck:
    """(L²/μ·⟨1/r³⟩, ⟨V'(r)⟩, |差|)；Coulomb 时右端即 −⟨V/r⟩。"""
    _require_bound(traj)
    sl = _window(traj, window)
    r_vec, p_rel, mu = _relative_motion(traj, sl)
    r = np.linalg.norm(r_vec, axis=1)
    L = np.cross(r_vec, p_rel)
    L2 = np.sum(L * L, axis=1)
    lhs = _time_average(L2 / (mu * r**3), traj.dt)
    rhs = _time_average(traj.system.potential.slope(r), traj.dt)
    return AverageCheck(lhs, rhs, abs(lhs - rhs))


def average_convergence(traj: Trajectory, period: float, ks: Sequence[int] = range(0, 6)) -> Dict[str, Any]:
    """窗口 τ = (2^k + ¼)·P 上的残差与 log-log 斜率，期望 −1。"""
    windows = [(2**k + 0.25) * period for k in ks]
    virial = [virial_average(traj, w).residual for w in windows]
    fine = [fine_structure_average(traj, w).residual for w in windows]
    logw = np.log(windows)
    slope_v = float(np.polyfit(logw, np.log(virial), 1)[0])
    slope_f = float(np.polyfit(logw, np.log(fine), 1)[0])
    log.info("time-average convergence measured", extra={"payload": {"virial_slope": slope_v, "fine_structure_slope": slope_f}})
    return {"windows": windows, "virial": virial, "fine_structure": fine, "virial_slope": slope_v, "fine_structure_slope": slope_f}


def system_from_spec(spec: Dict[str, Any]) -> MechSystem:
    """{"masses", "positions", "momenta", "potential": {"kind", ...}, "mode"}。"""
    pot = dict(spec.get("potential") or {"kind": PotentialForm.FREE})
    kind = pot.pop("kind", PotentialForm.FREE)
    if kind == PotentialForm.CUSTOM:
        raise InvalidArgumentError("custom potentials cannot be built from a scenario")
    try:
        potential = CentralPotential(kind, **pot)
    except TypeError as e:
        raise InvalidArgumentError("bad potential parameters", {"error": str(e)}) from e
    return MechSystem(spec["masses"], spec["positions"], spec["momenta"], potential, spec.get("mode", ForceMode.CENTRAL))
