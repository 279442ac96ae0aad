#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
scattering —— 瞬时势的一维定能散射

Lippmann–Schwinger 方程 T = V + V G⁰ T 在网格上化为稠密线性方程组：
    (I − diag(V)·G⁰·dx) T = diag(V)/dx
    G⁰(x,x') = (m/ik)·e^{ik|x−x'|}，k = √(2m(E + iη))，出射边界条件
网格点等权 dx（中点规则），δ 势落在单个格点上，高度 λ/dx。
+i0 用 η = eta_rel·E 实现，再对 η 做一次 Richardson 外推。

独立对照：分段常数势与 δ 势的传递矩阵。
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from engine.config.config_loader import get_section
from engine.source_theory.propagators import SpaceGrid
from engine.utils.decorators import trace_action
from engine.utils.errors import (
    AsymptoticsError,
    ConditioningError,
    InvalidArgumentError,
    InvalidInputError,
    ResolutionError,
)
from engine.utils.logger import get_component_logger

log = get_component_logger("scattering", "source_theory")

COND_LIMIT = 1e12


# ── 势 ────────────────────────────────────────────────────────────────────
class PotentialKind:
    DELTA = "delta"
    SQUARE_WELL = "square_well"
    HARMONIC = "harmonic"
    CUSTOM = "custom"

    ALL = (DELTA, SQUARE_WELL, HARMONIC, CUSTOM)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    kind: str
    strength: float = 0.0       # delta: λ
    depth: float = 0.0          # square_well: 阱内 V = −depth
    width: float = 0.0
    center: float = 0.0
    omega_r: float = 0.0        # harmonic: μ ω_r² (x − center)² / 2
    values: Optional[np.ndarray] = None
    instantaneous: bool = True

    def __post_init__(self):
        if self.kind not in PotentialKind.ALL:
            raise InvalidArgumentError(f"unknown potential kind '{self.kind}'", {"kind": self.kind})
        if self.kind == PotentialKind.SQUARE_WELL and not self.width > 0:
            raise InvalidInputError("square well needs a positive width", {"width": self.width})
        if self.kind == PotentialKind.CUSTOM:
            if self.values is None:
                raise InvalidInputError("custom potential needs sampled values")
            arr = np.asarray(self.values)
            if np.iscomplexobj(arr) and np.any(arr.imag != 0):
                raise InvalidInputError("potential must be real-valued")
            arr = np.array(arr.real, dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, "values", arr)

    @classmethod
    def delta(cls, strength: float, center: float = 0.0) -> "PotentialSpec":
        return cls(PotentialKind.DELTA, strength=strength, center=center)

    @classmethod
    def square_well(cls, depth: float, width: float, center: float = 0.0) -> "PotentialSpec":
        return cls(PotentialKind.SQUARE_WELL, depth=depth, width=width, center=center)

    @classmethod
    def harmonic(cls, omega_r: float, center: float = 0.0) -> "PotentialSpec":
        return cls(PotentialKind.HARMONIC, omega_r=omega_r, center=center)

    @classmethod
    def custom(cls, values: Sequence[float]) -> "PotentialSpec":
        return cls(PotentialKind.CUSTOM, values=np.asarray(values))

    @property
    def is_smooth(self) -> bool:
        return self.kind in (PotentialKind.HARMONIC, PotentialKind.CUSTOM)

    def sample(self, grid: SpaceGrid, mu: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """返回 (V_j, delta_mask)；δ 势的格点高度为 λ/dx。"""
        x = grid.positions
        V = np.zeros(grid.n)
        mask = np.zeros(grid.n, dtype=bool)
        if self.kind == PotentialKind.DELTA:
            j = grid.nearest_index(self.center)
            V[j] = self.strength / grid.dx
            mask[j] = True
        elif self.kind == PotentialKind.SQUARE_WELL:
            V[np.abs(x - self.center) < 0.5 * self.width] = -self.depth
        elif self.kind == PotentialKind.HARMONIC:
            V = 0.5 * mu * self.omega_r**2 * (x - self.center) ** 2
        else:
            if self.values.shape[0] != grid.n:
                raise InvalidInputError("custom potential length does not match grid", {"len": self.values.shape[0], "n": grid.n})
            V = np.array(self.values)
        return V, mask

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"kind": self.kind, "center": self.center}
        if self.kind == PotentialKind.DELTA:
            out["strength"] = self.strength
        elif self.kind == PotentialKind.SQUARE_WELL:
            out.update(depth=self.depth, width=self.width)
        elif self.kind == PotentialKind.HARMONIC:
            out["omega_r"] = self.omega_r
        return out


@dataclass(frozen=True, eq=False)
class ScatteringResult:
    energy: float
    k: float
    r: complex
    t: complex
    x: Optional[np.ndarray] = None
    psi: Optional[np.ndarray] = None

    @property
    def unitarity_defect(self) -> float:
        return float(abs(abs(self.r) ** 2 + abs(self.t) ** 2 - 1.0))

    def to_csv_row(self) -> Dict[str, float]:
        return {
            "E": self.energy,
            "k": self.k,
            "re_r": self.r.real,
            "im_r": self.r.imag,
            "re_t": self.t.real,
            "im_t": self.t.imag,
            "unitarity_defect": self.unitarity_defect,
        }


# ── 自由预解式 ────────────────────────────────────────────────────────────
def _wavenumber(E: complex, m: float) -> complex:
    return complex(np.sqrt(2 * m * complex(E)))


def free_resolvent(E: complex, m: float, x: np.ndarray) -> np.ndarray:
    """
    (E − p²/2m)⁻¹ 的坐标表示 (m/ik)e^{ik|x−x'|}，k 取主值分支（Im k ≥ 0）。
    E < 0 时 k = iκ，核为实数 −(m/κ)e^{−κ|x−x'|}。
    """
    if not m > 0:
        raise InvalidInputError("mass must be positive", {"m": m})
    k = _wavenumber(E, m)
    if k == 0:
        raise InvalidArgumentError("resolvent is singular at E = 0", {"E": str(E)})
    x = np.asarray(x, dtype=float)
    return (m / (1j * k)) * np.exp(1j * k * np.abs(x[:, None] - x[None, :]))


# ── T 矩阵 ────────────────────────────────────────────────────────────────
def _check_resolution(V: np.ndarray, mask: np.ndarray, E: float, m: float, dx: float) -> None:
    required = float(get_section("source_theory")["points_per_wavelength"])
    smooth = V[~mask]
    v_min = float(smooth.min()) if smooth.size else 0.0
    k_local = np.sqrt(2 * m * max(E - min(v_min, 0.0), E))
    ppw = 2 * np.pi / (k_local * dx)
    if ppw < required:
        raise ResolutionError(
            "grid does not resolve the local wavelength",
            {"points_per_wavelength": float(ppw), "required": required, "dx": dx, "k_local": float(k_local)},
        )


def _solve_t(V: np.ndarray, x: np.ndarray, dx: float, E: complex, m: float) -> Tuple[np.ndarray, complex]:
    k = _wavenumber(E, m)
    G = free_resolvent(E, m, x)
    A = np.eye(x.shape[0], dtype=complex) - V[:, None] * G * dx
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ConditioningError(
            "Lippmann-Schwinger system is singular at grid scale", {"cond": cond, "E": str(E), "n": int(x.shape[0])}
        )
    T = np.linalg.solve(A, np.diag(V.astype(complex)) / dx)
    return T, k


def _amplitudes(T: np.ndarray, k: complex, x: np.ndarray, dx: float, m: float) -> Tuple[complex, complex]:
    right = np.exp(1j * k * x) * dx
    t = 1.0 + (m / (1j * k)) * (np.exp(-1j * k * x) * dx) @ T @ right
    r = (m / (1j * k)) * right @ T @ right
    return complex(r), complex(t)


def _eta(E: float) -> float:
    return float(get_section("source_theory")["eta_rel"]) * E


def _prepare(V: PotentialSpec, E: float, m: float, grid: SpaceGrid) -> Tuple[np.ndarray, np.ndarray]:
    if not E > 0:
        raise InvalidInputError("scattering needs a positive energy", {"E": E})
    if not m > 0:
        raise InvalidInputError("mass must be positive", {"m": m})
    Vs, mask = V.sample(grid, mu=m)
    _check_resolution(Vs, mask, E, m, grid.dx)
    return Vs, mask


def t_matrix(V: PotentialSpec, E: float, m: float, grid: SpaceGrid) -> np.ndarray:
    Vs, _ = _prepare(V, E, m, grid)
    eta = _eta(E)
    T1, _ = _solve_t(Vs, grid.positions, grid.dx, E + 1j * eta, m)
    T2, _ = _solve_t(Vs, grid.positions, grid.dx, E + 2j * eta, m)
    return 2 * T1 - T2


@trace_action("source_theory", "scatter")
def scatter(V: PotentialSpec, E: float, m: float, grid: SpaceGrid) -> ScatteringResult:
    """由外推到 η → 0 的 T 矩阵直接积分出 r, t，波数取实轴上的 k。"""
    T = t_matrix(V, E, m, grid)
    k = float(np.sqrt(2 * m * E))
    r, t = _amplitudes(T, k, grid.positions, grid.dx, m)
    return ScatteringResult(E, k, r, t)


@trace_action("source_theory", "scattered_field")
def scattered_field(V: PotentialSpec, E: float, m: float, grid: SpaceGrid) -> ScatteringResult:
    """
    ψ = ψ⁰ + G⁰·dx·T·dx·ψ⁰，入射平面波 e^{ikx}；r, t 从网格两端读取，
    要求势的支撑离两端至少 asymptotic_margin 个格点。
    """
    Vs, _ = _prepare(V, E, m, grid)
    margin = int(get_section("source_theory")["asymptotic_margin"])
    support = np.nonzero(Vs)[0]
    if support.size and (support[0] < margin or support[-1] > grid.n - 1 - margin):
        raise AsymptoticsError(
            "potential support reaches the grid edge", {"support": [int(support[0]), int(support[-1])], "margin": margin}
        )
    x = grid.positions
    eta = _eta(E)

    def field(E_c: complex) -> np.ndarray:
        T, k = _solve_t(Vs, x, grid.dx, E_c, m)
        psi0 = np.exp(1j * k * x)
        return psi0 + free_resolvent(E_c, m, x) @ (grid.dx * (T @ (grid.dx * psi0)))

    psi = 2 * field(E + 1j * eta) - field(E + 2j * eta)
    k = float(np.sqrt(2 * m * E))
    t = complex(psi[-1] * np.exp(-1j * k * x[-1]))
    r = complex((psi[0] - np.exp(1j * k * x[0])) * np.exp(1j * k * x[0]))
    return ScatteringResult(E, k, r, t, x=x, psi=psi)


def square_well_amplitudes(V: PotentialSpec, E: float, m: float, n_cells: int) -> ScatteringResult:
    """方阱按中点网格精确铺满阱宽，n 与 2n 两级网格做 dx 的 Richardson 外推。"""
    if V.kind != PotentialKind.SQUARE_WELL:
        raise InvalidArgumentError("square_well_amplitudes needs a square well", {"kind": V.kind})
    a = V.center - 0.5 * V.width

    def solve(n: int) -> ScatteringResult:
        h = V.width / n
        grid = SpaceGrid(a + 0.5 * h, h, n)
        return scatter(PotentialSpec.custom(np.full(n, -V.depth)), E, m, grid)

    coarse, fine = solve(n_cells), solve(2 * n_cells)
    return ScatteringResult(
        E,
        fine.k,
        (4 * fine.r - coarse.r) / 3,
        (4 * fine.t - coarse.t) / 3,
    )


# ── 对照与级数 ────────────────────────────────────────────────────────────
def _segments(V: PotentialSpec) -> List[Tuple[str, float, float, float]]:
    if V.kind == PotentialKind.DELTA:
        return [("delta", V.center, V.center, V.strength)]
    if V.kind == PotentialKind.SQUARE_WELL:
        return [("flat", V.center - 0.5 * V.width, V.center + 0.5 * V.width, -V.depth)]
    raise InvalidArgumentError("transfer matrix supports delta and square-well potentials", {"kind": V.kind})


def transfer_matrix(V: PotentialSpec, E: float, m: float) -> Tuple[complex, complex]:
    """(ψ, ψ') 的传递矩阵，返回 (r, t)。"""
    if not E > 0:
        raise InvalidInputError("scattering needs a positive energy", {"E": E})
    k = np.sqrt(2 * m * E)
    M = np.eye(2, dtype=complex)
    segments = _segments(V)
    x_a, x_b = segments[0][1], segments[-1][2]
    for kind, lo, hi, value in segments:
        if kind == "delta":
            step = np.array([[1.0, 0.0], [2 * m * value, 1.0]], dtype=complex)
        else:
            q = np.sqrt(complex(2 * m * (E - value)))
            L = hi - lo
            step = np.array(
                [[np.cos(q * L), L * np.sinc(q * L / np.pi)], [-q * np.sin(q * L), np.cos(q * L)]], dtype=complex
            )
        M = step @ M
    a_in = np.array([np.exp(1j * k * x_a), 1j * k * np.exp(1j * k * x_a)])
    a_r = np.array([np.exp(-1j * k * x_a), -1j * k * np.exp(-1j * k * x_a)])
    c = np.array([np.exp(1j * k * x_b), 1j * k * np.exp(1j * k * x_b)])
    r, t = np.linalg.solve(np.column_stack([M @ a_r, -c]), -M @ a_in)
    return complex(r), complex(t)


def born_series(V: PotentialSpec, E: float, m: float, grid: SpaceGrid, max_order: int = 20) -> Dict[str, Any]:
    """T = V + VG⁰V + ... 的部分和给出的透射振幅，附比值检验。"""
    Vs, _ = _prepare(V, E, m, grid)
    x = grid.positions
    E_c = E + 1j * _eta(E)
    G = free_resolvent(E_c, m, x)
    k = _wavenumber(E_c, m)
    term = np.diag(Vs.astype(complex)) / grid.dx
    total = np.zeros_like(term)
    partial_t, ratios = [], []
    prev_norm = None
    for _ in range(max_order + 1):
        total = total + term
        partial_t.append(_amplitudes(total, k, x, grid.dx, m)[1])
        norm = float(np.linalg.norm(term))
        if prev_norm:
            ratios.append(norm / prev_norm)
        prev_norm = norm
        term = (Vs[:, None] * G * grid.dx) @ term
    converged = bool(ratios) and ratios[-1] < 1.0
    if not converged:
        log.warning("Born series does not converge", extra={"payload": {"last_ratio": ratios[-1] if ratios else None}})
    return {
        "partial_t": [[z.real, z.imag] for z in partial_t],
        "ratios": ratios,
        "converged": converged,
    }
