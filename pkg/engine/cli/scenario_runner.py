#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
场景执行：每个场景是一个 ScenarioTask，依次 load → compute → check → write。

  load     把已校验的 pydantic 模型转成引擎类型（信号、网格、势、初态）
  compute  调用数值模块，得到指标 metrics、可画图的表格和 JSON 报告
  check    按 acceptance 比较指标，容差乘以 tolerance_scale
  write    原子写出 CSV / JSON
"""

import datetime
import math
import pathlib
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import poisson

from engine.algebra.field_algebra import verification_report
from engine.classical.classical_action import (
    average_convergence,
    conservation_report,
    energy_trend,
    fine_structure_average,
    integrate,
    kepler_orbit,
    kepler_period,
    orbital_period,
    system_from_spec,
    virial_average,
)
from engine.cli.artifacts import render_csv, render_json, write_atomic
from engine.cli.scenario_models import SignalSpec, SpaceGridSpec, TimeGridSpec
from engine.config.config_loader import get_section
from engine.oracle.fock_oracle import (
    Observable,
    compare_report,
    evolve,
    observable_average,
    periodicity_check,
    time_cycle_trace,
)
from engine.oscillator.amplitudes import (
    DEFAULT_N_MAX,
    CoherentLabel,
    forced_transformation,
    free_transformation,
    source_pair_persistence,
    transition_amplitude,
    transition_probabilities,
    vacuum_persistence,
)
from engine.oscillator.greens_oscillator import KernelKind, convolution_bilinear_defect, kernel_identity_defect, ode_residual
from engine.oscillator.keldysh_cycle import (
    InitialKind,
    InitialState,
    KeldyshScenario,
    correlation_closed_form,
    correlation_fd,
    cycle_trace,
    displaced_cross_check,
    displaced_pair,
    generating_function_inversion,
    moments,
    number_state_generator,
    time_cycle_functional,
)
from engine.path.path_lattice import (
    FrequencyGrid,
    convergence_study,
    epsilon_study,
    lattice_greens,
    lattice_persistence,
    spectral_persistence,
)
from engine.signal.signal_core import ComplexSignal, TimeGrid, signal_from_spec
from engine.source_theory.bound_states import bound_state_channels, channel_propagator, effective_channel_source
from engine.source_theory.propagators import (
    OccupationPattern,
    SpaceGrid,
    SpaceTimeSource,
    causal_cross_term,
    default_momenta,
    field_equation_residual,
    gaussian_source,
    momentum_cells,
    multi_particle_amplitude,
    on_shell_combination_residual,
    probability_report,
    stimulated_amplitude,
    two_particle_field,
    vacuum_persistence_st,
)
from engine.source_theory.scattering import (
    PotentialKind,
    PotentialSpec,
    born_series,
    scatter,
    scattered_field,
    square_well_amplitudes,
    transfer_matrix,
)
from engine.task.task_manager import ScenarioTask
from engine.utils.decorators import trace_action
from engine.utils.errors import ScenarioError
from engine.utils.logger import get_component_logger

log = get_component_logger("scenario_runner", "cli")


# ── 结果类型 ─────────────────────────────────────────────────────────────
@dataclass
class Computation:
    metrics: Dict[str, float]
    header: List[str] = field(default_factory=list)
    rows: List[List[Any]] = field(default_factory=list)
    report: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Check:
    metric: str
    value: float
    expected: float
    tolerance: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "metric": self.metric,
            "value": self.value,
            "expected": self.expected,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


@dataclass
class Outcome:
    name: str
    kind: str
    computation: Computation
    checks: List[Check]
    path: Optional[pathlib.Path] = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _c(z: complex) -> List[float]:
    z = complex(z)
    return [z.real, z.imag]


# ── load：模型 → 引擎类型 ────────────────────────────────────────────────
def _signal(spec: SignalSpec) -> ComplexSignal:
    return signal_from_spec(spec.as_dict())


def _resampled(spec: SignalSpec, dt: float) -> ComplexSignal:
    """同一时间窗口、步长约为 dt 的重新采样。"""
    g = spec.grid
    n = int(round(g.span / dt)) + 1
    grid = TimeGridSpec(t_start=g.t_start, t_end=g.t_start + g.span, n=n)
    return _signal(spec.model_copy(update={"grid": grid}))


def _space_grid(spec: SpaceGridSpec) -> SpaceGrid:
    return SpaceGrid.from_span(spec.x_start, spec.x_end, spec.n)


def _time_grid(spec: TimeGridSpec) -> TimeGrid:
    if spec.dt is not None:
        return TimeGrid(spec.t_start, spec.dt, spec.n)
    return TimeGrid.from_span(spec.t_start, spec.t_end, spec.n)


def _potential(model) -> PotentialSpec:
    if model.kind == PotentialKind.DELTA:
        return PotentialSpec.delta(model.strength, model.center)
    if model.kind == PotentialKind.SQUARE_WELL:
        return PotentialSpec.square_well(model.depth, model.width, model.center)
    if model.kind == PotentialKind.HARMONIC:
        return PotentialSpec.harmonic(model.omega_r, model.center)
    if model.values is None:
        raise ScenarioError("custom potential needs 'values'")
    return PotentialSpec.custom(model.values)


# ── compute：各 kind ──────────────────────────────────────────────────────
def _compute_oscillator(sc) -> Computation:
    K = _signal(sc.signal)
    table = transition_probabilities(K, sc.omega, max(sc.n_max, DEFAULT_N_MAX), romberg=sc.romberg)
    P = table.persistence
    g = table.gamma.intensity
    p = table.p_n[: sc.n_max + 1]
    amplitudes = np.array([transition_amplitude(K, sc.omega, n, romberg=sc.romberg) for n in range(sc.n_max + 1)])
    K_bar = ComplexSignal(K.grid, np.conj(K.samples))
    metrics = {
        "gamma_sq": g,
        "persistence_re": P.real,
        "persistence_im": P.imag,
        "persistence_modulus_err": abs(abs(P) ** 2 - math.exp(-g)),
        "poisson_sum_err": abs(1.0 - float(np.sum(table.p_n))),
        "greens_identity_defect": kernel_identity_defect(sc.omega, np.linspace(-10.0, 10.0, 1000)),
        "amplitude_modulus_err": float(np.max(np.abs(np.abs(amplitudes) ** 2 - p))),
        "pair_persistence_err": abs(source_pair_persistence(K, K_bar, sc.omega, romberg=sc.romberg) - P),
        "convolution_defect": convolution_bilinear_defect(K, sc.omega),
        "ode_residual_max": max(
            float(np.max(np.abs(ode_residual(K, sc.omega, kind)))) for kind in (KernelKind.RETARDED, KernelKind.ADVANCED)
        ),
    }
    report: Dict[str, Any] = {"table": table.to_dict()}
    header = ["n", "p_n", "cumulative", "amplitude_re", "amplitude_im"]
    rows = [
        [r["n"], r["p_n"], r["cumulative"], amplitudes[n].real, amplitudes[n].imag]
        for n, r in enumerate(table.to_csv_rows()[: sc.n_max + 1])
    ]

    if sc.oracle:
        prop = evolve(K, sc.omega, sc.n_trunc, sc.substeps)
        p_oracle = prop.probabilities()[:, 0]
        n_cmp = min(sc.n_max + 1, prop.n_trunc)
        deltas = np.abs(p[:n_cmp] - p_oracle[:n_cmp])
        comparison = compare_report(P, complex(prop.U[0, 0]), prop)
        metrics["oracle_max_delta"] = float(np.max(deltas))
        metrics["oracle_persistence_err"] = comparison["abs_err"]
        metrics["oracle_leakage"] = comparison["leakage"]
        metrics["oracle_unitarity_defect"] = comparison["unitarity_defect"]
        report["oracle"] = comparison
        header += ["p_oracle", "delta"]
        for n, row in enumerate(rows):
            row += [float(p_oracle[n]), float(deltas[n])] if n < n_cmp else [math.nan, math.nan]

    if sc.label is not None:
        lb = sc.label
        label = CoherentLabel(_to_complex(lb.y_dag_prime), _to_complex(lb.y_double_prime))
        value = forced_transformation(label, K, sc.omega, lb.t1, lb.t2, romberg=sc.romberg)
        free = free_transformation(label, sc.omega, lb.t1, lb.t2)
        unforced = forced_transformation(label, ComplexSignal.zeros(K.grid), sc.omega, lb.t1, lb.t2, romberg=sc.romberg)
        metrics["forced_re"], metrics["forced_im"] = value.real, value.imag
        metrics["free_re"], metrics["free_im"] = free.real, free.imag
        metrics["free_limit_err"] = abs(unforced - free)

    return Computation(metrics, header, rows, report)


def _to_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def _compute_keldysh(sc) -> Computation:
    K = _signal(sc.signal)
    init = InitialState.from_dict(sc.initial.model_dump())
    metrics: Dict[str, float] = {}
    report: Dict[str, Any] = {"initial": init.to_dict()}
    rows: List[List[Any]] = []

    same = KeldyshScenario(K, K, sc.omega)
    metrics["normalization_err"] = abs(time_cycle_functional(same) - 1.0)
    cycle = KeldyshScenario(K, K, sc.omega, init)

    if sc.shift is not None:
        cycle = displaced_pair(K, sc.omega, sc.shift, init)
        G = cycle_trace(cycle)
        metrics["generator_re"], metrics["generator_im"] = G.real, G.imag
        if init.kind == InitialKind.VACUUM:
            cross = displaced_cross_check(K, sc.omega, sc.shift)
            metrics["generator_closed_err"] = abs(G - complex(cross["closed_re"], cross["closed_im"]))
            metrics["direct_closed_err"] = cross["abs_err"]
            report["displaced_cross_check"] = cross
        elif init.kind == InitialKind.NUMBER:
            metrics["generator_closed_err"] = abs(G - number_state_generator(K, sc.omega, sc.shift, init.n))
        if sc.oracle:
            metrics["oracle_trace_err"] = abs(G - time_cycle_trace(cycle, sc.n_trunc, sc.substeps))

    if sc.oracle and init.kind in (InitialKind.THERMAL, InitialKind.COMPLEX_TAU):
        periodicity = periodicity_check(cycle, sc.n_trunc, sc.substeps)
        metrics["periodicity_err"] = periodicity["abs_err"]
        report["periodicity"] = periodicity

    if init.kind != InitialKind.COMPLEX_TAU:
        physical = KeldyshScenario(K, K, sc.omega, init)
        rep = moments(physical)
        metrics.update({"mean_n": rep.mean_n, "var_n": rep.var_n, "gamma_sq": rep.gamma_sq})
        report["moments"] = rep.to_dict()
        if sc.oracle:
            mean_o = observable_average(physical, Observable.DELTA_N, sc.n_trunc, substeps=sc.substeps)
            var_o = observable_average(physical, Observable.VAR_DELTA_N, sc.n_trunc, substeps=sc.substeps)
            metrics["oracle_mean_err"] = abs(rep.mean_n - mean_o)
            metrics["oracle_var_err"] = abs(rep.var_n - var_o)
            report["oracle"] = {"mean_n": mean_o, "var_n": var_o}

    if init.kind == InitialKind.VACUUM:
        inverted = generating_function_inversion(K, sc.omega, sc.n_max)
        g = metrics.get("gamma_sq", 0.0)
        reference = poisson.pmf(np.arange(sc.n_max + 1), g)
        metrics["inversion_err"] = float(np.max(np.abs(inverted - reference)))
        rows = [[n, float(reference[n]), float(inverted[n])] for n in range(sc.n_max + 1)]
        if sc.correlation is not None:
            fd = correlation_fd(same, sc.correlation.t, sc.correlation.t_prime)
            closed = correlation_closed_form(same, sc.correlation.t, sc.correlation.t_prime)
            metrics["correlation_err"] = abs(fd - closed)
            report["correlation"] = {"fd": _c(fd), "closed_form": _c(closed)}

    return Computation(metrics, ["n", "p_n", "p_n_inverted"] if rows else [], rows, report)


_ROUTE_METRIC = {"fock_oracle": "oracle_err", "lattice": "lattice_err", "spectral": "spectral_err"}

# 稠密格点格林函数只在这么多个点上构造
_GREENS_POINTS = 401


def _lattice_greens_check(grid: TimeGrid, omega: float) -> Tuple[float, float]:
    """(对角线以上的最大模，下三角与 −i e^{−iωτ} 的最大偏差)，取网格开头一段。"""
    head = TimeGrid(grid.t_start, grid.dt, min(grid.n, _GREENS_POINTS))
    G = lattice_greens(head, omega)
    tau = head.times[:, None] - head.times[None, :]
    continuum = np.where(tau >= 0, -1j * np.exp(-1j * omega * tau), 0.0)
    return float(np.max(np.abs(np.triu(G, k=1)))), float(np.max(np.abs(np.tril(G - continuum))))


def _compare(sc) -> Computation:
    """闭式 / Fock 对照 / 格点 / 频域 四条路线对同一个真空保持振幅。"""
    K = _signal(sc.signal)
    reference = vacuum_persistence(K, sc.omega)
    routes: List[Tuple[str, complex]] = [("closed_form", reference)]
    metrics: Dict[str, float] = {}
    report: Dict[str, Any] = {}

    if sc.oracle:
        prop = evolve(K, sc.omega, sc.n_trunc, sc.substeps)
        routes.append(("fock_oracle", complex(prop.U[0, 0])))
        report["fock_oracle"] = compare_report(reference, complex(prop.U[0, 0]), prop)
        metrics["oracle_leakage"] = report["fock_oracle"]["leakage"]
    if sc.lattice:
        if sc.dts:
            study = convergence_study(lambda dt: _resampled(sc.signal, dt), sc.omega, sc.dts, reference)
            finest = min(study["rows"], key=lambda r: r["param"])
            routes.append(("lattice", complex(finest["value_re"], finest["value_im"])))
            if study["order"] is not None:
                metrics["lattice_order"] = study["order"]
            report["lattice_convergence"] = study
        else:
            routes.append(("lattice", lattice_persistence(K, sc.omega)))
        causality, greens_err = _lattice_greens_check(K.grid, sc.omega)
        metrics["lattice_greens_causality"] = causality
        metrics["lattice_greens_err"] = greens_err
    if sc.spectral:
        f = sc.frequency
        fg = FrequencyGrid.around(sc.omega, f.half_width, f.n_nu)
        value, details = spectral_persistence(K, sc.omega, fg, f.epsilons, details=True)
        routes.append(("spectral", value))
        metrics["spectral_tail_bound"] = details["tail_bound"]
        eps = f.epsilons or get_section("path")["epsilons"]
        scan = epsilon_study(K, sc.omega, eps, reference, fg)
        if scan["order"] is not None:
            metrics["epsilon_order"] = scan["order"]
        report["spectral"] = details
        report["epsilon_scan"] = scan

    rows = []
    scale = abs(reference)
    for route, value in routes:
        err = abs(value - reference)
        rows.append([route, value.real, value.imag, err, err / scale if scale else math.nan])
        if route in _ROUTE_METRIC:
            metrics[_ROUTE_METRIC[route]] = err
    metrics["persistence_re"], metrics["persistence_im"] = reference.real, reference.imag
    return Computation(metrics, ["route", "value_re", "value_im", "abs_err", "rel_err"], rows, report)


def _compute_scatter(sc) -> Computation:
    V = _potential(sc.potential)
    grid = _space_grid(sc.grid)
    if sc.method == "field":
        results = [scattered_field(V, E, sc.mass, grid) for E in sc.energies]
    elif sc.method == "square_well":
        results = [square_well_amplitudes(V, E, sc.mass, sc.n_cells) for E in sc.energies]
    else:
        results = [scatter(V, E, sc.mass, grid) for E in sc.energies]
    metrics = {
        "t_sq": float(abs(results[0].t) ** 2),
        "r_sq": float(abs(results[0].r) ** 2),
        "max_unitarity_defect": max(r.unitarity_defect for r in results),
    }
    report: Dict[str, Any] = {"potential": V.to_dict()}
    if sc.transfer:
        errs = []
        for res in results:
            r_tm, t_tm = transfer_matrix(V, res.energy, sc.mass)
            errs.append(abs(t_tm - res.t))
        metrics["transfer_t_err"] = max(errs)
    if sc.born_orders:
        born = born_series(V, sc.energies[0], sc.mass, grid, sc.born_orders)
        metrics["born_converged"] = 1.0 if born["converged"] else 0.0
        report["born"] = {"ratios": born["ratios"], "converged": born["converged"]}
    table = [res.to_csv_row() for res in results]
    header = list(table[0])
    return Computation(metrics, header, [[row[h] for h in header] for row in table], report)


def _channel_check(spectrum, V: PotentialSpec, ch) -> Tuple[Dict[str, float], Dict[str, Any]]:
    """
    通道传播子代回 i∂_T G = −∂²_R G/2M + E_n G（中心差分），
    再对高斯波包 ψ 求通道有效源 K_n(R)。
    """
    R = np.asarray(ch.R, dtype=float)
    h, d = 1e-3 * ch.T, 1e-3

    def G(R_, T_):
        return channel_propagator(spectrum, ch.n, R_, T_)

    g = G(R, ch.T)
    dG_dT = (G(R, ch.T + h) - G(R, ch.T - h)) / (2 * h)
    d2G_dR2 = (G(R + d, ch.T) - 2 * g + G(R - d, ch.T)) / (d * d)
    E_n = float(spectrum.energies[ch.n])
    residual = 1j * dG_dT - (-d2G_dR2 / (2 * spectrum.total_mass) + E_n * g)

    x = spectrum.grid.positions
    psi = np.exp(-0.5 * (x / ch.packet_width) ** 2 + 1j * ch.packet_momentum * x)
    K_n = np.atleast_1d(effective_channel_source(spectrum, ch.n, V, x, psi, R))
    metrics = {
        "channel_equation_residual": float(np.max(np.abs(residual)) / np.max(np.abs(g))),
        "channel_source_max": float(np.max(np.abs(K_n))),
    }
    report = {
        "n": ch.n,
        "E_n": E_n,
        "T": ch.T,
        "R": R.tolist(),
        "propagator": [_c(z) for z in g],
        "effective_source": [_c(z) for z in K_n],
    }
    return metrics, report


def _compute_bound_states(sc) -> Computation:
    V = _potential(sc.potential)
    grid = _space_grid(sc.grid)
    spectrum = bound_state_channels(V, sc.mass, grid, sc.n_states)
    E = spectrum.energies
    metrics: Dict[str, float] = {f"E_{n}": float(e) for n, e in enumerate(E[: min(len(E), 10)])}
    metrics["n_bound"] = float(np.sum(E < 0))
    if V.kind == PotentialKind.HARMONIC:
        n = np.arange(min(len(E), 6))
        metrics["harmonic_max_err"] = float(np.max(np.abs(E[: n.shape[0]] - (n + 0.5) * V.omega_r)))
    if sc.n_states is None:
        metrics["completeness_defect"] = spectrum.completeness_defect()
    report: Dict[str, Any] = {"potential": V.to_dict(), "reduced_mass": spectrum.reduced_mass}
    if sc.channel is not None:
        channel_metrics, report["channel"] = _channel_check(spectrum, V, sc.channel)
        metrics.update(channel_metrics)
    rows = [[row["n"], row["E_n"], int(row["bound"])] for row in spectrum.to_dict()]
    return Computation(metrics, ["n", "E_n", "bound"], rows, report)


def _compute_algebra(sc) -> Computation:
    report = verification_report()
    metrics = {name: 0.0 if entry["pass"] else 1.0 for name, entry in report.items()}
    metrics["n_failed"] = float(sum(metrics.values()))
    rows = [[name, int(entry["pass"])] for name, entry in report.items()]
    return Computation(metrics, ["check", "pass"], rows, report)


def _compute_classical(sc) -> Computation:
    period = None
    if sc.kepler is not None:
        kp = sc.kepler
        system = kepler_orbit(kp.e, kp.a, kp.k, kp.m)
        period = kepler_period(kp.a, kp.k, kp.m)
        dt = period / sc.steps_per_period
        steps = int(round(sc.periods * sc.steps_per_period))
    else:
        system = system_from_spec(sc.system.model_dump())
        dt, steps = sc.dt, sc.steps
    traj = integrate(system, dt, steps)
    cons = conservation_report(traj)
    metrics = {f"{k}_drift" if k != "momentum_per_step" else k: v for k, v in cons.to_dict().items()}
    metrics["energy_trend_ratio"] = energy_trend(traj)["ratio"]
    report: Dict[str, Any] = {"conservation": cons.to_dict()}
    if period is not None and sc.periods > 1:
        measured = orbital_period(traj)
        metrics["period_err"] = abs(measured - period) / period
        report["period"] = {"kepler": period, "measured": measured}

    bound = system.potential.kind != "free"
    if bound:
        virial = virial_average(traj)
        metrics["two_T"], metrics["r_dV"], metrics["virial_residual"] = virial
        if system.n_particles == 1 or (system.mode == "pairwise" and system.n_particles == 2):
            fine = fine_structure_average(traj)
            metrics["fine_lhs"], metrics["fine_rhs"], metrics["fine_structure_residual"] = fine
    if sc.convergence and period is not None:
        conv = average_convergence(traj, period)
        metrics["virial_slope"] = conv["virial_slope"]
        metrics["fine_structure_slope"] = conv["fine_structure_slope"]
        report["convergence"] = conv
    return Computation(metrics, traj.csv_header(), traj.to_csv_rows(sc.csv_stride), report)


def _split_source(K: SpaceTimeSource, t_split: float) -> Tuple[SpaceTimeSource, SpaceTimeSource]:
    """t ≤ t_split 的部分与其余部分，共用同一时空网格。"""
    before = K.t_grid.times <= t_split
    early = SpaceTimeSource(K.x_grid, K.t_grid, np.where(before, K.samples, 0.0), K.mass)
    late = SpaceTimeSource(K.x_grid, K.t_grid, np.where(before, 0.0, K.samples), K.mass)
    return early, late


def _compute_source(sc) -> Computation:
    s = sc.source
    K = gaussian_source(
        _space_grid(s.x_grid),
        _time_grid(s.t_grid),
        sc.mass,
        _to_complex(s.amplitude),
        s.x0,
        s.sigma_x,
        s.t0,
        s.sigma_t,
        s.momentum,
    )
    ps = default_momenta(K.x_grid)
    cells = momentum_cells(K, ps)
    lam = np.array([c.intensity for c in cells])
    P = vacuum_persistence_st(K, ps)
    metrics = {
        "mean_particles": float(lam.sum()),
        "persistence_modulus_err": abs(abs(P) ** 2 - math.exp(-lam.sum())),
        "field_equation_residual": field_equation_residual(K, ps),
    }

    pattern = OccupationPattern(sc.pattern)
    amp = multi_particle_amplitude(pattern, K, ps)
    counts = np.zeros(len(cells), dtype=int)
    for idx, n in pattern.counts.items():
        counts[idx] = n
    metrics["multi_particle_err"] = abs(abs(amp) ** 2 - float(np.prod(poisson.pmf(counts, lam))))

    k_peak = cells[int(np.argmax(lam))].K_p
    ratios = [abs(stimulated_amplitude(k_peak, n) / (-1j * k_peak)) - math.sqrt(n + 1) for n in range(sc.stimulated_n + 1)]
    metrics["stimulated_err"] = float(np.max(np.abs(ratios)))

    kernel = on_shell_combination_residual(np.linspace(-2.0, 2.0, 41), np.linspace(0.5, 1.5, 41), sc.mass)
    metrics["on_shell_kernel_mismatch"] = kernel["kernel_mismatch"]

    rows = [[c.p, c.weight, c.K_p.real, c.K_p.imag, c.intensity] for c in cells]
    report = {"persistence": _c(P), "multi_particle_amplitude": _c(amp), "on_shell": kernel}

    probability = probability_report(K, sc.n_max, ps)
    metrics["covered_probability"] = probability["covered_probability"]
    report["probability"] = probability

    xs = np.linspace(K.x_grid.x_start, K.x_grid.x_end, sc.field_points)
    pair_field = two_particle_field(K, xs, K.t_grid.t_end, ps)
    metrics["two_particle_symmetry_err"] = float(np.max(np.abs(pair_field - pair_field.T)))
    report["two_particle_field_diagonal"] = [_c(z) for z in np.diag(pair_field)]

    if sc.split is not None:
        early, late = _split_source(K, sc.split)
        cross = causal_cross_term(early, late, ps)
        product = vacuum_persistence_st(early, ps) * vacuum_persistence_st(late, ps) * cross
        metrics["causal_factorization_err"] = abs(P - product)
        report["causal_cross_term"] = _c(cross)

    return Computation(metrics, ["p", "w_p", "K_p_re", "K_p_im", "intensity"], rows, report)


_COMPUTE: Dict[str, Callable[[Any], Computation]] = {
    "oscillator": _compute_oscillator,
    "keldysh": _compute_keldysh,
    "oracle-compare": _compare,
    "path-integral": _compare,
    "scatter": _compute_scatter,
    "bound-states": _compute_bound_states,
    "algebra": _compute_algebra,
    "classical": _compute_classical,
    "source": _compute_source,
}


# ── check / write ────────────────────────────────────────────────────────
def evaluate_checks(sc, metrics: Dict[str, float], tolerance_scale: float = 1.0) -> List[Check]:
    missing = [m for m in sc.acceptance if m not in metrics]
    if missing:
        raise ScenarioError("acceptance names metrics this scenario does not produce", {"missing": missing, "available": sorted(metrics)})
    checks = []
    for metric in sorted(sc.acceptance):
        tol = sc.acceptance[metric] * tolerance_scale
        expected = float(sc.targets.get(metric, 0.0))
        value = float(metrics[metric])
        checks.append(Check(metric, value, expected, tol, math.isfinite(value) and abs(value - expected) <= tol))
    return checks


def render_outcome(outcome: Outcome, fmt: str) -> str:
    comp = outcome.computation
    if fmt == "csv":
        if comp.rows:
            return render_csv(comp.header, comp.rows)
        return render_csv(["metric", "value"], [[k, comp.metrics[k]] for k in sorted(comp.metrics)])
    payload: Dict[str, Any] = {
        "name": outcome.name,
        "kind": outcome.kind,
        "metrics": comp.metrics,
        "checks": [c.to_dict() for c in outcome.checks],
        "report": comp.report,
    }
    if comp.rows:
        payload["table"] = {"header": comp.header, "rows": comp.rows}
    if get_section("cli")["write_metadata"]:
        payload["metadata"] = {"generated_at": datetime.datetime.now().isoformat()}
    return render_json(payload)


def build_task(sc, out_dir: pathlib.Path, tolerance_scale: float = 1.0) -> ScenarioTask:
    task = ScenarioTask(sc.name)
    out_dir = pathlib.Path(out_dir)
    target = out_dir / (sc.output.path or f"{sc.name}.{sc.output.format}")

    def load():
        # 输出路径必须落在 --out 目录内
        resolved = target.resolve()
        if not resolved.is_relative_to(out_dir.resolve()):
            raise ScenarioError("output path escapes the output directory", {"path": str(target)})
        log.info(f"scenario loaded: {sc.kind}", extra={"payload": {"output": str(resolved)}})
        return sc

    @trace_action("cli", "scenario_compute")
    def compute(model):
        return model, _COMPUTE[model.kind](model)

    def check(state):
        model, comp = state
        return Outcome(model.name, model.kind, comp, evaluate_checks(model, comp.metrics, tolerance_scale))

    def write(outcome: Outcome):
        outcome.path = write_atomic(target, render_outcome(outcome, sc.output.format))
        return outcome

    return task.add_step("load", load).add_step("compute", compute).add_step("check", check).add_step("write", write)
