#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
场景文件的 pydantic 模型：按 kind 区分，计算开始前完成全部校验。

公共字段：
  name        场景名（同时用作日志 trace id 和缺省输出文件名）
  acceptance  {指标名: 容差}；|值 − 期望| ≤ 容差 × tolerance_scale 视为通过
  targets     {指标名: 期望值}；缺省期望为 0（误差类指标）
  output      {path, format}；format 为 csv 或 json
"""

import json
import math
import pathlib
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from engine.utils.errors import ScenarioError

ComplexLike = Union[float, Tuple[float, float]]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ── 公共片段 ─────────────────────────────────────────────────────────────
class OutputSpec(_Model):
    path: Optional[str] = Field(None, description="相对 --out 目录的文件名，缺省为 <name>.<format>")
    format: Literal["csv", "json"] = "json"


class TimeGridSpec(_Model):
    t_start: float = 0.0
    dt: Optional[float] = Field(None, gt=0)
    t_end: Optional[float] = None
    n: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _one_of(self):
        if (self.dt is None) == (self.t_end is None):
            raise ValueError("grid needs exactly one of 'dt' or 't_end'")
        if self.t_end is not None and self.t_end <= self.t_start:
            raise ValueError("t_end must exceed t_start")
        return self

    @property
    def span(self) -> float:
        if self.t_end is not None:
            return self.t_end - self.t_start
        return self.dt * (self.n - 1)


class ShapeSpec(_Model):
    kind: Literal["square", "gaussian", "samples", "impulse", "zero"] = "square"
    amplitude: ComplexLike = 1.0
    t_on: Optional[float] = None
    t_off: Optional[float] = None
    center: Optional[float] = None
    width: Optional[float] = Field(None, gt=0)
    carrier: Optional[float] = None
    values: Optional[List[ComplexLike]] = None


class SignalSpec(ShapeSpec):
    grid: TimeGridSpec
    add: List[ShapeSpec] = Field(default_factory=list, description="同一网格上叠加的形状")
    scale: Optional[ComplexLike] = None
    pad: Optional[Tuple[Annotated[int, Field(ge=0)], Annotated[int, Field(ge=0)]]] = None

    @model_validator(mode="after")
    def _samples_fit(self):
        for shape in (self, *self.add):
            if shape.kind == "samples":
                if shape.values is None or len(shape.values) != self.grid.n:
                    raise ValueError("samples signal needs 'values' with one entry per grid node")
        return self

    def as_dict(self) -> dict:
        return self.model_dump(exclude_none=True)


class InitialSpec(_Model):
    type: Literal["vacuum", "number", "thermal", "complex_tau"] = "vacuum"
    n: int = Field(0, ge=0)
    beta: float = Field(math.inf, ge=0)
    tau: Tuple[float, float] = (0.0, -1.0)


class SpaceGridSpec(_Model):
    x_start: float
    x_end: float
    n: int = Field(..., ge=3)

    @model_validator(mode="after")
    def _ordered(self):
        if self.x_end <= self.x_start:
            raise ValueError("x_end must exceed x_start")
        return self


class PotentialModel(_Model):
    kind: Literal["delta", "square_well", "harmonic", "custom"]
    strength: float = 0.0
    depth: float = 0.0
    width: float = Field(0.0, ge=0)
    center: float = 0.0
    omega_r: float = Field(0.0, ge=0)
    values: Optional[List[float]] = None


class _Scenario(_Model):
    name: str = Field(..., min_length=1, pattern=r"^[A-Za-z0-9_.-]+$")
    acceptance: Dict[str, float] = Field(default_factory=dict)
    targets: Dict[str, float] = Field(default_factory=dict)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("acceptance")
    @classmethod
    def _non_negative(cls, v: Dict[str, float]):
        for key, tol in v.items():
            if not tol >= 0:
                raise ValueError(f"tolerance for '{key}' must be non-negative")
        return v


# ── 各 kind ───────────────────────────────────────────────────────────────
class CoherentLabelSpec(_Model):
    y_dag_prime: ComplexLike = 0.0
    y_double_prime: ComplexLike = 0.0
    t1: float
    t2: float


class OscillatorScenario(_Scenario):
    kind: Literal["oscillator"]
    signal: SignalSpec
    omega: float = Field(..., gt=0)
    n_max: int = Field(10, ge=0)
    romberg: Optional[bool] = None
    oracle: bool = False
    n_trunc: int = Field(64, ge=2, le=256)
    substeps: int = Field(1, ge=1)
    label: Optional[CoherentLabelSpec] = None


class CorrelationSpec(_Model):
    t: float
    t_prime: float


class KeldyshScenarioModel(_Scenario):
    kind: Literal["keldysh"]
    signal: SignalSpec
    omega: float = Field(..., gt=0)
    initial: InitialSpec = Field(default_factory=InitialSpec)
    shift: Optional[float] = Field(None, description="位移对的 T；缺省不计算生成函数")
    n_max: int = Field(10, ge=0)
    oracle: bool = False
    n_trunc: int = Field(64, ge=2, le=256)
    substeps: int = Field(1, ge=1)
    correlation: Optional[CorrelationSpec] = None


class FrequencySpec(_Model):
    half_width: Optional[float] = Field(None, gt=0)
    n_nu: Optional[int] = Field(None, ge=2)
    epsilons: Optional[List[float]] = None

    @field_validator("epsilons")
    @classmethod
    def _positive(cls, v):
        if v is not None and (len(v) == 0 or any(not e > 0 for e in v)):
            raise ValueError("epsilons must be a non-empty list of positive numbers")
        return v


class _CompareScenario(_Scenario):
    signal: SignalSpec
    omega: float = Field(..., gt=0)
    n_trunc: int = Field(64, ge=2, le=256)
    substeps: int = Field(1, ge=1)
    dts: List[float] = Field(default_factory=list, description="格点路线收敛研究的步长")
    frequency: FrequencySpec = Field(default_factory=FrequencySpec)

    @field_validator("dts")
    @classmethod
    def _steps(cls, v):
        if any(not d > 0 for d in v):
            raise ValueError("dts must be positive")
        return v


class OracleCompareScenario(_CompareScenario):
    kind: Literal["oracle-compare"]
    oracle: bool = True
    lattice: bool = False
    spectral: bool = False


class PathIntegralScenario(_CompareScenario):
    kind: Literal["path-integral"]
    oracle: bool = False
    lattice: bool = True
    spectral: bool = True


class ScatterScenario(_Scenario):
    kind: Literal["scatter"]
    potential: PotentialModel
    mass: float = Field(..., gt=0)
    energies: List[float] = Field(..., min_length=1)
    grid: SpaceGridSpec
    method: Literal["t_matrix", "field", "square_well"] = "t_matrix"
    n_cells: int = Field(100, ge=2, description="square_well 方法的阱内格点数（粗网格）")
    transfer: bool = False
    born_orders: int = Field(0, ge=0)

    @field_validator("energies")
    @classmethod
    def _positive(cls, v):
        if any(not e > 0 for e in v):
            raise ValueError("scattering energies must be positive")
        return v

    @model_validator(mode="after")
    def _well_method(self):
        if self.method == "square_well" and self.potential.kind != "square_well":
            raise ValueError("method 'square_well' needs a square-well potential")
        return self


class ChannelSpec(_Model):
    n: int = Field(0, ge=0)
    T: float = Field(1.0, gt=0)
    R: List[float] = Field(default_factory=lambda: [-1.0, 0.0, 1.0], min_length=1)
    packet_width: float = Field(1.0, gt=0, description="单粒子高斯波包 ψ 的宽度")
    packet_momentum: float = 0.0


class BoundStatesScenario(_Scenario):
    kind: Literal["bound-states"]
    potential: PotentialModel
    mass: float = Field(..., gt=0)
    grid: SpaceGridSpec
    n_states: Optional[int] = Field(None, ge=1)
    channel: Optional[ChannelSpec] = None


class AlgebraScenario(_Scenario):
    kind: Literal["algebra"]


class KeplerSpec(_Model):
    e: float = Field(..., ge=0, lt=1)
    a: float = Field(1.0, gt=0)
    k: float = Field(1.0, gt=0)
    m: float = Field(1.0, gt=0)


class ClassicalPotentialSpec(_Model):
    kind: Literal["free", "coulomb", "harmonic", "power"] = "free"
    coupling: float = 1.0
    exponent: float = 1.0


class MechSystemSpec(_Model):
    masses: List[float] = Field(..., min_length=1)
    positions: List[List[float]]
    momenta: List[List[float]]
    potential: ClassicalPotentialSpec = Field(default_factory=ClassicalPotentialSpec)
    mode: Literal["central", "pairwise"] = "central"


class ClassicalScenario(_Scenario):
    kind: Literal["classical"]
    kepler: Optional[KeplerSpec] = None
    system: Optional[MechSystemSpec] = None
    dt: Optional[float] = Field(None, gt=0)
    steps_per_period: Optional[int] = Field(None, ge=8)
    steps: Optional[int] = Field(None, ge=1)
    periods: Optional[float] = Field(None, gt=0)
    convergence: bool = False
    csv_stride: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _one_system(self):
        if (self.kepler is None) == (self.system is None):
            raise ValueError("classical scenario needs exactly one of 'kepler' or 'system'")
        if self.system is not None and (self.dt is None or self.steps is None):
            raise ValueError("explicit systems need 'dt' and 'steps'")
        if self.kepler is not None and (self.steps_per_period is None or self.periods is None):
            raise ValueError("Kepler scenarios need 'steps_per_period' and 'periods'")
        return self


class SpaceTimeSourceSpec(_Model):
    x_grid: SpaceGridSpec
    t_grid: TimeGridSpec
    amplitude: ComplexLike = 1.0
    x0: float = 0.0
    sigma_x: float = Field(1.0, gt=0)
    t0: Optional[float] = None
    sigma_t: float = Field(1.0, gt=0)
    momentum: float = 0.0


class SourceScenario(_Scenario):
    kind: Literal["source"]
    source: SpaceTimeSourceSpec
    mass: float = Field(..., gt=0)
    n_max: int = Field(8, ge=0)
    pattern: Dict[int, int] = Field(default_factory=dict)
    stimulated_n: int = Field(5, ge=0)
    split: Optional[float] = Field(None, description="把源在该时刻切成先后两段，检查因果分解")
    field_points: int = Field(9, ge=1, description="两粒子场取样的空间点数")


Scenario = Annotated[
    Union[
        OscillatorScenario,
        KeldyshScenarioModel,
        OracleCompareScenario,
        PathIntegralScenario,
        ScatterScenario,
        BoundStatesScenario,
        AlgebraScenario,
        ClassicalScenario,
        SourceScenario,
    ],
    Field(discriminator="kind"),
]

_ADAPTER = TypeAdapter(Scenario)

COMPARE_KINDS = ("oracle-compare", "path-integral")


def parse_scenario(data: dict):
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as e:
        raise ScenarioError("scenario does not match the schema", {"errors": json.loads(e.json(include_url=False))}) from e


def load_scenario(path) -> "_Scenario":
    path = pathlib.Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ScenarioError("scenario file not found", {"path": str(path)}) from e
    except json.JSONDecodeError as e:
        raise ScenarioError("scenario file is not valid JSON", {"path": str(path), "line": e.lineno, "error": e.msg}) from e
    if not isinstance(data, dict):
        raise ScenarioError("scenario root must be an object", {"path": str(path)})
    return parse_scenario(data)
