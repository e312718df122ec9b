"""Run configuration: pydantic models, JSON loading and flag overrides.

Precedence is flag > file > default. Unknown keys are rejected and
validation failures name the dotted key path.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .dynamics import PropagationConfig, Schedule
from .hilbert import SpaceSpec
from .params import SystemParams
from .protocol import StorageTask

GHZ_HINT = "frequencies are in MHz (angular, rad/µs); did you pass GHz?"


class ConfigError(Exception):
    pass


class EmptyGrid(ConfigError):
    pass


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SystemConfig(_Section):
    g: float = Field(20.0, ge=0)
    zeta: float = Field(20.0, ge=0)
    omega: float = 6044.0
    omega_a: float = 5844.0
    omega_c: Optional[float] = None
    omega_f: Optional[float] = None
    xi: Optional[float] = None
    n_molecules: Optional[int] = Field(None, ge=1)

    @field_validator("omega", "omega_a")
    @classmethod
    def _mhz_only(cls, v: float) -> float:
        if v < 100.0:
            raise ValueError(f"{v} looks like GHz; {GHZ_HINT}")
        return v

    @model_validator(mode="after")
    def _frequency_matching(self) -> "SystemConfig":
        if self.omega_c is not None and self.omega_f is not None:
            if abs(self.omega_a - (self.omega_c + self.omega_f)) > 1e-9:
                raise ValueError("omega_a must equal omega_c + omega_f")
        return self

    @model_validator(mode="after")
    def _collective_coupling(self) -> "SystemConfig":
        if self.xi is None or self.n_molecules is None:
            return self
        collective = self.xi * math.sqrt(self.n_molecules)
        if "zeta" not in self.model_fields_set:
            self.zeta = collective
        elif abs(self.zeta - collective) > 1e-9 * max(1.0, self.zeta):
            raise ValueError(f"zeta = {self.zeta} does not match xi * sqrt(n_molecules) = {collective}")
        return self

    def to_params(self) -> SystemParams:
        return SystemParams(**self.model_dump())


class SpaceConfig(_Section):
    n_cavity: int = Field(2, ge=2)
    n_A: int = Field(2, ge=2)
    n_C: int = Field(2, ge=2)

    def to_spec(self) -> SpaceSpec:
        return SpaceSpec(self.n_cavity, self.n_A, self.n_C)


class ScheduleConfig(_Section):
    ramp: Literal["linear", "cosine"] = "cosine"
    duration_us: float = Field(100.0, gt=0)
    omega_start: float = 30.0
    omega_end: float = 0.0
    n_samples: int = Field(401, ge=2)

    def to_schedule(self) -> Schedule:
        return Schedule(
            omega_start=self.omega_start,
            omega_end=self.omega_end,
            duration=self.duration_us,
            ramp=self.ramp,
            n_samples=self.n_samples,
        )


class GridConfig(_Section):
    omega_min: float = 0.0
    omega_max: float = 30.0
    steps: int = 30
    values: Optional[List[float]] = None

    def omegas(self) -> List[float]:
        if self.values is not None:
            if not self.values:
                raise EmptyGrid("grid.values is empty")
            return [float(v) for v in self.values]
        if self.steps < 1:
            raise EmptyGrid(f"grid.steps must be at least 1, got {self.steps}")
        if self.omega_max < self.omega_min:
            raise EmptyGrid(f"grid.omega_max {self.omega_max} is below grid.omega_min {self.omega_min}")
        return np.linspace(self.omega_min, self.omega_max, self.steps + 1).tolist()


class StorageConfig(_Section):
    model: Literal["effective", "full"] = "effective"
    gamma: Optional[float] = None
    delta_abs: float = Field(1.0, ge=0, le=1)
    delta_phase: float = 0.0
    retrieve: bool = False
    sudden: bool = False
    dress_initial: bool = True

    @model_validator(mode="after")
    def _normalized(self) -> "StorageConfig":
        # unset gamma is derived from |delta|
        if self.gamma is not None and abs(self.gamma**2 + self.delta_abs**2 - 1.0) > 1e-9:
            raise ValueError("gamma^2 + delta_abs^2 must be 1")
        return self


class ToleranceConfig(_Section):
    rtol: float = Field(1e-10, gt=0)
    atol: float = Field(1e-12, gt=0)
    validity_threshold: float = Field(0.2, gt=0)
    resonance_tol: float = Field(1e-9, gt=0)

    def to_propagation(self) -> PropagationConfig:
        return PropagationConfig(rtol=self.rtol, atol=self.atol)


class VerifyConfig(_Section):
    max_molecules: int = Field(4, ge=1, le=4)
    sweep_step: float = Field(5.0, gt=0)
    eta_perturbation: float = 0.0

    def omegas(self, omega_max: float) -> List[float]:
        n = int(math.floor(omega_max / self.sweep_step + 1e-9))
        return [k * self.sweep_step for k in range(n + 1)]


class RunConfig(_Section):
    system: SystemConfig = Field(default_factory=SystemConfig)
    space: SpaceConfig = Field(default_factory=SpaceConfig)
    schedule: ScheduleConfig = Field(default_factory=ScheduleConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    storage: StorageConfig = Field(default_factory=StorageConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    out_dir: str = "out"

    def storage_task(self) -> StorageTask:
        s = self.storage
        delta = s.delta_abs * complex(math.cos(s.delta_phase), math.sin(s.delta_phase))
        gamma = s.gamma if s.gamma is not None else math.sqrt(max(0.0, 1.0 - s.delta_abs**2))
        task = StorageTask(
            gamma=gamma,
            delta=delta,
            schedule=self.schedule.to_schedule(),
            model=s.model,
            spec=self.space.to_spec(),
            params=self.system.to_params(),
            config=self.tolerances.to_propagation(),
            dress_initial=s.dress_initial,
            resonance_tol=self.tolerances.resonance_tol,
        )
        return task.sudden() if s.sudden else task


def _describe(err: ValidationError) -> str:
    parts = []
    for e in err.errors():
        path = ".".join(str(x) for x in e["loc"]) or "<root>"
        parts.append(f"{path}: {e['msg']}")
    return "; ".join(parts)


def _set_path(data: Dict[str, Any], dotted: str, value: Any) -> None:
    node = data
    keys = dotted.split(".")
    for k in keys[:-1]:
        nxt = node.setdefault(k, {})
        if not isinstance(nxt, dict):
            raise ConfigError(f"{dotted}: {k} is not a section")
        node = nxt
    node[keys[-1]] = value


def load_config(
    path: Optional[str | Path] = None, overrides: Optional[Mapping[str, Any]] = None
) -> RunConfig:
    """Build a RunConfig from an optional JSON file plus dotted-key overrides.

    ``overrides`` maps paths such as ``"grid.omega_max"`` to values; ``None``
    values are skipped so unset CLI flags fall through to the file.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must hold a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            _set_path(data, key, value)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_describe(exc)) from exc
