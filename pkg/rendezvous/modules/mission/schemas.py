from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rendezvous.modules.discretization.schemas import AnomalyGrid, ControlSchedule, validate_input_model
from rendezvous.modules.irls.schemas import IrlsConfig, IrlsReport
from rendezvous.modules.orbit.schemas import CONTROL_DIM, STATE_DIM, OrbitParams

LENGTH_UNITS = {"m": 1.0, "km": 1000.0}
VELOCITY_UNITS = {"m/s": 1.0, "km/s": 1000.0}
SOLVER_MODES = {"l1", "l21"}

# Index positions of the reduced state vectors inside [x y z xdot ydot zdot].
IN_PLANE_AXES = (0, 2, 3, 5)
OUT_OF_PLANE_AXES = (1, 4)


def validate_solver_mode(value: str) -> str:
    normalized = value.strip().lower()
    if normalized not in SOLVER_MODES:
        raise ValueError(f"Invalid solver mode: {value}")
    return normalized


class UnitsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    length: str = "m"
    velocity: str = "m/s"
    orbit_length: str = "km"

    @field_validator("length", "orbit_length")
    @classmethod
    def validate_length(cls, value: str) -> str:
        normalized = value.strip().lower()
        if normalized not in LENGTH_UNITS:
            raise ValueError(f"Invalid length unit: {value}")
        return normalized

    @field_validator("velocity")
    @classmethod
    def validate_velocity(cls, value: str) -> str:
        normalized = value.strip().lower()
        if normalized not in VELOCITY_UNITS:
            raise ValueError(f"Invalid velocity unit: {value}")
        return normalized

    def state_factors(self) -> np.ndarray:
        return np.array([LENGTH_UNITS[self.length]] * 3 + [VELOCITY_UNITS[self.velocity]] * 3)


class OrbitConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: float = Field(gt=0)
    e: float = Field(ge=0, lt=1)
    mu: Optional[float] = Field(default=None, gt=0)


class ReferenceValues(BaseModel):
    """Published figures a run is compared against."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    published: Optional[float] = Field(default=None, gt=0)
    baseline: Optional[float] = Field(default=None, gt=0)

    def gaps(self, achieved: float) -> Dict[str, Any]:
        block: Dict[str, Any] = {"published": self.published, "baseline": self.baseline}
        block["gap_to_published"] = (achieved - self.published) / self.published if self.published else None
        block["gap_to_baseline"] = (achieved - self.baseline) / self.baseline if self.baseline else None
        return block


def embed_state(values: List[float]) -> np.ndarray:
    """6 components as given; 4 are in-plane (x, z, xdot, zdot); 2 are out-of-plane (y, ydot)."""
    state = np.zeros(STATE_DIM)
    if len(values) == STATE_DIM:
        state[:] = values
    elif len(values) == len(IN_PLANE_AXES):
        state[list(IN_PLANE_AXES)] = values
    elif len(values) == len(OUT_OF_PLANE_AXES):
        state[list(OUT_OF_PLANE_AXES)] = values
    else:
        raise ValueError(f"state needs 6, 4 (in-plane) or 2 (out-of-plane) components, got {len(values)}")
    return state


class MissionDocument(BaseModel):
    """Mission config as written by a user: JSON file or preset entry."""

    model_config = ConfigDict(extra="forbid")

    name: str = "mission"
    description: Optional[str] = None
    units: UnitsConfig = UnitsConfig()
    orbit: OrbitConfig
    nu0: float
    nuf: float
    N: int = Field(ge=1)
    x0: List[float]
    xf: List[float] = Field(default_factory=lambda: [0.0] * STATE_DIM)
    solver_mode: str = "l1"
    input_model: str = "impulsive"
    impulse_threshold: float = Field(default=1e-3, gt=0, lt=1)
    irls: IrlsConfig = IrlsConfig()
    reference: Dict[str, ReferenceValues] = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def validate_name(cls, value: str) -> str:
        cleaned = value.strip()
        if not cleaned or any(ch in cleaned for ch in "/\\"):
            raise ValueError("name must be non-empty and free of path separators")
        return cleaned

    @field_validator("x0", "xf")
    @classmethod
    def validate_state(cls, value: List[float]) -> List[float]:
        if not all(math.isfinite(v) for v in value):
            raise ValueError("state components must be finite")
        embed_state(value)
        return value

    @field_validator("solver_mode")
    @classmethod
    def validate_mode(cls, value: str) -> str:
        return validate_solver_mode(value)

    @field_validator("input_model")
    @classmethod
    def validate_input(cls, value: str) -> str:
        return validate_input_model(value)

    @field_validator("reference")
    @classmethod
    def validate_reference(cls, value: Dict[str, ReferenceValues]) -> Dict[str, ReferenceValues]:
        for mode in value:
            validate_solver_mode(mode)
        return value

    @model_validator(mode="after")
    def validate_span(self) -> "MissionDocument":
        if not self.nuf > self.nu0:
            raise ValueError(f"nuf ({self.nuf}) must exceed nu0 ({self.nu0})")
        return self

    def to_spec(self) -> "MissionSpec":
        factors = self.units.state_factors()
        orbit_kwargs: Dict[str, float] = {"a": self.orbit.a * LENGTH_UNITS[self.units.orbit_length], "e": self.orbit.e}
        if self.orbit.mu is not None:
            orbit_kwargs["mu"] = self.orbit.mu
        return MissionSpec(
            name=self.name,
            orbit=OrbitParams(**orbit_kwargs),
            nu0=self.nu0,
            nuf=self.nuf,
            N=self.N,
            x0_physical=tuple(float(v) for v in embed_state(self.x0) * factors),
            xf_physical=tuple(float(v) for v in embed_state(self.xf) * factors),
            solver_mode=self.solver_mode,
            input_model=self.input_model,
            impulse_threshold=self.impulse_threshold,
            irls=self.irls,
            reference=self.reference,
        )


class MissionSpec(BaseModel):
    """Resolved mission in SI units: m, m/s, radians."""

    model_config = ConfigDict(frozen=True)

    name: str = "mission"
    orbit: OrbitParams
    nu0: float
    nuf: float
    N: int = Field(ge=1)
    x0_physical: Tuple[float, float, float, float, float, float]
    xf_physical: Tuple[float, float, float, float, float, float] = (0.0,) * STATE_DIM
    solver_mode: str = "l1"
    input_model: str = "impulsive"
    impulse_threshold: float = Field(default=1e-3, gt=0, lt=1)
    irls: IrlsConfig = IrlsConfig()
    reference: Dict[str, ReferenceValues] = Field(default_factory=dict)

    @field_validator("solver_mode")
    @classmethod
    def validate_mode(cls, value: str) -> str:
        return validate_solver_mode(value)

    @field_validator("input_model")
    @classmethod
    def validate_input(cls, value: str) -> str:
        return validate_input_model(value)

    @model_validator(mode="after")
    def validate_span(self) -> "MissionSpec":
        if not self.nuf > self.nu0:
            raise ValueError(f"nuf ({self.nuf}) must exceed nu0 ({self.nu0})")
        return self

    def grid(self) -> AnomalyGrid:
        return AnomalyGrid(nu0=self.nu0, nuf=self.nuf, N=self.N)

    def with_overrides(self, irls: Optional[Dict[str, Any]] = None, **fields: Any) -> "MissionSpec":
        """Copy with top-level fields replaced and IRLS options merged; None values are ignored."""
        data = self.model_dump()
        data.update({key: value for key, value in fields.items() if value is not None})
        irls_data = self.irls.model_dump()
        irls_data.update({key: value for key, value in (irls or {}).items() if value is not None})
        data["irls"] = irls_data
        return MissionSpec.model_validate(data)


@dataclass(frozen=True, eq=False)
class Impulse:
    nu: float
    k: int
    dv: np.ndarray
    magnitude: float

    def to_dict(self) -> Dict[str, Any]:
        return {"nu": self.nu, "k": self.k, "dv": [float(v) for v in self.dv], "mag": self.magnitude}


@dataclass(frozen=True)
class ImpulseTable:
    entries: Tuple[Impulse, ...] = ()
    threshold: float = 1e-3

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def channel_count(self, axis: int, relative: Optional[float] = None) -> int:
        """Entries whose |dv[axis]| exceeds the threshold times the largest impulse magnitude."""
        if not 0 <= axis < CONTROL_DIM:
            raise IndexError(f"axis {axis} outside [0, {CONTROL_DIM})")
        if not self.entries:
            return 0
        values = np.array([abs(entry.dv[axis]) for entry in self.entries])
        largest = max(entry.magnitude for entry in self.entries)
        cut = (relative if relative is not None else self.threshold) * largest
        return int(np.count_nonzero(values > cut))

    def dominant(self) -> Optional[Impulse]:
        if not self.entries:
            return None
        return max(self.entries, key=lambda entry: entry.magnitude)

    def to_list(self) -> List[Dict[str, Any]]:
        return [entry.to_dict() for entry in self.entries]


@dataclass(eq=False)
class RunArtifacts:
    spec: MissionSpec
    report: IrlsReport
    schedule: ControlSchedule
    nodes: np.ndarray
    physical_states: np.ndarray  # (N+1, 6)
    tilde_states: np.ndarray  # (N+1, 6)
    impulses: ImpulseTable
    summary: Dict[str, Any] = field(default_factory=dict)
    output_dir: Optional[Path] = None

    @property
    def succeeded(self) -> bool:
        return self.report.succeeded


@dataclass(frozen=True)
class SweepPoint:
    N: int
    objective: float
    dv: float
    iterations: int
    status: str


@dataclass(frozen=True)
class SweepReport:
    mission: str
    mode: str
    points: Tuple[SweepPoint, ...]

    @property
    def spread(self) -> float:
        """(max - min) / min of the physical objective across stage counts."""
        values = [point.dv for point in self.points]
        if not values or min(values) <= 0.0:
            return 0.0
        return (max(values) - min(values)) / min(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mission": self.mission,
            "mode": self.mode,
            "spread": self.spread,
            "points": [
                {"N": p.N, "objective": p.objective, "dv": p.dv, "iterations": p.iterations, "status": p.status}
                for p in self.points
            ],
        }
