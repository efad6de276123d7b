from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from rendezvous.core.settings import settings
from rendezvous.modules.orbit.schemas import CONTROL_DIM, STATE_DIM, OrbitParams, StateVector

INPUT_MODELS = {"quadrature", "impulsive"}


def validate_input_model(value: str) -> str:
    normalized = value.strip().lower()
    if normalized not in INPUT_MODELS:
        raise ValueError(f"Invalid input model: {value}")
    return normalized


class AnomalyGrid(BaseModel):
    """Uniform grid nu0 = node(0) < ... < node(N) = nuf."""

    model_config = ConfigDict(frozen=True)

    nu0: float
    nuf: float
    N: int = Field(ge=1)
    m: int = Field(default=CONTROL_DIM, ge=CONTROL_DIM, le=CONTROL_DIM)

    @model_validator(mode="after")
    def validate_span(self) -> "AnomalyGrid":
        if not self.nuf > self.nu0:
            raise ValueError(f"nuf ({self.nuf}) must exceed nu0 ({self.nu0})")
        return self

    @property
    def alpha(self) -> float:
        return (self.nuf - self.nu0) / self.N

    def node(self, k: int) -> float:
        if not 0 <= k <= self.N:
            raise IndexError(f"stage {k} outside [0, {self.N}]")
        if k == self.N:
            return self.nuf
        return self.nu0 + self.alpha * k

    def nodes(self) -> np.ndarray:
        values = self.nu0 + self.alpha * np.arange(self.N + 1, dtype=float)
        values[-1] = self.nuf
        return values


@dataclass(frozen=True, eq=False)
class ControlSchedule:
    """Per-stage 3-vectors u(k); `stacked` is [u(0); u(1); ...; u(N-1)]."""

    stages: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.stages, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != CONTROL_DIM:
            raise ValueError(f"control schedule needs shape (N, {CONTROL_DIM}), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "stages", arr)

    @classmethod
    def from_stacked(cls, U: np.ndarray) -> "ControlSchedule":
        flat = np.asarray(U, dtype=float).reshape(-1)
        if flat.size % CONTROL_DIM:
            raise ValueError(f"stacked control length {flat.size} is not a multiple of {CONTROL_DIM}")
        return cls(flat.reshape(-1, CONTROL_DIM))

    @classmethod
    def zeros(cls, N: int) -> "ControlSchedule":
        return cls(np.zeros((N, CONTROL_DIM)))

    @property
    def N(self) -> int:
        return self.stages.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return self.stages.reshape(-1).copy()

    def stage_norms(self, ord: float = 2) -> np.ndarray:
        return np.linalg.norm(self.stages, ord=ord, axis=1)

    def norm_l1(self) -> float:
        return float(np.abs(self.stages).sum())

    def norm_l21(self) -> float:
        return float(self.stage_norms(2).sum())


@dataclass(frozen=True, eq=False)
class DiscreteLTV:
    params: OrbitParams
    grid: AnomalyGrid
    A: np.ndarray  # (N, 6, 6)
    B: np.ndarray  # (N, 6, 3)
    input_model: str = "quadrature"

    def __post_init__(self) -> None:
        N = self.grid.N
        if self.A.shape != (N, STATE_DIM, STATE_DIM) or self.B.shape != (N, STATE_DIM, CONTROL_DIM):
            raise ValueError(f"A/B shapes {self.A.shape}/{self.B.shape} do not match N={N}")
        object.__setattr__(self, "input_model", validate_input_model(self.input_model))

    @property
    def N(self) -> int:
        return self.grid.N


@dataclass(frozen=True, eq=False)
class StackedSystem:
    """Terminal constraint C_N U = b with b = xf - beta, all in the tilde frame."""

    C: np.ndarray  # (6, 3N)
    beta: np.ndarray
    b: np.ndarray
    x0: StateVector
    xf: StateVector

    @property
    def n_controls(self) -> int:
        return self.C.shape[1]


class DiscretizationOptions(BaseModel):
    model_config = ConfigDict(frozen=True)

    input_model: str = "quadrature"
    gauss_nodes: int = Field(default=settings.RENDEZVOUS_GAUSS_NODES, ge=1)
    rtol: float = Field(default=settings.RENDEZVOUS_QUADRATURE_RTOL, gt=0)
    self_check: bool = True

    @field_validator("input_model")
    @classmethod
    def validate_model(cls, value: str) -> str:
        return validate_input_model(value)
