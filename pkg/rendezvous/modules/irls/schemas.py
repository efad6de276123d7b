from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from rendezvous.core.settings import settings
from rendezvous.modules.discretization.schemas import ControlSchedule
from rendezvous.modules.orbit.schemas import CONTROL_DIM

WEIGHT_RULES = {"entrywise", "block"}
EPS_RULES = {"max", "sorted", "continuation"}
# Long-form names accepted on the command line and in mission files.
WEIGHT_RULE_ALIASES = {"paper": "entrywise", "paper-literal": "entrywise", "block-norm": "block"}
EPS_RULE_ALIASES = {"paper": "max", "paper-max": "max", "sorted-r": "sorted"}
SCALINGS = {"none", "normalized"}


class IrlsConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    jmax: int = Field(default=settings.RENDEZVOUS_JMAX, ge=1)
    eps0: float = Field(default=1.0, gt=0)
    eps_bar: float = Field(default=1e-6, gt=0)
    tau: float = Field(default=1e-12, ge=0, description="regularizer relative to trace(Gramian)/rows")
    tol_u: float = Field(default=1e-9, gt=0)
    weight_rule: str = "block"
    eps_rule: str = "sorted"
    r: Optional[int] = Field(default=None, ge=0)
    scaling: str = "normalized"
    polish: bool = True

    @field_validator("weight_rule")
    @classmethod
    def validate_weight_rule(cls, value: str) -> str:
        normalized = value.strip().lower()
        normalized = WEIGHT_RULE_ALIASES.get(normalized, normalized)
        if normalized not in WEIGHT_RULES:
            raise ValueError(f"Invalid weight rule: {value}")
        return normalized

    @field_validator("eps_rule")
    @classmethod
    def validate_eps_rule(cls, value: str) -> str:
        normalized = value.strip().lower()
        normalized = EPS_RULE_ALIASES.get(normalized, normalized)
        if normalized not in EPS_RULES:
            raise ValueError(f"Invalid eps rule: {value}")
        return normalized

    @field_validator("scaling")
    @classmethod
    def validate_scaling(cls, value: str) -> str:
        normalized = value.strip().lower()
        if normalized not in SCALINGS:
            raise ValueError(f"Invalid scaling: {value}")
        return normalized


@dataclass(frozen=True, eq=False)
class WeightState:
    """Diagonal of the block-diagonal weight matrix, one entry per control component."""

    w: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.w, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise ValueError("weights must be strictly positive and finite")
        arr.setflags(write=False)
        object.__setattr__(self, "w", arr)

    @classmethod
    def ones(cls, n: int) -> "WeightState":
        return cls(np.ones(n))

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.w

    def blocks(self) -> np.ndarray:
        return self.w.reshape(-1, CONTROL_DIM)

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.w)


class IrlsStatus(str, Enum):
    CONVERGED = "converged"
    EPS_NOT_REACHED = "eps-not-reached"
    STALLED = "stalled"
    MAX_ITERATIONS = "max-iterations"
    INFEASIBLE = "infeasible"


SUCCESS_STATUSES = {IrlsStatus.CONVERGED, IrlsStatus.STALLED}


@dataclass(frozen=True)
class IterationRecord:
    j: int
    eps: float
    norm_l1: float
    norm_l21: float
    residual: float
    step: float


@dataclass(frozen=True, eq=False)
class IrlsReport:
    U: np.ndarray
    mode: str
    norm_l1: float
    norm_l21: float
    residual: float
    iterations: int
    status: IrlsStatus
    eps_final: float
    weights: WeightState
    eps_history: List[float] = field(default_factory=list)
    trace: List[IterationRecord] = field(default_factory=list)
    polish_steps: int = 0

    @property
    def U_star(self) -> ControlSchedule:
        return ControlSchedule.from_stacked(self.U)

    @property
    def succeeded(self) -> bool:
        return self.status in SUCCESS_STATUSES

    @property
    def objective(self) -> float:
        return self.norm_l1 if self.mode == "l1" else self.norm_l21

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "norm_l1": self.norm_l1,
            "norm_l21": self.norm_l21,
            "residual": self.residual,
            "iterations": self.iterations,
            "status": self.status.value,
            "eps_final": self.eps_final,
            "polish_steps": self.polish_steps,
        }
