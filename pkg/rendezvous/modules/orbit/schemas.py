from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from rendezvous.core.settings import settings

STATE_DIM = 6
CONTROL_DIM = 3


class OrbitParams(BaseModel):
    """Target orbit constants; derived quantities are computed from a, e and mu."""

    model_config = ConfigDict(frozen=True)

    a: float = Field(gt=0, description="semi-major axis [m]")
    e: float = Field(ge=0, lt=1, description="eccentricity")
    mu: float = Field(default=settings.RENDEZVOUS_MU, gt=0, description="gravitational parameter [m^3/s^2]")

    @field_validator("a", "e", "mu")
    @classmethod
    def validate_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("orbit constants must be finite")
        return value

    @property
    def p(self) -> float:
        return self.a * (1.0 - self.e**2)

    @property
    def h(self) -> float:
        return math.sqrt(self.mu * self.p)

    @property
    def n(self) -> float:
        return math.sqrt(self.mu / self.a**3)

    @property
    def gamma(self) -> float:
        return self.mu / self.h**1.5


@dataclass(frozen=True)
class AnomalyPoint:
    nu: float
    rho: float
    rho_prime: float
    s: float
    c: float
    s_prime: float
    c_prime: float
    omega: float
    J: float


class Frame(str, Enum):
    PHYSICAL = "physical"
    TILDE = "tilde"


@dataclass(frozen=True, eq=False)
class StateVector:
    """Six-component relative state.

    physical: [x y z xdot ydot zdot] in m and m/s.
    tilde:    [xt yt zt xt' yt' zt'] in m and m/rad.
    """

    values: np.ndarray
    frame: Frame = Frame.PHYSICAL

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.shape != (STATE_DIM,):
            raise ValueError(f"state vector needs {STATE_DIM} components, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("state vector components must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "frame", Frame(self.frame))

    @classmethod
    def zeros(cls, frame: Frame = Frame.PHYSICAL) -> "StateVector":
        return cls(np.zeros(STATE_DIM), frame)

    @property
    def position(self) -> np.ndarray:
        return self.values[:3]

    @property
    def velocity(self) -> np.ndarray:
        return self.values[3:]

    def __array__(self, dtype=None, copy=None):
        return np.array(self.values, dtype=dtype)

    def allclose(self, other: "StateVector", rtol: float = 1e-9, atol: float = 0.0) -> bool:
        return self.frame == other.frame and bool(np.allclose(self.values, other.values, rtol=rtol, atol=atol))
