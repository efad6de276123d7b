from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpSolution:
    U: np.ndarray
    objective: float
    status: LpStatus
    pivot_count: int
    dual: Optional[np.ndarray] = None


@dataclass(frozen=True, eq=False)
class Certificate:
    accepted: bool
    max_violation: float
    reason: str
    active: int = 0
    dual: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "accepted": self.accepted,
            "max_violation": self.max_violation,
            "reason": self.reason,
            "active": self.active,
        }


@dataclass
class SuiteReport:
    instances: int
    seed: int
    l1_within_gap: int = 0
    lp_certified: int = 0
    perturbed_rejected: int = 0
    perturbed_total: int = 0
    l21_certified: int = 0
    max_l1_gap: float = 0.0
    max_l21_violation: float = 0.0
    elapsed_seconds: float = 0.0
    failures: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def l21_rate(self) -> float:
        return self.l21_certified / self.instances if self.instances else 1.0

    @property
    def passed(self) -> bool:
        return (
            self.l1_within_gap == self.instances
            and self.lp_certified == self.instances
            and self.perturbed_rejected == self.perturbed_total
            and self.l21_rate >= 0.95
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "instances": self.instances,
            "seed": self.seed,
            "l1_within_gap": self.l1_within_gap,
            "lp_certified": self.lp_certified,
            "perturbed_rejected": self.perturbed_rejected,
            "perturbed_total": self.perturbed_total,
            "l21_certified": self.l21_certified,
            "l21_rate": self.l21_rate,
            "max_l1_gap": self.max_l1_gap,
            "max_l21_violation": self.max_l21_violation,
            "elapsed_seconds": self.elapsed_seconds,
            "passed": self.passed,
            "failures": self.failures,
        }
