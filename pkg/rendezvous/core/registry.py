"""Central registry for solver modes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Dict

if TYPE_CHECKING:
    from rendezvous.modules.discretization.schemas import StackedSystem
    from rendezvous.modules.irls.schemas import IrlsConfig, IrlsReport


@dataclass(frozen=True)
class SolverSpec:
    key: str
    label: str
    description: str
    solve: Callable[["StackedSystem", "IrlsConfig"], "IrlsReport"]


class SolverRegistry:
    def __init__(self) -> None:
        self._solvers: Dict[str, SolverSpec] = {}

    def register(self, solver: SolverSpec) -> None:
        self._solvers[solver.key] = solver

    def get(self, key: str) -> SolverSpec:
        try:
            return self._solvers[key]
        except KeyError as exc:
            raise KeyError(f"Unknown solver mode: {key}") from exc

    def list_solvers(self) -> Dict[str, SolverSpec]:
        return dict(self._solvers)
