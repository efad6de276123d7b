"""Bootstrap helpers for solver lookup."""
from __future__ import annotations

from functools import lru_cache

from rendezvous.core.registry import SolverRegistry, SolverSpec
from rendezvous.modules.irls.service import irls_l1, irls_l21


@lru_cache(maxsize=1)
def register_solvers() -> SolverRegistry:
    registry = SolverRegistry()
    registry.register(SolverSpec(
        key="l1",
        label="Orthogonal vectoring",
        description="Minimum l1 norm of the stacked control (three body-fixed thruster axes).",
        solve=irls_l1,
    ))
    registry.register(SolverSpec(
        key="l21",
        label="Thrust vectoring",
        description="Minimum sum of per-stage Euclidean norms (single steerable thruster).",
        solve=irls_l21,
    ))
    return registry
