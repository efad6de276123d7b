from __future__ import annotations

from typing import Any


class RendezvousError(ValueError):
    def __init__(self, code: str, message: str, details: dict[str, Any] | None = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.details = details or {}

    def __str__(self) -> str:
        return f"[{self.code}] {self.message}"


class OrbitError(RendezvousError):
    pass


class DiscretizationError(RendezvousError):
    pass


class SolverError(RendezvousError):
    pass


class OracleError(RendezvousError):
    pass


class MissionConfigError(RendezvousError):
    """Mission document or preset could not be turned into a MissionSpec."""

    def __init__(self, code: str, message: str, errors: list[dict] | None = None):
        super().__init__(code, message, {"errors": errors or []})
        self.errors = errors or []
