"""Mission presets from config/missions.yaml and user mission documents (JSON or YAML)."""
from __future__ import annotations

import copy
import json
import logging
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import ValidationError

from rendezvous.core.config import resolve_config_path
from rendezvous.core.errors import MissionConfigError
from rendezvous.modules.mission.schemas import MissionDocument, MissionSpec

logger = logging.getLogger(__name__)


def _validation_errors(exc: ValidationError) -> List[Dict[str, Any]]:
    return [
        {"field": ".".join(str(part) for part in error["loc"]) or "<root>", "message": error["msg"]}
        for error in exc.errors()
    ]


def _document(raw: Any, origin: str) -> MissionDocument:
    if not isinstance(raw, dict):
        raise MissionConfigError("validation", f"{origin}: mission must be a mapping, got {type(raw).__name__}")
    try:
        return MissionDocument.model_validate(raw)
    except ValidationError as exc:
        errors = _validation_errors(exc)
        summary = "; ".join(f"{item['field']}: {item['message']}" for item in errors)
        raise MissionConfigError("validation", f"{origin}: {summary}", errors) from exc


@lru_cache(maxsize=4)
def load_presets(path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
    config_path = resolve_config_path(path)
    with open(config_path, "r") as handle:
        try:
            config = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise _yaml_error(exc, str(config_path)) from exc
    presets = config.get("missions") or {}
    for name, raw in presets.items():
        raw.setdefault("name", name)
        _document(raw, f"preset {name}")
    return presets


def list_presets(path: Optional[str] = None) -> List[str]:
    return sorted(load_presets(path))


def _yaml_error(exc: yaml.YAMLError, origin: str) -> MissionConfigError:
    mark = getattr(exc, "problem_mark", None)
    if mark is None:
        return MissionConfigError("parse", f"{origin}: {exc}")
    line, column = mark.line + 1, mark.column + 1
    problem = getattr(exc, "problem", None) or str(exc)
    return MissionConfigError(
        "parse",
        f"{origin}: line {line}, column {column}: {problem}",
        [{"line": line, "column": column, "message": problem}],
    )


def parse_document(text: str, origin: str = "<text>", fmt: str = "json") -> MissionDocument:
    if fmt == "yaml":
        try:
            raw = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise _yaml_error(exc, origin) from exc
    else:
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MissionConfigError(
                "parse",
                f"{origin}: line {exc.lineno}, column {exc.colno}: {exc.msg}",
                [{"line": exc.lineno, "column": exc.colno, "message": exc.msg}],
            ) from exc
    return _document(raw, origin)


def load_mission(source: Union[str, Path], presets_path: Optional[str] = None) -> MissionSpec:
    """Resolve a preset name, a mission file path or inline JSON text into a MissionSpec."""
    if isinstance(source, Path):
        return _load_file(source)
    text = source.strip()
    if text.startswith("{"):
        return parse_document(text).to_spec()
    presets = load_presets(presets_path)
    if text in presets:
        logger.debug("Loading preset %s", text)
        return _document(copy.deepcopy(presets[text]), f"preset {text}").to_spec()
    candidate = Path(text).expanduser()
    if candidate.suffix.lower() in {".json", ".yaml", ".yml"} or candidate.is_file():
        return _load_file(candidate)
    raise MissionConfigError(
        "unknown-preset",
        f"Unknown mission preset: {text} (available: {', '.join(sorted(presets))})",
        [{"field": "mission", "message": f"unknown preset {text}"}],
    )


def _load_file(path: Path) -> MissionSpec:
    try:
        text = path.read_text()
    except OSError as exc:
        raise MissionConfigError("parse", f"cannot read mission file {path}: {exc.strerror or exc}") from exc
    fmt = "yaml" if path.suffix.lower() in {".yaml", ".yml"} else "json"
    return parse_document(text, str(path), fmt).to_spec()
