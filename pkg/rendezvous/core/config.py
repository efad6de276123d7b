"""Central configuration helpers."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from rendezvous.core.settings import settings

REPO_ROOT = Path(__file__).resolve().parent.parent.parent
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: Optional[str] = None) -> None:
    name = (level or settings.RENDEZVOUS_LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, name, logging.INFO), format=LOG_FORMAT, force=True)


def default_missions_path() -> Path:
    # Presets live at repo-root ./config to keep them editable without code changes.
    return REPO_ROOT / settings.RENDEZVOUS_MISSIONS_PATH


def resolve_config_path(path: Optional[str]) -> Path:
    config_root = default_missions_path().parent
    if not path:
        return default_missions_path()
    candidate = Path(path).expanduser()
    if not candidate.is_absolute():
        candidate = config_root / candidate
    resolved = candidate.resolve()
    try:
        resolved.relative_to(config_root.resolve())
    except ValueError as exc:
        raise ValueError("Config path must resolve under config/") from exc
    return resolved


def output_root(path: Optional[str] = None) -> Path:
    return Path(path or settings.RENDEZVOUS_OUTPUT_DIR).expanduser()
