#!/usr/bin/env python3
"""Fast test suite, a preset smoke run and a short oracle suite, stopping at the first failure."""
from __future__ import annotations

import argparse
import logging
import os
import shlex
import subprocess
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Tuple

from dotenv import dotenv_values

REPO_ROOT = Path(__file__).resolve().parents[1]
ENV_PREFIX = "RENDEZVOUS_"

logger = logging.getLogger("quality_checks")


def child_environment(env_file: Path) -> Dict[str, str]:
    """RENDEZVOUS_* settings from env_file under the current environment, which takes precedence."""
    from_file = {
        key: value
        for key, value in dotenv_values(env_file).items()
        if key.startswith(ENV_PREFIX) and value is not None
    }
    return {**from_file, **os.environ}


def plan(args: argparse.Namespace, smoke_dir: Path) -> List[Tuple[str, List[str]]]:
    python = sys.executable
    steps: List[Tuple[str, List[str]]] = []
    if not args.skip_tests:
        pytest_cmd = [python, "-m", "pytest", "-q"]
        if not args.slow:
            pytest_cmd += ["-m", "not slow"]
        steps.append(("pytest", pytest_cmd + (args.pytest_args or [])))
    if not args.skip_smoke:
        steps.append((
            f"{args.mission} smoke run",
            [python, "-m", "rendezvous", "run", "--mission", args.mission, "--verify", "--out", str(smoke_dir)],
        ))
        steps.append(("oracle suite", [python, "-m", "rendezvous", "verify", "--instances", str(args.instances)]))
    return steps


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--skip-tests", action="store_true", help="Skip pytest.")
    parser.add_argument("--skip-smoke", action="store_true", help="Skip the smoke run and oracle suite.")
    parser.add_argument("--slow", action="store_true", help="Include tests marked slow.")
    parser.add_argument("--mission", default="atv", help="Preset used for the smoke run.")
    parser.add_argument("--instances", type=int, default=20, help="Oracle suite size.")
    parser.add_argument("--env-file", type=Path, default=REPO_ROOT / ".env", help="Settings file for the child runs.")
    parser.add_argument("--pytest-args", nargs=argparse.REMAINDER, help="Everything after this goes to pytest.")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    env = child_environment(args.env_file)
    with tempfile.TemporaryDirectory(prefix="rendezvous-smoke-") as smoke_dir:
        for title, command in plan(args, Path(smoke_dir)):
            logger.info("%s: %s", title, shlex.join(command))
            returncode = subprocess.run(command, env=env, cwd=REPO_ROOT, check=False).returncode
            if returncode != 0:
                logger.error("%s failed with exit code %d", title, returncode)
                return returncode
    logger.info("all checks passed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
