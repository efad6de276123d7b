from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from rendezvous.core.errors import RendezvousError
from rendezvous.modules.mission.schemas import MissionSpec, RunArtifacts

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    "k", "nu_rad",
    "x_m", "y_m", "z_m", "xdot_mps", "ydot_mps", "zdot_mps",
    "xt", "yt", "zt", "xt_p", "yt_p", "zt_p",
]
CONTROL_COLUMNS = ["k", "nu_rad", "ux", "uy", "uz", "stage_norm2", "stage_norm1"]
FLOAT_FORMAT = "%.12e"


def trajectory_frame(artifacts: RunArtifacts) -> pd.DataFrame:
    steps = np.arange(artifacts.nodes.size)
    data = np.column_stack([steps, artifacts.nodes, artifacts.physical_states, artifacts.tilde_states])
    frame = pd.DataFrame(data, columns=TRAJECTORY_COLUMNS)
    frame["k"] = steps
    return frame


def control_frame(artifacts: RunArtifacts) -> pd.DataFrame:
    stages = artifacts.schedule.stages
    steps = np.arange(stages.shape[0])
    frame = pd.DataFrame(stages, columns=["ux", "uy", "uz"])
    frame.insert(0, "nu_rad", artifacts.nodes[:-1])
    frame.insert(0, "k", steps)
    frame["stage_norm2"] = artifacts.schedule.stage_norms(2)
    frame["stage_norm1"] = artifacts.schedule.stage_norms(1)
    return frame[CONTROL_COLUMNS]


def convergence_lines(artifacts: RunArtifacts) -> str:
    lines = ["# j eps norm_l1 norm_l21 residual"]
    for record in artifacts.report.trace:
        lines.append(
            f"{record.j} {record.eps:.6e} {record.norm_l1:.12e} {record.norm_l21:.12e} {record.residual:.6e}"
        )
    return "\n".join(lines) + "\n"


def write_artifacts(artifacts: RunArtifacts, directory: Path) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    trajectory_frame(artifacts).to_csv(directory / "trajectory.csv", index=False, float_format=FLOAT_FORMAT)
    control_frame(artifacts).to_csv(directory / "control.csv", index=False, float_format=FLOAT_FORMAT)
    (directory / "summary.json").write_text(json.dumps(artifacts.summary, indent=2, sort_keys=True) + "\n")
    (directory / "convergence.log").write_text(convergence_lines(artifacts))
    artifacts.output_dir = directory
    logger.info("Wrote %s artifacts to %s", artifacts.spec.name, directory)
    return directory


def write_failure_summary(spec: MissionSpec, error: RendezvousError, directory: Path) -> Path:
    """summary.json for a run whose solver raised; no trajectory exists to write."""
    directory.mkdir(parents=True, exist_ok=True)
    summary = {
        "mission": spec.name,
        "mode": spec.solver_mode,
        "N": spec.N,
        "status": "failed",
        "error": {"code": error.code, "message": error.message, "details": error.details},
        "solver_config": spec.irls.model_dump(),
    }
    (directory / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    logger.info("Wrote %s failure summary to %s", spec.name, directory)
    return directory
