"""End-to-end mission pipeline: convert, discretize, stack, solve, propagate, report."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from rendezvous.core.bootstrap import register_solvers
from rendezvous.core.errors import OracleError, RendezvousError, SolverError
from rendezvous.modules.discretization.schemas import (
    AnomalyGrid,
    ControlSchedule,
    DiscretizationOptions,
    StackedSystem,
)
from rendezvous.modules.discretization.service import (
    discretize,
    propagate,
    replay_continuous,
    stack,
    stage_dv_gains,
)
from rendezvous.modules.irls.schemas import IrlsReport
from rendezvous.modules.mission.artifacts import write_artifacts, write_failure_summary
from rendezvous.modules.mission.schemas import (
    Impulse,
    ImpulseTable,
    MissionSpec,
    RunArtifacts,
    SweepPoint,
    SweepReport,
)
from rendezvous.modules.oracle.certificates import certificate_l1, certificate_l21
from rendezvous.modules.oracle.simplex import solve_l1_lp
from rendezvous.modules.orbit.kinematics import check_tilde_validity, to_physical, to_tilde
from rendezvous.modules.orbit.schemas import StateVector

logger = logging.getLogger(__name__)

# The dense tableau holds 2x this many columns.
LP_MAX_COLUMNS = 2000
RUN_CERTIFICATE_TOL = 1e-3


def extract_impulses(
    U: Union[ControlSchedule, np.ndarray],
    grid: AnomalyGrid,
    threshold: float = 1e-3,
    gains: Optional[np.ndarray] = None,
) -> ImpulseTable:
    """Stages whose velocity change exceeds threshold x the largest one, in anomaly order."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    schedule = U if isinstance(U, ControlSchedule) else ControlSchedule.from_stacked(U)
    if schedule.N != grid.N:
        raise ValueError(f"schedule has {schedule.N} stages, grid has {grid.N}")
    dv = schedule.stages if gains is None else schedule.stages * np.asarray(gains, dtype=float)[:, None]
    norms = np.linalg.norm(dv, axis=1)
    largest = float(norms.max()) if norms.size else 0.0
    if largest == 0.0:
        return ImpulseTable(threshold=threshold)
    nodes = grid.nodes()
    entries = tuple(
        Impulse(nu=float(nodes[k]), k=int(k), dv=dv[k].copy(), magnitude=float(norms[k]))
        for k in np.flatnonzero(norms > threshold * largest)
    )
    return ImpulseTable(entries=entries, threshold=threshold)


def _oracle_block(stacked: StackedSystem, report: IrlsReport) -> Dict[str, Any]:
    block: Dict[str, Any] = {}
    if report.mode == "l1":
        certificate = certificate_l1(stacked.C, stacked.b, report.U, RUN_CERTIFICATE_TOL)
        if stacked.n_controls <= LP_MAX_COLUMNS:
            try:
                lp = solve_l1_lp(stacked.C, stacked.b)
                block["lp_objective"] = lp.objective
                block["gap_to_lp"] = (report.norm_l1 - lp.objective) / max(lp.objective, 1e-12)
            except OracleError as exc:
                logger.warning("LP oracle failed: %s", exc)
                block["lp_error"] = str(exc)
        else:
            block["lp_skipped"] = f"{stacked.n_controls} controls exceed {LP_MAX_COLUMNS}"
    else:
        certificate = certificate_l21(stacked.C, stacked.b, report.U, RUN_CERTIFICATE_TOL)
    block["certificate"] = certificate.to_dict()
    return block


def _summary(
    spec: MissionSpec,
    report: IrlsReport,
    impulses: ImpulseTable,
    dv_l1: float,
    dv_l21: float,
    terminal_error: float,
    replay_error: float,
) -> Dict[str, Any]:
    achieved = dv_l1 if spec.solver_mode == "l1" else dv_l21
    reference = spec.reference.get(spec.solver_mode)
    return {
        "mission": spec.name,
        "mode": spec.solver_mode,
        "N": spec.N,
        "nu0": spec.nu0,
        "nuf": spec.nuf,
        "input_model": spec.input_model,
        "norm_l1": report.norm_l1,
        "norm_l21": report.norm_l21,
        "dv_l1": dv_l1,
        "dv_l21": dv_l21,
        "residual": report.residual,
        "iterations": report.iterations,
        "status": report.status.value,
        "succeeded": report.succeeded,
        "eps_final": report.eps_final,
        "polish_steps": report.polish_steps,
        "terminal_error": terminal_error,
        "replay_error": replay_error,
        "impulse_threshold": impulses.threshold,
        "impulses": impulses.to_list(),
        "impulse_counts": {axis: impulses.channel_count(i) for i, axis in enumerate("xyz")},
        "solver_config": spec.irls.model_dump(),
        "reference": reference.gaps(achieved) if reference is not None else None,
    }


def run_mission(
    spec: MissionSpec,
    out_dir: Optional[Union[str, Path]] = None,
    verify: bool = False,
) -> RunArtifacts:
    """Solve one mission; with out_dir set, files land in out_dir/<mission name>."""
    params = spec.orbit
    check_tilde_validity(params)
    grid = spec.grid()
    x0 = to_tilde(params, StateVector(spec.x0_physical), grid.nu0)
    xf = to_tilde(params, StateVector(spec.xf_physical), grid.nuf)

    system = discretize(params, grid, DiscretizationOptions(input_model=spec.input_model))
    stacked = stack(system, x0, xf)
    solver = register_solvers().get(spec.solver_mode)
    logger.info("Solving %s with %s (%s), N=%d", spec.name, solver.key, solver.label, spec.N)
    try:
        report = solver.solve(stacked, spec.irls)
    except SolverError as exc:
        if out_dir is not None:
            write_failure_summary(spec, exc, Path(out_dir) / spec.name)
        raise

    schedule = report.U_star
    nodes = grid.nodes()
    tilde = propagate(system, x0, schedule)
    tilde_states = np.array([state.values for state in tilde])
    physical_states = np.array([to_physical(params, state, float(nu)).values for state, nu in zip(tilde, nodes)])

    gains = stage_dv_gains(params, system)
    impulses = extract_impulses(schedule, grid, spec.impulse_threshold, gains)
    dv_l1 = float(np.sum(gains * schedule.stage_norms(1)))
    dv_l21 = float(np.sum(gains * schedule.stage_norms(2)))
    terminal_error = float(np.linalg.norm(physical_states[-1] - np.asarray(spec.xf_physical)))
    replayed = replay_continuous(params, system, x0, schedule)
    replay_error = float(np.linalg.norm(replayed.values - tilde_states[-1])) / (1.0 + float(np.linalg.norm(tilde_states[-1])))

    summary = _summary(spec, report, impulses, dv_l1, dv_l21, terminal_error, replay_error)
    if verify:
        summary["oracle"] = _oracle_block(stacked, report)

    artifacts = RunArtifacts(
        spec=spec,
        report=report,
        schedule=schedule,
        nodes=nodes,
        physical_states=physical_states,
        tilde_states=tilde_states,
        impulses=impulses,
        summary=summary,
    )
    if out_dir is not None:
        write_artifacts(artifacts, Path(out_dir) / spec.name)
    return artifacts


def sweep_mission(spec: MissionSpec, stage_counts: Iterable[int]) -> SweepReport:
    points: List[SweepPoint] = []
    for N in stage_counts:
        artifacts = run_mission(spec.with_overrides(N=N))
        summary = artifacts.summary
        points.append(SweepPoint(
            N=N,
            objective=artifacts.report.objective,
            dv=summary["dv_l1"] if spec.solver_mode == "l1" else summary["dv_l21"],
            iterations=artifacts.report.iterations,
            status=artifacts.report.status.value,
        ))
    sweep = SweepReport(mission=spec.name, mode=spec.solver_mode, points=tuple(points))
    logger.info("Sweep %s over N=%s: relative spread %.4f", spec.name, [p.N for p in points], sweep.spread)
    return sweep


@dataclass
class BatchOutcome:
    name: str
    artifacts: Optional[RunArtifacts] = None
    error: Optional[RendezvousError] = None

    @property
    def succeeded(self) -> bool:
        return self.artifacts is not None and self.artifacts.succeeded


def run_batch(
    specs: List[MissionSpec],
    out_dir: Optional[Union[str, Path]] = None,
    verify: bool = False,
    jobs: int = 1,
) -> List[BatchOutcome]:
    """Run missions independently, in input order; one failure does not stop the rest."""
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"mission names must be unique within a batch: {names}")

    def run_one(spec: MissionSpec) -> BatchOutcome:
        try:
            return BatchOutcome(spec.name, artifacts=run_mission(spec, out_dir, verify))
        except RendezvousError as exc:
            logger.error("Mission %s failed: %s", spec.name, exc)
            return BatchOutcome(spec.name, error=exc)

    if jobs <= 1 or len(specs) <= 1:
        return [run_one(spec) for spec in specs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_one, specs))
