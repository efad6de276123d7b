"""Command-line entry point: run missions, sweep stage counts, verify against the LP oracle."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from rendezvous.core.config import configure_logging, output_root
from rendezvous.core.errors import MissionConfigError, RendezvousError
from rendezvous.core.settings import settings
from rendezvous.modules.discretization.schemas import INPUT_MODELS
from rendezvous.modules.irls.schemas import EPS_RULE_ALIASES, EPS_RULES, WEIGHT_RULE_ALIASES, WEIGHT_RULES
from rendezvous.modules.mission.loader import list_presets, load_mission, load_presets
from rendezvous.modules.mission.schemas import SOLVER_MODES, MissionSpec
from rendezvous.modules.mission.service import run_batch, sweep_mission
from rendezvous.modules.oracle.service import run_verification_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2


class RendezvousArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=sorted(SOLVER_MODES), help="Fuel objective (overrides the mission).")
    parser.add_argument("--jmax", type=int, help="Maximum IRLS iterations.")
    parser.add_argument("--eps-bar", type=float, help="Terminal smoothing parameter.")
    parser.add_argument("--tau", type=float, help="Gramian regularizer, relative to trace/rows.")
    parser.add_argument(
        "--weight-rule", choices=sorted(WEIGHT_RULES | set(WEIGHT_RULE_ALIASES)), help="l2/l1 weight formula."
    )
    parser.add_argument("--eps-rule", choices=sorted(EPS_RULES | set(EPS_RULE_ALIASES)), help="Smoothing schedule.")
    parser.add_argument(
        "--no-polish", dest="polish", action="store_false", default=None, help="Return the raw IRLS iterate."
    )
    parser.add_argument("--input-model", choices=sorted(INPUT_MODELS), help="Control input model.")


def build_parser() -> argparse.ArgumentParser:
    parser = RendezvousArgumentParser(prog="rendezvous", description=settings.APP_TITLE)
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--log-level", help="Logging level (default from RENDEZVOUS_LOG_LEVEL).")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Solve one or more missions and write their artifacts.")
    run.add_argument("--mission", action="append", required=True, help="Preset name, mission file or inline JSON.")
    run.add_argument("--N", type=int, help="Number of stages.")
    _add_solver_options(run)
    run.add_argument("--verify", action="store_true", help="Add LP oracle and certificate checks to the summary.")
    run.add_argument("--out", help=f"Output root (default {settings.RENDEZVOUS_OUTPUT_DIR}).")
    run.add_argument("--jobs", type=int, default=1, help="Missions solved in parallel.")

    sweep = sub.add_parser("sweep", help="Solve one mission for several stage counts.")
    sweep.add_argument("--mission", required=True, help="Preset name, mission file or inline JSON.")
    sweep.add_argument("--N", type=int, nargs="+", required=True, help="Stage counts to compare.")
    _add_solver_options(sweep)

    verify = sub.add_parser("verify", help="Randomized IRLS vs LP oracle equivalence suite.")
    verify.add_argument("--instances", type=int, default=200)
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--n-max", type=int, default=10, help="Largest number of stages per instance.")
    verify.add_argument("--json", dest="json_path", help="Write the suite report to this file.")

    sub.add_parser("presets", help="List built-in missions.")
    return parser


def _resolve_spec(source: str, args: argparse.Namespace, N: Optional[int] = None) -> MissionSpec:
    spec = load_mission(source)
    irls = {
        "jmax": args.jmax,
        "eps_bar": args.eps_bar,
        "tau": args.tau,
        "weight_rule": args.weight_rule,
        "eps_rule": args.eps_rule,
        "polish": args.polish,
    }
    return spec.with_overrides(
        irls=irls,
        solver_mode=args.mode,
        N=N,
        input_model=args.input_model,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    if args.jobs < 1:
        raise ValueError("--jobs must be at least 1")
    specs = [_resolve_spec(source, args, args.N) for source in args.mission]
    outcomes = run_batch(specs, output_root(args.out), verify=args.verify, jobs=args.jobs)
    rc = EXIT_OK
    for outcome in outcomes:
        if outcome.error is not None:
            print(f"{outcome.name}: failed [{outcome.error.code}] {outcome.error.message}")
            rc = EXIT_SOLVER
            continue
        summary = outcome.artifacts.summary
        print(
            f"{outcome.name}: {summary['mode']} status={summary['status']} iterations={summary['iterations']} "
            f"dv_l1={summary['dv_l1']:.6f} dv_l21={summary['dv_l21']:.6f} residual={summary['residual']:.3e} "
            f"impulses={len(summary['impulses'])} -> {outcome.artifacts.output_dir}"
        )
        if not outcome.succeeded:
            rc = EXIT_SOLVER
    return rc


def _cmd_sweep(args: argparse.Namespace) -> int:
    if any(N < 1 for N in args.N):
        raise ValueError("--N values must be at least 1")
    spec = _resolve_spec(args.mission, args)
    sweep = sweep_mission(spec, args.N)
    for point in sweep.points:
        print(f"N={point.N}: dv={point.dv:.6f} iterations={point.iterations} status={point.status}")
    print(f"relative spread: {sweep.spread:.4%}")
    return EXIT_OK if all(point.status in {"converged", "stalled"} for point in sweep.points) else EXIT_SOLVER


def _cmd_verify(args: argparse.Namespace) -> int:
    report = run_verification_suite(instances=args.instances, seed=args.seed, n_max=args.n_max)
    print(
        f"l1 within gap {report.l1_within_gap}/{report.instances}, "
        f"LP certified {report.lp_certified}/{report.instances}, "
        f"perturbed rejected {report.perturbed_rejected}/{report.perturbed_total}, "
        f"l2/l1 certified {report.l21_rate:.1%} (max violation {report.max_l21_violation:.3e}), "
        f"{report.elapsed_seconds:.1f}s"
    )
    if args.json_path:
        Path(args.json_path).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK if report.passed else EXIT_SOLVER


def _cmd_presets(args: argparse.Namespace) -> int:
    presets = load_presets()
    for name in list_presets():
        raw = presets[name]
        print(f"{name}: N={raw.get('N')} mode={raw.get('solver_mode', 'l1')} - {raw.get('description', '')}")
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "presets": _cmd_presets,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except MissionConfigError as exc:
        for item in exc.errors:
            logger.error("%s", item)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RendezvousError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
