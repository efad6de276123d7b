import json

import pytest

from rendezvous.cli import EXIT_OK, EXIT_SOLVER, EXIT_USAGE, _resolve_spec, build_parser, main

pytestmark = pytest.mark.integration

SMALL_MISSION = json.dumps({
    "name": "cli-approach",
    "units": {"length": "km", "velocity": "m/s"},
    "orbit": {"a": 6763, "e": 0.0052},
    "nu0": 0.0,
    "nuf": 4.0,
    "N": 8,
    "x0": [-5.0, 0.2, 1.5, 0.0],
    "xf": [-0.1, 0.0, 0.0, 0.0],
})


def test_presets_command(capsys):
    assert main(["presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "atv: N=50" in out
    assert "gto: N=600" in out


def test_run_writes_artifacts(tmp_out, capsys):
    rc = main([
        "run", "--mission", SMALL_MISSION, "--eps-rule", "continuation", "--jmax", "20000",
        "--verify", "--out", str(tmp_out),
    ])
    out = capsys.readouterr().out
    assert rc == EXIT_OK, out
    assert "cli-approach: l1 status=converged" in out
    summary = json.loads((tmp_out / "cli-approach" / "summary.json").read_text())
    assert summary["solver_config"]["jmax"] == 20000
    assert "oracle" in summary


def test_run_overrides_stage_count_and_mode(tmp_out):
    rc = main([
        "run", "--mission", SMALL_MISSION, "--N", "6", "--mode", "l21",
        "--eps-rule", "continuation", "--jmax", "20000", "--out", str(tmp_out),
    ])
    assert rc == EXIT_OK
    summary = json.loads((tmp_out / "cli-approach" / "summary.json").read_text())
    assert summary["N"] == 6
    assert summary["mode"] == "l21"


def test_unknown_mission_is_a_usage_error(tmp_out, capsys):
    assert main(["run", "--mission", "lunar", "--out", str(tmp_out)]) == EXIT_USAGE
    assert "Unknown mission preset" in capsys.readouterr().err


def test_bad_arguments_exit_with_usage_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["run"])
    assert excinfo.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as excinfo:
        main(["run", "--mission", "atv", "--mode", "l0"])
    assert excinfo.value.code == EXIT_USAGE
    assert main(["sweep", "--mission", "atv", "--N", "0"]) == EXIT_USAGE


def test_verify_command_writes_report(tmp_path, capsys):
    report_path = tmp_path / "suite.json"
    rc = main(["verify", "--instances", "5", "--seed", "7", "--n-max", "4", "--json", str(report_path)])
    report = json.loads(report_path.read_text())
    assert report["instances"] == 5
    assert rc == (EXIT_OK if report["passed"] else EXIT_SOLVER)
    assert "l1 within gap 5/5" in capsys.readouterr().out


def test_sweep_command(capsys):
    rc = main(["sweep", "--mission", SMALL_MISSION, "--N", "6", "8", "--eps-rule", "continuation", "--jmax", "20000"])
    out = capsys.readouterr().out
    assert rc == EXIT_OK
    assert "N=6:" in out
    assert "relative spread" in out


def test_parser_lists_subcommands():
    parser = build_parser()
    args = parser.parse_args(["verify"])
    assert args.instances == 200
    assert args.seed == 0


@pytest.mark.parametrize(
    "flags,weight_rule,eps_rule",
    [
        (["--weight-rule", "paper", "--eps-rule", "paper"], "entrywise", "max"),
        (["--weight-rule", "block", "--eps-rule", "sorted"], "block", "sorted"),
        (["--weight-rule", "block-norm", "--eps-rule", "sorted-r"], "block", "sorted"),
    ],
)
def test_rule_names_reach_the_solver_config(flags, weight_rule, eps_rule):
    args = build_parser().parse_args(["run", "--mission", "atv", *flags])
    spec = _resolve_spec(args.mission[0], args)
    assert spec.irls.weight_rule == weight_rule
    assert spec.irls.eps_rule == eps_rule
    assert spec.irls.polish is True


def test_no_polish_flag(tmp_out):
    rc = main([
        "run", "--mission", SMALL_MISSION, "--eps-rule", "continuation", "--jmax", "20000",
        "--no-polish", "--out", str(tmp_out),
    ])
    assert rc == EXIT_OK
    summary = json.loads((tmp_out / "cli-approach" / "summary.json").read_text())
    assert summary["solver_config"]["polish"] is False
    assert summary["polish_steps"] == 0


def test_failed_solve_exits_with_solver_code(tmp_out, capsys):
    unreachable = json.loads(SMALL_MISSION)
    unreachable.update(name="cli-unreachable", N=1)
    rc = main(["run", "--mission", json.dumps(unreachable), "--out", str(tmp_out)])
    assert rc == EXIT_SOLVER
    assert "failed [singular-gramian]" in capsys.readouterr().out
    summary = json.loads((tmp_out / "cli-unreachable" / "summary.json").read_text())
    assert summary["status"] == "failed"
