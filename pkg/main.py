#!/usr/bin/env python3
"""
Command-line entry point.

Subcommands:
    solve    solve one stage Stackelberg game from a two-matrix text file
    run      play one scenario with the SGCM planner or the greedy baseline
    compare  run both planners over a suite of cases and tabulate the results
    plot     draw stage-wise utility of saved episode reports
    sweep    SGCM under follower disturbances across seeds

Exit codes: 0 success, 1 validation error, 2 runtime/solver error, 3 resource cap exceeded.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

import config
from constants import EXIT_CODES, PLANNERS, SOLVER_METHODS
from exceptions import handle_exception
from harness.experiment import compare_cases, run_experiment, sweep_disturbances
from harness.reporting import load_report_json
from harness.scenario import apply_overrides, bundled_case_paths, dump_scenario, load_scenario
from logger_config import setup_logging
from rearrange.baselines import FollowerModel
from solvers.stage_solver import StageMatrices, available_methods, solve_stage
from utils.helpers import format_real, parse_index_list
from utils.plotting import emit_utility_plot

logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the validation code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CODES["VALIDATION_ERROR"], f"[ERROR] {message}\n")


def _add_scenario_overrides(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--horizon", type=int, help="planning horizon T")
    parser.add_argument("--pfail-a", type=float, dest="p_fail_a", help="leader failure probability")
    parser.add_argument("--pfail-b", type=float, dest="p_fail_b", help="follower failure probability")
    parser.add_argument("--max-rounds", type=int, help="round budget")
    parser.add_argument("--solver", choices=available_methods(), help="stage solver method")


def _overrides(args: argparse.Namespace) -> dict:
    names = ("horizon", "p_fail_a", "p_fail_b", "max_rounds", "solver")
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="stackelguide",
        description="Feedback Stackelberg planning for leader-guided multi-robot rearrangement",
    )
    parser.add_argument("--log-level", default=config.LOGGING["level"], help="logging level")
    parser.add_argument("--log-dir", default=config.LOGGING["dir"], help="directory for the log file")
    parser.add_argument("--quiet", action="store_true", help="do not log to stderr")
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="solve a single stage game")
    solve.add_argument("--stage-game", required=True, type=Path, help="two-matrix text file")
    solve.add_argument("--method", default=SOLVER_METHODS["AUTO"], choices=available_methods())
    solve.add_argument("--big-m", type=float, dest="big_m", help="big-M constant for the MILP")

    run = sub.add_parser("run", help="play one scenario")
    run.add_argument("--scenario", required=True, type=Path)
    run.add_argument("--planner", choices=sorted(PLANNERS.values()))
    run.add_argument("--seed", type=int)
    _add_scenario_overrides(run)
    disturb = run.add_mutually_exclusive_group()
    disturb.add_argument("--disturb-rounds", help="comma-separated rounds with a random follower deviation")
    disturb.add_argument("--disturb-prob", type=float, help="per-round probability of a random deviation")
    disturb.add_argument("--zero-trust", action="store_true", help="follower ignores recommendations")
    run.add_argument("--out", type=Path, default=Path(config.OUTPUT["dir"]))
    run.add_argument("--save-scenario", type=Path, help="also write the scenario as played, overrides applied")

    compare = sub.add_parser("compare", help="compare SGCM and greedy over a case suite")
    compare.add_argument("--cases", type=Path, default=config.SUITE_DIR)
    compare.add_argument("--out", type=Path, required=True, help="comparison CSV")
    _add_scenario_overrides(compare)

    plot = sub.add_parser("plot", help="plot stage-wise utility of saved reports")
    plot.add_argument("--reports", nargs="+", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True, help="SVG file")

    sweep = sub.add_parser("sweep", help="SGCM under follower disturbances")
    sweep.add_argument("--cases", type=Path, default=config.SUITE_DIR)
    sweep.add_argument("--seeds", type=int, default=10, help="number of seeds, 0..N-1")
    sweep.add_argument("--disturb-round", type=int, default=2)
    sweep.add_argument("--out", type=Path, required=True, help="sweep CSV")
    _add_scenario_overrides(sweep)

    return parser


def _follower_model(args: argparse.Namespace) -> Optional[FollowerModel]:
    if args.zero_trust:
        return FollowerModel.zero_trust()
    if args.disturb_rounds:
        return FollowerModel.random_at_rounds(parse_index_list(args.disturb_rounds))
    if args.disturb_prob is not None:
        return FollowerModel.random_with_prob(args.disturb_prob)
    return None


def cmd_solve(args: argparse.Namespace) -> int:
    matrices = StageMatrices.from_text(args.stage_game.read_text(encoding="utf-8"))
    solution = solve_stage(matrices, args.method, args.big_m)
    print(matrices.to_text(), end="")
    print(f"method: {solution.method}")
    print("leader_policy: " + " ".join(format_real(p) for p in solution.leader_policy.probabilities))
    print(f"follower_action: {solution.follower_action.index}")
    print(f"leader_value: {format_real(solution.leader_value)}")
    print(f"follower_value: {format_real(solution.follower_value)}")
    if solution.ties:
        print(f"follower_ties: {solution.ties}")
    return EXIT_CODES["SUCCESS"]


def cmd_run(args: argparse.Namespace) -> int:
    scenario = apply_overrides(
        load_scenario(args.scenario),
        planner=args.planner,
        seed=args.seed,
        follower_model=_follower_model(args),
        **_overrides(args),
    )
    if args.save_scenario:
        print(f"wrote {dump_scenario(scenario, args.save_scenario)}")
    report = run_experiment(scenario, args.out)
    print(
        f"{scenario.name} {report.planner}: {report.status} in {report.total_rounds} rounds, "
        f"utility {format_real(report.total_utility, 3)}"
    )
    return EXIT_CODES["SUCCESS"]


def cmd_compare(args: argparse.Namespace) -> int:
    rows = compare_cases(bundled_case_paths(args.cases), args.out, **_overrides(args))
    for row in rows:
        print(" ".join(f"{k}={v}" for k, v in row.to_row().items()))
    print(f"wrote {args.out}")
    return EXIT_CODES["SUCCESS"]


def cmd_plot(args: argparse.Namespace) -> int:
    reports = [load_report_json(path) for path in args.reports]
    path = emit_utility_plot(reports, args.out)
    print(f"wrote {path} and {path.with_suffix('.csv')}")
    return EXIT_CODES["SUCCESS"]


def cmd_sweep(args: argparse.Namespace) -> int:
    rows = sweep_disturbances(
        bundled_case_paths(args.cases),
        list(range(args.seeds)),
        args.disturb_round,
        args.out,
        **_overrides(args),
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_CODES["SUCCESS"]


COMMANDS = {
    "solve": cmd_solve,
    "run": cmd_run,
    "compare": cmd_compare,
    "plot": cmd_plot,
    "sweep": cmd_sweep,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the command-line application.

    Returns:
        Exit code (0 success, 1 validation, 2 runtime, 3 resource limit)
    """
    args = build_parser().parse_args(argv)
    setup_logging(log_level=args.log_level, log_dir=args.log_dir, console_output=not args.quiet)

    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        error = handle_exception(e, logger.error)
        print(f"[ERROR] {error['message']}", file=sys.stderr)
        if error["exception_type"] not in ("ValidationError", "ScenarioParseError"):
            logger.debug("Traceback", exc_info=True)
        return error["exit_code"]


if __name__ == "__main__":
    exit_code = main()
    sys.exit(exit_code)
