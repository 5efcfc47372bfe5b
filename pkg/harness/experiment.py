"""
Experiment orchestration: single runs, planner comparisons across cases, and
disturbance sweeps.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import config
from constants import (
    COMPARISON_CSV_COLUMNS,
    EPISODE_STATUSES,
    PLANNERS,
    SWEEP_CSV_COLUMNS,
)
from exceptions import StackelguideError, ValidationError, handle_exception
from harness.reporting import write_csv, write_episode
from harness.scenario import ScenarioConfig, apply_overrides, load_scenario
from models import EpisodeReport
from rearrange.baselines import FollowerModel, greedy_run
from rearrange.environment import RearrangementEnv
from solvers.fse_planner import rolling_horizon_run

logger = logging.getLogger(__name__)

CasePath = Union[str, Path]


@dataclass
class PlannerOutcome:
    status: str
    rounds: int
    utility: float = math.nan


@dataclass
class ComparisonRow:
    """
    One case of the planner comparison.

    Both utilities are summed over the same number of rounds: the SGCM
    episode's length, capped by the round budget.
    """

    case: str
    outcomes: Dict[str, PlannerOutcome] = field(default_factory=dict)

    def to_row(self) -> dict:
        row = {"case": self.case}
        for planner in (PLANNERS["GREEDY"], PLANNERS["SGCM"]):
            outcome = self.outcomes.get(planner)
            if outcome is None:
                continue
            row[f"{planner}_status"] = outcome.status
            row[f"{planner}_rounds"] = outcome.rounds
            row[f"{planner}_utility"] = None if math.isnan(outcome.utility) else outcome.utility
        return row


@dataclass
class SweepRow:
    case: str
    model: str
    seed: int
    status: str
    rounds: int
    baseline_rounds: int

    def to_row(self) -> dict:
        return dataclasses.asdict(self)


def run_episode(scenario: ScenarioConfig) -> EpisodeReport:
    """Play one episode with the scenario's planner; no files are written."""
    env = scenario.env()
    if scenario.planner == PLANNERS["GREEDY"]:
        return greedy_run(env, scenario.initial_state, scenario.max_rounds, scenario.seed, case=scenario.name)
    game = scenario.game()
    return rolling_horizon_run(
        env,
        lambda _state: game,
        scenario.follower_model,
        scenario.max_rounds,
        scenario.seed,
        scenario.initial_state,
        method=scenario.solver,
        case=scenario.name,
    )


def run_experiment(scenario: ScenarioConfig, out_dir: Optional[CasePath] = None) -> EpisodeReport:
    """
    Run one episode and write its JSON report and per-round CSV.

    Args:
        scenario: Validated scenario
        out_dir: Output directory (default: config.OUTPUT["dir"])
    """
    report = run_episode(scenario)
    write_episode(report, out_dir if out_dir is not None else config.OUTPUT["dir"])
    return report


def round_matched_utility(report: EpisodeReport, rounds: int, env: RearrangementEnv) -> float:
    """
    Sum of the first ``rounds`` stage utilities of an episode.

    A shorter episode is padded: after completion the robots idle at the goal
    and collect its reward; a stuck episode keeps repeating its last round.
    """
    utilities = report.stage_utilities()[:rounds]
    missing = rounds - len(utilities)
    if missing > 0:
        if report.status == EPISODE_STATUSES["COMPLETE"]:
            filler = env.state_reward(report.final_state)
        elif report.rounds:
            filler = report.rounds[-1].utility_follower
        else:
            filler = env.state_reward(report.final_state)
        utilities = utilities + [filler] * missing
    return float(sum(utilities))


def compare_cases(
    case_paths: Sequence[CasePath],
    out_csv: Optional[CasePath] = None,
    planners: Sequence[str] = (PLANNERS["GREEDY"], PLANNERS["SGCM"]),
    **overrides,
) -> List[ComparisonRow]:
    """
    Run every planner on every case with the case's seed and compare them.

    A case that fails is recorded with status "error" and the remaining cases
    still run. Scenario files are only read.
    """
    if not case_paths:
        raise ValidationError("compare needs at least one case")

    rows = []
    for path in case_paths:
        row = ComparisonRow(case=Path(path).stem)
        reports: Dict[str, EpisodeReport] = {}
        scenario = None
        try:
            scenario = apply_overrides(load_scenario(path), **overrides)
            row.case = scenario.name
            for planner in planners:
                reports[planner] = run_episode(apply_overrides(scenario, planner=planner))
        except StackelguideError as e:
            handle_exception(e, logger.warning)
            for planner in planners:
                if planner not in reports:
                    row.outcomes[planner] = PlannerOutcome(EPISODE_STATUSES["ERROR"], 0)

        if scenario is not None and reports:
            sgcm = reports.get(PLANNERS["SGCM"])
            matched = min(sgcm.total_rounds if sgcm else scenario.max_rounds, scenario.max_rounds)
            env = scenario.env()
            for planner, report in reports.items():
                row.outcomes[planner] = PlannerOutcome(
                    report.status, report.total_rounds, round_matched_utility(report, matched, env)
                )
        logger.info(f"Compared {row.case}: {row.to_row()}")
        rows.append(row)

    if out_csv is not None:
        write_csv(out_csv, COMPARISON_CSV_COLUMNS, (r.to_row() for r in rows))
    return rows


def sweep_disturbances(
    case_paths: Sequence[CasePath],
    seeds: Sequence[int],
    disturb_round: int = 2,
    out_csv: Optional[CasePath] = None,
    **overrides,
) -> List[SweepRow]:
    """
    SGCM under follower deviations: per case and seed, an undisturbed run, a
    run with a random deviation at ``disturb_round``, and a zero-trust run.
    """
    models = {
        model.name: model
        for model in (
            FollowerModel.obedient(),
            FollowerModel.random_at_rounds([disturb_round]),
            FollowerModel.zero_trust(),
        )
    }
    rows = []
    for path in case_paths:
        base = apply_overrides(load_scenario(path), planner=PLANNERS["SGCM"], **overrides)
        for seed in seeds:
            baseline = None
            for label, model in models.items():
                report = run_episode(apply_overrides(base, seed=seed, follower_model=model))
                if baseline is None:
                    baseline = report.total_rounds
                rows.append(SweepRow(base.name, label, seed, report.status, report.total_rounds, baseline))
        logger.info(f"Swept {base.name} over {len(seeds)} seeds")

    if out_csv is not None:
        write_csv(out_csv, SWEEP_CSV_COLUMNS, (r.to_row() for r in rows))
    return rows
