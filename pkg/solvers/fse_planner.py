"""
Feedback Stackelberg planner.

``plan_step`` predicts every state reachable within the horizon (all joint
actions and all four success/failure branches), then solves one stage
Stackelberg game per (stage, state) backwards from the terminal values.
``rolling_horizon_run`` replans from the observed state every round and
executes only the first stage of each plan.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import config
from constants import EPISODE_STATUSES, PLANNERS
from exceptions import ContractViolationError, ResourceLimitError, ValidationError
from models import (
    EpisodeReport,
    GameSpec,
    MixedPolicy,
    PurePolicy,
    StateId,
    ValueTable,
    normalize_distribution,
)
from rearrange.baselines import follower_execute, play_round, round_rng
from solvers.stage_solver import StageSolution, StateExpansion, build_stage_matrices, solve_stage

logger = logging.getLogger(__name__)


@dataclass
class ReachableSets:
    """
    States reachable at each stage 0..T, deduplicated within a level.

    ``expansions`` caches, per expanded state, the stage utilities and
    successor distributions of every joint action index pair.
    """

    levels: List[List[StateId]]
    expansions: Dict[StateId, StateExpansion] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.levels) - 1

    def sizes(self) -> List[int]:
        return [len(level) for level in self.levels]

    def total_states(self) -> int:
        return sum(self.sizes())


@dataclass
class PolicyPlan:
    """Stage solutions per (stage, state) and values per stage, the latter including stage T."""

    solutions: List[Dict[StateId, StageSolution]]
    values: List[ValueTable]
    solve_counts: List[int] = field(default_factory=list)
    tie_counts: List[int] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return len(self.solutions)

    def solution(self, stage: int, state: StateId) -> StageSolution:
        try:
            return self.solutions[stage][state]
        except KeyError:
            raise ContractViolationError(f"No plan for state {state!r} at stage {stage}") from None

    def leader_policy(self, stage: int, state: StateId) -> MixedPolicy:
        return self.solution(stage, state).leader_policy

    def follower_action(self, stage: int, state: StateId) -> PurePolicy:
        return self.solution(stage, state).follower_action

    def value(self, stage: int, state: StateId) -> Tuple[float, float]:
        return self.values[stage][state]


@dataclass
class PlanStep:
    """Stage-0 decision at the current state plus planning diagnostics."""

    leader_policy: MixedPolicy
    follower_action: PurePolicy
    leader_actions: Sequence[Any]
    follower_actions: Sequence[Any]
    solution: StageSolution
    diagnostics: Dict[str, Any]

    def __iter__(self):
        return iter((self.leader_policy, self.follower_action, self.diagnostics))


def _expand(state: StateId, game: GameSpec) -> StateExpansion:
    expansion = {}
    for i, a in enumerate(game.leader_actions(state)):
        for j, b in enumerate(game.follower_actions(state)):
            utility = game.stage_utility(state, a, b)
            expansion[(i, j)] = (utility, normalize_distribution(game.transition(state, a, b)))
    return expansion


def forward_reachability(
    s0: StateId,
    game: GameSpec,
    cap: Optional[int] = None,
) -> ReachableSets:
    """
    Breadth-first prediction of the states reachable at stages 0..T.

    Args:
        s0: Initial state
        game: The game
        cap: Largest total number of states across all levels
            (default: config.PLANNER["reachability_cap"])

    Raises:
        ResourceLimitError: If the sets grow beyond the cap
    """
    cap = config.PLANNER["reachability_cap"] if cap is None else cap
    sets = ReachableSets(levels=[[s0]])
    total = 1

    for t in range(game.horizon):
        successors: Dict[StateId, None] = {}
        for state in sets.levels[t]:
            expansion = sets.expansions.get(state)
            if expansion is None:
                expansion = _expand(state, game)
                sets.expansions[state] = expansion
            for _, outcomes in expansion.values():
                for successor, probability in outcomes:
                    if probability > 0.0:
                        successors[successor] = None
        sets.levels.append(list(successors))
        total += len(successors)
        if total > cap:
            raise ResourceLimitError(
                f"Reachable sets hold more than {cap} states by stage {t + 1}; use a smaller horizon"
            )

    logger.debug(f"Reachable set sizes: {sets.sizes()} ({sets.total_states()} states)")
    return sets


def backward_induction(
    sets: ReachableSets,
    game: GameSpec,
    method: Optional[str] = None,
    big_M: Optional[float] = None,
) -> PolicyPlan:
    """
    Solve the stage games from stage T-1 down to 0.

    Values at stage T are the terminal utilities. At every earlier (t, s) the
    stage matrices fold the discounted expected next-stage values, and the
    stage solution's values become v_t(s).
    """
    method = method or config.PLANNER["solver"]
    horizon = sets.horizon
    if horizon != game.horizon:
        raise ContractViolationError(f"Reachable sets span {horizon} stages, the game {game.horizon}")

    values: List[Optional[ValueTable]] = [None] * (horizon + 1)
    terminal = ValueTable(stage=horizon)
    for state in sets.levels[horizon]:
        terminal.set(state, *game.terminal_utility(state))
    values[horizon] = terminal

    solutions: List[Dict[StateId, StageSolution]] = [dict() for _ in range(horizon)]
    solve_counts = [0] * horizon
    tie_counts = [0] * horizon

    for t in range(horizon - 1, -1, -1):
        table = ValueTable(stage=t)
        for state in sets.levels[t]:
            expansion = sets.expansions.get(state)
            matrices = build_stage_matrices(state, game, values[t + 1], expansion)
            solution = solve_stage(matrices, method, big_M)
            solutions[t][state] = solution
            table.set(state, solution.leader_value, solution.follower_value)
            solve_counts[t] += 1
            if solution.ties:
                tie_counts[t] += 1
        values[t] = table
        logger.debug(f"Stage {t}: solved {solve_counts[t]} stage games, {tie_counts[t]} with follower ties")

    return PolicyPlan(solutions, values, solve_counts, tie_counts)


def plan_step(
    state: StateId,
    game: GameSpec,
    method: Optional[str] = None,
    cap: Optional[int] = None,
) -> PlanStep:
    """
    Plan from ``state`` and return the stage-0 leader policy and follower recommendation.

    Diagnostics hold the reachable-set sizes, per-stage solve and tie counts,
    the stage-0 values and the stage-0 tie count at ``state``.
    """
    sets = forward_reachability(state, game, cap)
    plan = backward_induction(sets, game, method)
    solution = plan.solution(0, state)
    diagnostics = {
        "reachable_sizes": sets.sizes(),
        "solve_counts": plan.solve_counts,
        "tie_counts": plan.tie_counts,
        "stage0_ties": solution.ties,
        "leader_value": solution.leader_value,
        "follower_value": solution.follower_value,
        "method": solution.method,
    }
    return PlanStep(
        leader_policy=solution.leader_policy,
        follower_action=solution.follower_action,
        leader_actions=tuple(game.leader_actions(state)),
        follower_actions=tuple(game.follower_actions(state)),
        solution=solution,
        diagnostics=diagnostics,
    )


def rolling_horizon_run(
    env,
    game_factory: Callable[[StateId], GameSpec],
    follower_model,
    max_rounds: int,
    rng_seed: int,
    initial_state: StateId,
    method: Optional[str] = None,
    cap: Optional[int] = None,
    case: str = "",
) -> EpisodeReport:
    """
    Replan every round, execute the first stage, observe, repeat.

    The leader samples her action from the stage-0 mixed policy, the follower
    model turns the recommendation into an intended action, and both moves may
    fail. The episode stops at the goal (status complete) or after
    ``max_rounds`` rounds (status incomplete).

    Args:
        env: RearrangementEnv the episode is played in
        game_factory: Builds the planning game for the current state
        follower_model: FollowerModel applied to every recommendation
        max_rounds: Round budget
        rng_seed: Episode seed; round k draws from round_rng(rng_seed, k)
        initial_state: Starting state
        method: Stage solver method
        cap: Reachability cap
        case: Case name recorded in the report
    """
    if max_rounds < 1:
        raise ValidationError(f"max_rounds must be >= 1, got {max_rounds}")

    report = EpisodeReport(
        PLANNERS["SGCM"], rng_seed, initial_state, case=case, follower_model=follower_model.name
    )
    state = initial_state
    logger.info(
        f"SGCM episode {case or '-'} started (seed {rng_seed}, follower {follower_model.name}, "
        f"distance {env.distance_to_goal(state)})"
    )

    for round_index in range(1, max_rounds + 1):
        if env.is_goal(state):
            break
        game = game_factory(state)
        step = plan_step(state, game, method, cap)
        if step.diagnostics["stage0_ties"]:
            logger.warning(
                f"Round {round_index}: follower indifferent among {step.diagnostics['stage0_ties'] + 1} "
                f"recommendations at the current state, optimistic tie-break applied"
            )

        rng = round_rng(rng_seed, round_index)
        leader_intent = step.leader_actions[step.leader_policy.sample(rng.random())]
        recommended = step.follower_actions[step.follower_action.index]

        def decide(s_mid, round_rng_, _round=round_index, _rec=recommended):
            return follower_execute(follower_model, _rec, s_mid, _round, round_rng_, env)

        record = play_round(
            env,
            state,
            round_index,
            leader_intent,
            rng,
            decide,
            follower_recommended=recommended,
            leader_policy=step.leader_policy,
            planning_ties=step.diagnostics["stage0_ties"],
        )
        report.append(record)
        state = record.state_after
        logger.info(
            f"Round {round_index}: leader {record.leader_executed} (intent {record.leader_intent}), "
            f"follower {record.follower_executed} (rec {recommended}), u_B={record.utility_follower:.3f}, "
            f"distance {record.dist_to_goal}, reachable {step.diagnostics['reachable_sizes']}"
        )

    report.status = EPISODE_STATUSES["COMPLETE"] if env.is_goal(state) else EPISODE_STATUSES["INCOMPLETE"]
    logger.info(
        f"SGCM episode {case or '-'} finished: {report.status} in {report.total_rounds} rounds, "
        f"utility {report.total_utility:.3f}"
    )
    return report
