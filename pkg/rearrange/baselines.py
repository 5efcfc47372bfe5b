"""
Greedy baseline, follower deviation models and the shared round protocol.

Both planners play rounds through ``play_round`` so that execution failures
and follower deviations are sampled identically: round k of an episode with
seed s draws from ``round_rng(s, k)`` in the fixed order leader policy sample,
leader failure, follower failure, follower-model draws.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from constants import EPISODE_STATUSES, FOLLOWER_MODELS, LIVELOCK, LIVELOCK_KINDS, PLANNERS
from exceptions import ValidationError
from models import EpisodeReport, MixedPolicy, RoundRecord
from rearrange.environment import NOOP, GridState, MoveAction, RearrangementEnv, Robot
from utils.helpers import require_probability

logger = logging.getLogger(__name__)


class FollowerKind(Enum):
    OBEDIENT = FOLLOWER_MODELS["OBEDIENT"]
    RANDOM_AT_ROUNDS = FOLLOWER_MODELS["RANDOM_AT_ROUNDS"]
    RANDOM_WITH_PROB = FOLLOWER_MODELS["RANDOM_WITH_PROB"]
    ZERO_TRUST = FOLLOWER_MODELS["ZERO_TRUST"]


@dataclass(frozen=True)
class FollowerModel:
    """How the follower treats the leader's recommendation."""

    kind: FollowerKind = FollowerKind.OBEDIENT
    rounds: Tuple[int, ...] = ()
    probability: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "rounds", tuple(sorted(set(int(r) for r in self.rounds))))
        if any(r < 1 for r in self.rounds):
            raise ValidationError(f"Disturbance rounds must be >= 1, got {self.rounds}")
        require_probability(self.probability, "disturbance probability")

    @classmethod
    def obedient(cls) -> "FollowerModel":
        return cls()

    @classmethod
    def random_at_rounds(cls, rounds: Sequence[int]) -> "FollowerModel":
        return cls(FollowerKind.RANDOM_AT_ROUNDS, tuple(rounds))

    @classmethod
    def random_with_prob(cls, probability: float) -> "FollowerModel":
        return cls(FollowerKind.RANDOM_WITH_PROB, probability=probability)

    @classmethod
    def zero_trust(cls) -> "FollowerModel":
        return cls(FollowerKind.ZERO_TRUST)

    @classmethod
    def from_dict(cls, data: dict) -> "FollowerModel":
        try:
            kind = FollowerKind(data.get("kind", FOLLOWER_MODELS["OBEDIENT"]))
        except ValueError:
            raise ValidationError(f"follower_model.kind must be one of {[k.value for k in FollowerKind]}") from None
        return cls(kind, tuple(data.get("rounds", ())), float(data.get("probability", 0.0)))

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value}
        if self.kind is FollowerKind.RANDOM_AT_ROUNDS:
            data["rounds"] = list(self.rounds)
        if self.kind is FollowerKind.RANDOM_WITH_PROB:
            data["probability"] = self.probability
        return data

    @property
    def name(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class FollowerDecision:
    action: MoveAction
    disturbed: bool = False
    degraded: bool = False


def round_rng(seed: int, round_index: int) -> np.random.Generator:
    """Generator for one round, independent of how earlier rounds consumed randomness."""
    return np.random.default_rng([int(seed), int(round_index)])


# ============================================================================
# GREEDY ONE-STEP CHOICE
# ============================================================================

def _greedy_order(env: RearrangementEnv, action: MoveAction):
    ws = env.workspace
    return (ws.type_index(action.obj_type), ws.cell_index(action.source), ws.cell_index(action.target))


def _greedy_step(env: RearrangementEnv, s: GridState, robot: Robot) -> MoveAction:
    moves = sorted(
        (a for a in env.feasible_actions(s, robot) if not a.is_noop),
        key=lambda a: _greedy_order(env, a),
    )
    best, best_score = None, -np.inf
    for action in moves + [NOOP]:
        if action.is_noop:
            score = env.state_reward(s)
        else:
            score = env.state_reward(env.apply(s, action)) - env.action_cost(s, action)
        if score > best_score + 1e-12:
            best, best_score = action, score
    return best


def greedy_leader_step(s: GridState, env: RearrangementEnv) -> MoveAction:
    """
    Leader's myopic move: maximize reward of the resulting state minus own cost,
    ignoring the follower. Ties go to the first move by (type, source, target),
    the no-op last.
    """
    return _greedy_step(env, s, Robot.LEADER)


def greedy_follower_step(s_after_leader: GridState, env: RearrangementEnv) -> MoveAction:
    """Follower's myopic move on the post-leader state, axis moves only."""
    return _greedy_step(env, s_after_leader, Robot.FOLLOWER)


# ============================================================================
# FOLLOWER MODELS
# ============================================================================

def follower_execute(
    model: FollowerModel,
    recommended: MoveAction,
    s_after_leader: GridState,
    round_index: int,
    rng: np.random.Generator,
    env: RearrangementEnv,
) -> FollowerDecision:
    """
    Action the follower intends to execute given the leader's recommendation.

    Execution failure is not applied here. A recommendation that is no longer
    feasible after the leader's move degrades to the no-op.
    """
    feasible = env.feasible_actions(s_after_leader, Robot.FOLLOWER)

    if model.kind is FollowerKind.ZERO_TRUST:
        action = greedy_follower_step(s_after_leader, env)
        return FollowerDecision(action, disturbed=action != recommended)

    triggered = False
    if model.kind is FollowerKind.RANDOM_AT_ROUNDS:
        triggered = round_index in model.rounds
    elif model.kind is FollowerKind.RANDOM_WITH_PROB:
        triggered = bool(rng.random() < model.probability)

    if triggered:
        candidates = [a for a in feasible if a != recommended] or list(feasible)
        action = candidates[int(rng.integers(len(candidates)))]
        return FollowerDecision(action, disturbed=True)

    if recommended in feasible:
        return FollowerDecision(recommended)
    logger.warning(f"Round {round_index}: recommendation {recommended} infeasible after the leader's move, follower idles")
    return FollowerDecision(NOOP, degraded=True)


# ============================================================================
# ROUND PROTOCOL
# ============================================================================

def play_round(
    env: RearrangementEnv,
    state: GridState,
    round_index: int,
    leader_intent: MoveAction,
    rng: np.random.Generator,
    follower_decide: Callable[[GridState, np.random.Generator], FollowerDecision],
    follower_recommended: Optional[MoveAction] = None,
    leader_policy: Optional[MixedPolicy] = None,
    planning_ties: int = 0,
) -> RoundRecord:
    """
    Execute one round: leader acts (maybe failing), follower decides on the
    intermediate state, follower acts (maybe failing).

    The caller has already drawn the leader policy sample from ``rng``.
    """
    leader_u = rng.random()
    follower_u = rng.random()

    leader_success = leader_intent.is_noop or leader_u >= env.costs.p_fail_A
    leader_executed = leader_intent if leader_success else NOOP
    s_mid = env.apply(state, leader_executed)

    decision = follower_decide(s_mid, rng)
    follower_success = decision.action.is_noop or follower_u >= env.costs.p_fail_B
    follower_executed = decision.action if follower_success else NOOP
    s_after = env.apply(s_mid, follower_executed)

    u_a, u_b = env.stage_utility(state, leader_executed, follower_executed)
    return RoundRecord(
        round_index=round_index,
        state_before=state,
        leader_intent=leader_intent,
        leader_executed=leader_executed,
        follower_recommended=follower_recommended,
        follower_chosen=decision.action,
        follower_executed=follower_executed,
        leader_success=leader_success,
        follower_success=follower_success,
        utility_leader=u_a,
        utility_follower=u_b,
        state_after=s_after,
        dist_to_goal=env.distance_to_goal(s_after),
        disturbed=decision.disturbed,
        degraded=decision.degraded,
        planning_ties=planning_ties,
        leader_policy=leader_policy,
    )


# ============================================================================
# LIVELOCK DETECTION
# ============================================================================

def _repeats_without_failure(previous: RoundRecord, current: RoundRecord) -> bool:
    return (
        previous.state_before == current.state_before
        and previous.leader_intent == current.leader_intent
        and previous.follower_chosen == current.follower_chosen
        and previous.leader_success and previous.follower_success
        and current.leader_success and current.follower_success
    )


def _in_state_cycle(states: List[GridState]) -> bool:
    max_period = LIVELOCK["MAX_CYCLE_PERIOD"]
    repetitions = LIVELOCK["MIN_CYCLE_REPETITIONS"]
    for period in range(1, max_period + 1):
        window = period * repetitions
        if len(states) < window:
            break
        tail = states[-window:]
        if all(tail[i] == tail[i + period] for i in range(window - period)):
            return True
    return False


def livelock_kind(rounds: List[RoundRecord]) -> Optional[str]:
    """
    Why the interaction no longer makes progress, or None while it does.

    ``"repeat"``: two consecutive rounds repeat the same state and intents
    without any execution failure. ``"cycle"``: the visited states cycle with
    period <= 4 at least 3 times.
    """
    if len(rounds) >= 2 and _repeats_without_failure(rounds[-2], rounds[-1]):
        return LIVELOCK_KINDS["REPEAT"]
    states = [rounds[0].state_before] + [r.state_after for r in rounds] if rounds else []
    return LIVELOCK_KINDS["CYCLE"] if _in_state_cycle(states) else None


# ============================================================================
# GREEDY EPISODE
# ============================================================================

def greedy_run(
    env: RearrangementEnv,
    initial_state: GridState,
    max_rounds: int,
    seed: int,
    case: str = "",
) -> EpisodeReport:
    """
    Play the non-cooperative greedy protocol until the goal, a livelock, or
    the round budget.

    Each robot maximizes its own one-step utility; the follower sees the
    leader's executed move first.
    """
    if max_rounds < 1:
        raise ValidationError(f"max_rounds must be >= 1, got {max_rounds}")

    report = EpisodeReport(PLANNERS["GREEDY"], seed, initial_state, case=case, follower_model="greedy")
    state = initial_state
    logger.info(f"Greedy episode {case or '-'} started (seed {seed}, distance {env.distance_to_goal(state)})")

    def decide(s_mid, _rng):
        return FollowerDecision(greedy_follower_step(s_mid, env))

    for round_index in range(1, max_rounds + 1):
        if env.is_goal(state):
            break
        rng = round_rng(seed, round_index)
        rng.random()  # policy sample slot, keeps failure draws aligned with the planner
        record = play_round(env, state, round_index, greedy_leader_step(state, env), rng, decide)
        report.append(record)
        state = record.state_after
        logger.debug(
            f"Greedy round {round_index}: {record.leader_executed} / {record.follower_executed}, "
            f"u={record.utility_follower:.3f}"
        )
        kind = None if env.is_goal(state) else livelock_kind(report.rounds)
        if kind:
            report.status = EPISODE_STATUSES["STUCK"]
            logger.info(f"Greedy episode {case or '-'} stuck after {round_index} rounds ({kind})")
            return report

    report.status = EPISODE_STATUSES["COMPLETE"] if env.is_goal(state) else EPISODE_STATUSES["INCOMPLETE"]
    logger.info(
        f"Greedy episode {case or '-'} finished: {report.status} in {report.total_rounds} rounds, "
        f"utility {report.total_utility:.3f}"
    )
    return report
