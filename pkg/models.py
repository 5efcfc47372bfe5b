"""
Data models for finite-horizon stochastic Stackelberg games.

The types here know nothing about the rearrangement game: states are any
hashable value, actions are whatever a game's action lists hold, and utilities
are plain floats. The rearrangement environment and the planners build on them.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import (
    Any,
    Dict,
    Hashable,
    Iterable,
    Iterator,
    List,
    Mapping,
    Optional,
    Protocol,
    Sequence,
    Tuple,
    Union,
    runtime_checkable,
)

import numpy as np

from constants import EPISODE_STATUSES, SCHEMA_VERSION, TOLERANCES
from exceptions import ContractViolationError, MissingValueError, ValidationError

logger = logging.getLogger(__name__)

# A canonical, hashable, totally ordered encoding of a concrete game state.
StateId = Hashable

UtilityPair = Tuple[float, float]
Distribution = Tuple[Tuple[StateId, float], ...]


@runtime_checkable
class GameSpec(Protocol):
    """Finite-horizon two-player stochastic game with a leader (A) and a follower (B)."""

    horizon: int
    discount: float

    def leader_actions(self, state: StateId) -> Sequence[Any]:
        ...

    def follower_actions(self, state: StateId) -> Sequence[Any]:
        ...

    def transition(self, state: StateId, leader_action: Any, follower_action: Any) -> Distribution:
        ...

    def stage_utility(self, state: StateId, leader_action: Any, follower_action: Any) -> UtilityPair:
        ...

    def terminal_utility(self, state: StateId) -> UtilityPair:
        ...


def normalize_distribution(outcomes: Iterable[Tuple[StateId, float]]) -> Distribution:
    """
    Merge duplicate successors and drop floating-point dust from a distribution.

    Args:
        outcomes: (state, probability) pairs, possibly with repeated states

    Returns:
        Tuple of (state, probability) pairs in first-seen order, each state once

    Raises:
        ContractViolationError: If a probability is negative or the total is not 1
    """
    merged: Dict[StateId, float] = {}
    for state, probability in outcomes:
        probability = float(probability)
        if probability < -TOLERANCES["PROBABILITY_DUST"] or not math.isfinite(probability):
            raise ContractViolationError(f"Invalid transition probability {probability} for {state!r}")
        merged[state] = merged.get(state, 0.0) + probability

    total = sum(merged.values())
    if abs(total - 1.0) > TOLERANCES["POLICY_SUM"]:
        raise ContractViolationError(f"Transition probabilities sum to {total}, expected 1")

    kept = {s: p for s, p in merged.items() if p >= TOLERANCES["PROBABILITY_DUST"]}
    if len(kept) != len(merged):
        kept_total = sum(kept.values())
        kept = {s: p / kept_total for s, p in kept.items()}
    return tuple(kept.items())


@dataclass(frozen=True)
class MixedPolicy:
    """Leader mixed strategy over the action list of one state."""

    probabilities: Tuple[float, ...]

    def __post_init__(self):
        probabilities = tuple(float(p) for p in self.probabilities)
        object.__setattr__(self, "probabilities", probabilities)
        if not probabilities:
            raise ContractViolationError("Mixed policy must cover at least one action")
        tol = TOLERANCES["POLICY_SUM"]
        if any(p < -tol or p > 1.0 + tol or not math.isfinite(p) for p in probabilities):
            raise ContractViolationError(f"Policy entries must lie in [0, 1]: {probabilities}")
        if abs(sum(probabilities) - 1.0) > tol:
            raise ContractViolationError(f"Policy entries sum to {sum(probabilities)}, expected 1")

    @classmethod
    def pure(cls, index: int, size: int) -> "MixedPolicy":
        """Policy that plays action ``index`` with probability one."""
        if not 0 <= index < size:
            raise ContractViolationError(f"Pure action {index} outside [0, {size})")
        return cls(tuple(1.0 if i == index else 0.0 for i in range(size)))

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "MixedPolicy":
        """
        Build a policy from a raw solver vector.

        Tiny negative entries are clipped to zero and the vector renormalized,
        so LP round-off never produces an invalid policy.
        """
        vector = np.clip(np.asarray(weights, dtype=float), 0.0, 1.0)
        vector[vector < TOLERANCES["PROBABILITY_DUST"]] = 0.0
        total = vector.sum()
        if total <= 0.0:
            raise ContractViolationError("Policy weights sum to zero")
        return cls(tuple(vector / total))

    def __len__(self) -> int:
        return len(self.probabilities)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probabilities, dtype=float)

    def support(self) -> List[int]:
        return [i for i, p in enumerate(self.probabilities) if p > TOLERANCES["BEST_RESPONSE"]]

    def sample(self, uniform: float) -> int:
        """Map a uniform draw in [0, 1) to an action index by inverse CDF."""
        cumulative = 0.0
        for index, probability in enumerate(self.probabilities):
            cumulative += probability
            if uniform < cumulative:
                return index
        # Round-off can leave the cumulative sum just below one
        return max(i for i, p in enumerate(self.probabilities) if p > 0.0)

    def to_dict(self) -> List[float]:
        return list(self.probabilities)


@dataclass(frozen=True)
class PurePolicy:
    """Follower pure strategy: one index into the follower's action list."""

    index: int
    size: int

    def __post_init__(self):
        if not 0 <= self.index < self.size:
            raise ContractViolationError(f"Follower action {self.index} outside [0, {self.size})")

    def __int__(self) -> int:
        return self.index


@dataclass
class ValueTable:
    """Stage-t values (v^A, v^B) defined exactly on the reachable set of that stage."""

    stage: int
    values: Dict[StateId, UtilityPair] = field(default_factory=dict)

    def __getitem__(self, state: StateId) -> UtilityPair:
        try:
            return self.values[state]
        except KeyError:
            raise MissingValueError(state, self.stage) from None

    def __contains__(self, state: StateId) -> bool:
        return state in self.values

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self) -> Iterator[StateId]:
        return iter(self.values)

    def set(self, state: StateId, leader_value: float, follower_value: float) -> None:
        self.values[state] = (float(leader_value), float(follower_value))

    def covers_exactly(self, states: Iterable[StateId]) -> bool:
        return set(self.values) == set(states)


@dataclass(frozen=True)
class TabularGame:
    """
    A GameSpec given by explicit tables.

    Keys of ``transitions`` and ``utilities`` are (state, leader action,
    follower action). Terminal utilities default to zero.
    """

    horizon: int
    discount: float
    leader_action_table: Mapping[StateId, Tuple[Any, ...]]
    follower_action_table: Mapping[StateId, Tuple[Any, ...]]
    transitions: Mapping[Tuple[StateId, Any, Any], Distribution]
    utilities: Mapping[Tuple[StateId, Any, Any], UtilityPair]
    terminal: Mapping[StateId, UtilityPair] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.discount <= 1.0:
            raise ValidationError(f"discount must lie in (0, 1], got {self.discount}")
        for table in (self.leader_action_table, self.follower_action_table):
            for state, actions in table.items():
                if not actions:
                    raise ValidationError(f"Empty action list at state {state!r}")
        for key, outcomes in self.transitions.items():
            total = sum(p for _, p in outcomes)
            if any(p < 0 for _, p in outcomes) or abs(total - 1.0) > TOLERANCES["DISTRIBUTION_SUM"]:
                raise ValidationError(f"Transition at {key!r} is not a distribution (sum {total})")

    def leader_actions(self, state: StateId) -> Sequence[Any]:
        return self.leader_action_table[state]

    def follower_actions(self, state: StateId) -> Sequence[Any]:
        return self.follower_action_table[state]

    def transition(self, state: StateId, leader_action: Any, follower_action: Any) -> Distribution:
        return tuple(self.transitions[(state, leader_action, follower_action)])

    def stage_utility(self, state: StateId, leader_action: Any, follower_action: Any) -> UtilityPair:
        return self.utilities[(state, leader_action, follower_action)]

    def terminal_utility(self, state: StateId) -> UtilityPair:
        return self.terminal.get(state, (0.0, 0.0))


def expected_stage_value(
    payoff: Union[np.ndarray, Sequence[Sequence[float]]],
    leader_policy: Union[MixedPolicy, Sequence[float]],
    follower_action: Union[PurePolicy, int],
) -> float:
    """
    Expected payoff of a leader mixed policy against a follower pure action.

    Args:
        payoff: Matrix indexed [leader action][follower action]
        leader_policy: Probabilities over the matrix rows
        follower_action: Column index

    Returns:
        sum_i leader_policy[i] * payoff[i][follower_action]

    Raises:
        ContractViolationError: On dimension mismatch

    Example:
        >>> expected_stage_value([[2, 4], [1, 3]], (0.5, 0.5), 1)
        3.5
    """
    matrix = np.asarray(payoff, dtype=float)
    if matrix.ndim != 2:
        raise ContractViolationError(f"Payoff must be a matrix, got shape {matrix.shape}")
    weights = leader_policy.as_array() if isinstance(leader_policy, MixedPolicy) else np.asarray(leader_policy, dtype=float)
    column = int(follower_action)
    if weights.shape != (matrix.shape[0],):
        raise ContractViolationError(
            f"Leader policy has {weights.size} entries for a matrix with {matrix.shape[0]} rows"
        )
    if not 0 <= column < matrix.shape[1]:
        raise ContractViolationError(f"Follower column {column} outside [0, {matrix.shape[1]})")
    return float(weights @ matrix[:, column])


def discounted_return(
    stage_utilities: Sequence[float],
    terminal_utility: float,
    gamma: float,
    horizon: int,
) -> float:
    """
    Accumulated utility gamma^T * terminal + sum_t gamma^t * u_t.

    Raises:
        ContractViolationError: If the list length differs from the horizon or gamma is out of range
    """
    if len(stage_utilities) != horizon:
        raise ContractViolationError(
            f"Expected {horizon} stage utilities, got {len(stage_utilities)}"
        )
    if not 0.0 < gamma <= 1.0:
        raise ContractViolationError(f"gamma must lie in (0, 1], got {gamma}")
    total = gamma ** horizon * float(terminal_utility)
    for t, utility in enumerate(stage_utilities):
        total += gamma ** t * float(utility)
    return total


def _encode(value: Any) -> Any:
    if value is None:
        return None
    if hasattr(value, "to_dict"):
        return value.to_dict()
    return str(value)


@dataclass
class RoundRecord:
    """One executed interaction round of an episode."""

    round_index: int
    state_before: StateId
    leader_intent: Any
    leader_executed: Any
    follower_recommended: Any
    follower_chosen: Any
    follower_executed: Any
    leader_success: bool
    follower_success: bool
    utility_leader: float
    utility_follower: float
    state_after: StateId
    dist_to_goal: int
    disturbed: bool = False
    degraded: bool = False
    planning_ties: int = 0
    leader_policy: Optional[MixedPolicy] = None

    def to_dict(self) -> dict:
        return {
            "round": self.round_index,
            "state_before": _encode(self.state_before),
            "leader_intent": _encode(self.leader_intent),
            "leader_exec": _encode(self.leader_executed),
            "follower_rec": _encode(self.follower_recommended),
            "follower_chosen": _encode(self.follower_chosen),
            "follower_exec": _encode(self.follower_executed),
            "leader_success": self.leader_success,
            "follower_success": self.follower_success,
            "disturbed": self.disturbed,
            "degraded": self.degraded,
            "planning_ties": self.planning_ties,
            "leader_policy": None if self.leader_policy is None else self.leader_policy.to_dict(),
            "u_A": self.utility_leader,
            "u_B": self.utility_follower,
            "state_after": _encode(self.state_after),
            "dist_to_goal": self.dist_to_goal,
        }


@dataclass
class EpisodeReport:
    """
    Per-round log of one episode plus its outcome.

    Episode accounting is undiscounted: the total utility is the plain sum of
    the realized stage utilities.
    """

    planner: str
    seed: int
    initial_state: StateId
    rounds: List[RoundRecord] = field(default_factory=list)
    status: str = EPISODE_STATUSES["INCOMPLETE"]
    case: str = ""
    follower_model: str = "obedient"

    @property
    def total_rounds(self) -> int:
        return len(self.rounds)

    @property
    def final_state(self) -> StateId:
        return self.rounds[-1].state_after if self.rounds else self.initial_state

    @property
    def total_utility(self) -> float:
        """Sum of the task (follower) stage utilities over all rounds."""
        return float(sum(r.utility_follower for r in self.rounds))

    @property
    def total_utility_leader(self) -> float:
        return float(sum(r.utility_leader for r in self.rounds))

    def stage_utilities(self) -> List[float]:
        return [r.utility_follower for r in self.rounds]

    def disturbed_rounds(self) -> List[int]:
        return [r.round_index for r in self.rounds if r.disturbed]

    def append(self, record: RoundRecord) -> None:
        """Add a round, enforcing that it continues from the previous state."""
        if record.state_before != self.final_state:
            raise ContractViolationError(
                f"Round {record.round_index} starts from a state that differs from the previous round's end"
            )
        self.rounds.append(record)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "case": self.case,
            "planner": self.planner,
            "follower_model": self.follower_model,
            "seed": self.seed,
            "status": self.status,
            "total_rounds": self.total_rounds,
            "total_utility": self.total_utility,
            "total_utility_leader": self.total_utility_leader,
            "initial_state": _encode(self.initial_state),
            "final_state": _encode(self.final_state),
            "rounds": [r.to_dict() for r in self.rounds],
        }
