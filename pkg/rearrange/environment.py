"""
Grid rearrangement game.

Typed, indistinguishable objects sit in the cells of a rows x cols workspace.
The leader robot moves one object per stage to any of the 8 neighbouring
cells, the follower only along the 4 axis directions. Each move costs a base
amount that doubles when the source cell is crowded, and the state is rewarded
for being close to the goal layout. Within a stage the leader acts first and
the follower reacts on the intermediate state; each robot's move fails
independently and turns into a no-op.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Mapping, Optional, Tuple

import config
from constants import (
    AXIS_DIRECTIONS,
    DEFAULT_OBJECT_TYPES,
    DIAGONAL_DIRECTIONS,
    DISTANCE_METRICS,
    GUIDANCE_MODES,
    NOOP_LABEL,
)
from exceptions import ContractViolationError, ValidationError
from models import Distribution, UtilityPair
from utils.helpers import require_probability, stable_digest

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]

class Robot(Enum):
    LEADER = "A"
    FOLLOWER = "B"


@dataclass(frozen=True)
class Workspace:
    """Partitioned workspace: grid dimensions, object types and one goal cell per type."""

    rows: int = 3
    cols: int = 3
    types: Tuple[str, ...] = DEFAULT_OBJECT_TYPES
    goals: Tuple[Cell, ...] = ((2, 0), (2, 1), (2, 2))

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        object.__setattr__(self, "goals", tuple(tuple(int(v) for v in g) for g in self.goals))
        if self.rows < 1 or self.cols < 1:
            raise ValidationError(f"Workspace must be at least 1x1, got {self.rows}x{self.cols}")
        if not self.types:
            raise ValidationError("Workspace needs at least one object type")
        if len(set(self.types)) != len(self.types):
            raise ValidationError(f"Object types must be distinct: {self.types}")
        if len(self.goals) != len(self.types):
            raise ValidationError(f"Expected {len(self.types)} goal cells, got {len(self.goals)}")
        for obj_type, goal in zip(self.types, self.goals):
            if not self.in_bounds(goal):
                raise ValidationError(f"Goal cell {goal} of type {obj_type} is out of bounds")
        if len(set(self.goals)) != len(self.goals):
            raise ValidationError(f"Goal cells must be distinct: {self.goals}")

    @classmethod
    def from_goal_map(cls, rows: int, cols: int, goal_map: Mapping[str, Cell]) -> "Workspace":
        types = tuple(goal_map)
        return cls(rows, cols, types, tuple(tuple(goal_map[t]) for t in types))

    @property
    def num_cells(self) -> int:
        return self.rows * self.cols

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.rows and 0 <= cell[1] < self.cols

    def cell_index(self, cell: Cell) -> int:
        return cell[0] * self.cols + cell[1]

    def cell_at(self, index: int) -> Cell:
        return divmod(index, self.cols)

    def type_index(self, obj_type: str) -> int:
        try:
            return self.types.index(obj_type)
        except ValueError:
            raise ValidationError(f"Unknown object type {obj_type!r}; expected one of {self.types}") from None

    def goal_cell(self, obj_type: str) -> Cell:
        return self.goals[self.type_index(obj_type)]

    def goal_map(self) -> Dict[str, Cell]:
        return dict(zip(self.types, self.goals))


@dataclass(frozen=True, order=True)
class GridState:
    """
    Object counts per (cell, type), flattened row-major by cell, type-major within a cell.

    Equal layouts compare equal and hash equal, so the state doubles as its own
    canonical identifier.
    """

    num_types: int
    counts: Tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if self.num_types < 1 or len(counts) % self.num_types:
            raise ContractViolationError(f"{len(counts)} counts do not split into {self.num_types} types")
        if any(c < 0 for c in counts):
            raise ContractViolationError(f"Negative object count in {counts}")

    @classmethod
    def empty(cls, ws: Workspace) -> "GridState":
        return cls(len(ws.types), (0,) * (ws.num_cells * len(ws.types)))

    @classmethod
    def from_placements(cls, ws: Workspace, placements: Mapping[Tuple[str, Cell], int]) -> "GridState":
        """Build from {(type, (row, col)): count}."""
        counts = [0] * (ws.num_cells * len(ws.types))
        for (obj_type, cell), count in placements.items():
            if not ws.in_bounds(cell):
                raise ValidationError(f"Cell {cell} is out of bounds")
            counts[ws.cell_index(cell) * len(ws.types) + ws.type_index(obj_type)] += int(count)
        return cls(len(ws.types), tuple(counts))

    @property
    def num_cells(self) -> int:
        return len(self.counts) // self.num_types

    def count(self, cell_index: int, type_index: int) -> int:
        return self.counts[cell_index * self.num_types + type_index]

    def cell_total(self, cell_index: int) -> int:
        start = cell_index * self.num_types
        return sum(self.counts[start:start + self.num_types])

    def type_totals(self) -> Tuple[int, ...]:
        return tuple(sum(self.counts[t::self.num_types]) for t in range(self.num_types))

    def total_objects(self) -> int:
        return sum(self.counts)

    def moved(self, type_index: int, source: int, target: int) -> "GridState":
        counts = list(self.counts)
        counts[source * self.num_types + type_index] -= 1
        counts[target * self.num_types + type_index] += 1
        return GridState(self.num_types, tuple(counts))

    def as_matrix(self) -> List[List[int]]:
        return [list(self.counts[i:i + self.num_types]) for i in range(0, len(self.counts), self.num_types)]

    def digest(self) -> str:
        return stable_digest(f"{self.num_types}|" + ",".join(str(c) for c in self.counts))

    def to_dict(self) -> List[List[int]]:
        return self.as_matrix()


@dataclass(frozen=True)
class MoveAction:
    """Move one object of ``obj_type`` between cells; all fields None is the no-op."""

    obj_type: Optional[str] = None
    source: Optional[Cell] = None
    target: Optional[Cell] = None

    def __post_init__(self):
        fields_set = [v is not None for v in (self.obj_type, self.source, self.target)]
        if any(fields_set) and not all(fields_set):
            raise ContractViolationError("A move needs a type, a source and a target")
        if self.source is not None:
            object.__setattr__(self, "source", tuple(self.source))
            object.__setattr__(self, "target", tuple(self.target))
            if self.source == self.target:
                raise ContractViolationError(f"Move source and target are both {self.source}")

    @property
    def is_noop(self) -> bool:
        return self.obj_type is None

    @property
    def is_diagonal(self) -> bool:
        if self.is_noop:
            return False
        return self.source[0] != self.target[0] and self.source[1] != self.target[1]

    @property
    def label(self) -> str:
        if self.is_noop:
            return NOOP_LABEL
        (r0, c0), (r1, c1) = self.source, self.target
        return f"{self.obj_type}:r{r0}c{c0}->r{r1}c{c1}"

    def __str__(self) -> str:
        return self.label


NOOP = MoveAction()


@dataclass(frozen=True)
class CostRewardConfig:
    """Move costs, state reward constants and execution failure probabilities."""

    base_cost_axis: float = config.COSTS["base_cost_axis"]
    base_cost_diagonal: float = config.COSTS["base_cost_diagonal"]
    crowding_threshold: int = config.COSTS["crowding_threshold"]
    reward_weight: float = config.COSTS["reward_weight"]
    reward_offset: float = config.COSTS["reward_offset"]
    p_fail_A: float = config.SCENARIO_DEFAULTS["p_fail"]
    p_fail_B: float = config.SCENARIO_DEFAULTS["p_fail"]
    distance_metric: str = config.COSTS["distance_metric"]

    def __post_init__(self):
        if self.base_cost_axis < 0 or self.base_cost_diagonal < 0:
            raise ValidationError("Move costs must be nonnegative")
        if self.crowding_threshold < 1:
            raise ValidationError(f"crowding_threshold must be >= 1, got {self.crowding_threshold}")
        if self.reward_weight < 0:
            raise ValidationError(f"reward_weight must be nonnegative, got {self.reward_weight}")
        require_probability(self.p_fail_A, "p_fail_A")
        require_probability(self.p_fail_B, "p_fail_B")
        if self.distance_metric not in DISTANCE_METRICS:
            raise ValidationError(f"distance_metric must be one of {DISTANCE_METRICS}, got {self.distance_metric!r}")


@dataclass(frozen=True)
class GuidanceConfig:
    """
    How the leader's utility relates to the follower's.

    ``aligned`` makes them identical; ``affine`` sets u_A = scale * u_B + offset.
    """

    mode: str = "aligned"
    scale: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.mode not in GUIDANCE_MODES:
            raise ValidationError(f"guidance mode must be one of {GUIDANCE_MODES}, got {self.mode!r}")
        if self.scale <= 0:
            raise ValidationError(f"guidance scale must be positive, got {self.scale}")

    def leader_utility(self, follower_utility: float) -> float:
        if self.mode == "aligned":
            return follower_utility
        return self.scale * follower_utility + self.offset


# ============================================================================
# RULES (pure functions of workspace, config and state)
# ============================================================================

def _directions(robot: Robot) -> Tuple[Cell, ...]:
    return AXIS_DIRECTIONS + DIAGONAL_DIRECTIONS if robot is Robot.LEADER else AXIS_DIRECTIONS


def feasible_actions(s: GridState, robot: Robot, ws: Workspace) -> List[MoveAction]:
    """
    Actions available to a robot: the no-op first, then one move per occupied
    (cell, type) and allowed in-bounds direction.
    """
    actions = [NOOP]
    for cell_index in range(ws.num_cells):
        if not s.cell_total(cell_index):
            continue
        row, col = ws.cell_at(cell_index)
        for type_index, obj_type in enumerate(ws.types):
            if not s.count(cell_index, type_index):
                continue
            for dr, dc in _directions(robot):
                target = (row + dr, col + dc)
                if ws.in_bounds(target):
                    actions.append(MoveAction(obj_type, (row, col), target))
    return actions


def is_feasible(s: GridState, a: MoveAction, ws: Workspace, robot: Robot = Robot.LEADER) -> bool:
    if a.is_noop:
        return True
    if not (ws.in_bounds(a.source) and ws.in_bounds(a.target)):
        return False
    if max(abs(a.source[0] - a.target[0]), abs(a.source[1] - a.target[1])) != 1:
        return False
    if robot is Robot.FOLLOWER and a.is_diagonal:
        return False
    return s.count(ws.cell_index(a.source), ws.type_index(a.obj_type)) > 0


def _cell_distance(a: Cell, b: Cell, metric: str) -> int:
    dr, dc = abs(a[0] - b[0]), abs(a[1] - b[1])
    return max(dr, dc) if metric == "chebyshev" else dr + dc


def distance_to_goal(s: GridState, ws: Workspace, metric: str = "manhattan") -> int:
    """Sum over objects of the distance from their cell to their type's goal cell."""
    total = 0
    for cell_index in range(ws.num_cells):
        cell = ws.cell_at(cell_index)
        for type_index, goal in enumerate(ws.goals):
            count = s.count(cell_index, type_index)
            if count:
                total += count * _cell_distance(cell, goal, metric)
    return total


def state_reward(s: GridState, cfg: CostRewardConfig, ws: Workspace) -> float:
    """reward_offset - reward_weight * distance_to_goal; larger when closer to the goal."""
    return cfg.reward_offset - cfg.reward_weight * distance_to_goal(s, ws, cfg.distance_metric)


def action_cost(s: GridState, a: MoveAction, cfg: CostRewardConfig, ws: Workspace) -> float:
    """
    Cost of executing ``a`` in ``s``; doubled when the source cell holds at
    least ``crowding_threshold`` objects before the move.

    Raises:
        ContractViolationError: If the action is not feasible in ``s``
    """
    if a.is_noop:
        return 0.0
    if not is_feasible(s, a, ws):
        raise ContractViolationError(f"Action {a} is not feasible in this state")
    base = cfg.base_cost_diagonal if a.is_diagonal else cfg.base_cost_axis
    if s.cell_total(ws.cell_index(a.source)) >= cfg.crowding_threshold:
        return 2.0 * base
    return base


def apply_action(s: GridState, a: MoveAction, ws: Workspace) -> GridState:
    if a.is_noop:
        return s
    if not is_feasible(s, a, ws):
        raise ContractViolationError(f"Action {a} is not feasible in this state")
    return s.moved(ws.type_index(a.obj_type), ws.cell_index(a.source), ws.cell_index(a.target))


def apply_joint(
    s: GridState,
    leader_executed: MoveAction,
    follower_intended: MoveAction,
    ws: Workspace,
) -> Tuple[GridState, MoveAction]:
    """
    Apply the leader's executed action, then the follower's if still possible.

    Returns:
        (final state, follower action actually applied); the follower's action
        degrades to the no-op when its source no longer holds the object type
    """
    s_mid = apply_action(s, leader_executed, ws)
    if follower_intended.is_noop or not is_feasible(s_mid, follower_intended, ws):
        return s_mid, NOOP
    return apply_action(s_mid, follower_intended, ws), follower_intended


def _failure_branches(cfg: CostRewardConfig, leader: MoveAction, follower: MoveAction):
    p_a, p_b = cfg.p_fail_A, cfg.p_fail_B
    return (
        (leader, follower, (1.0 - p_a) * (1.0 - p_b)),
        (leader, NOOP, (1.0 - p_a) * p_b),
        (NOOP, follower, p_a * (1.0 - p_b)),
        (NOOP, NOOP, p_a * p_b),
    )


def transition_distribution(
    s: GridState,
    leader_action: MoveAction,
    follower_action: MoveAction,
    cfg: CostRewardConfig,
    ws: Workspace,
) -> List[Tuple[GridState, float]]:
    """
    Successor distribution over the four success/failure branches.

    Zero-probability branches are skipped and branches leading to the same
    state are merged, keeping first-seen order.
    """
    merged: Dict[GridState, float] = {}
    for leader, follower, probability in _failure_branches(cfg, leader_action, follower_action):
        if probability <= 0.0:
            continue
        successor, _ = apply_joint(s, leader, follower, ws)
        merged[successor] = merged.get(successor, 0.0) + probability
    return list(merged.items())


def stage_utility(
    s: GridState,
    leader_executed: MoveAction,
    follower_executed: MoveAction,
    cfg: CostRewardConfig,
    ws: Workspace,
    guidance: GuidanceConfig = GuidanceConfig(),
) -> UtilityPair:
    """
    Stage utilities of executed actions.

    u_B is the state reward minus both robots' costs, the follower's cost taken
    on the post-leader state; u_A follows the guidance mapping.
    """
    s_mid = apply_action(s, leader_executed, ws)
    u_b = (
        state_reward(s, cfg, ws)
        - action_cost(s, leader_executed, cfg, ws)
        - action_cost(s_mid, follower_executed, cfg, ws)
    )
    return guidance.leader_utility(u_b), u_b


def is_goal(s: GridState, ws: Workspace) -> bool:
    return distance_to_goal(s, ws) == 0


def terminal_utility(
    s: GridState,
    cfg: CostRewardConfig,
    ws: Workspace,
    guidance: GuidanceConfig = GuidanceConfig(),
) -> UtilityPair:
    reward = state_reward(s, cfg, ws)
    return guidance.leader_utility(reward), reward


# ============================================================================
# ENVIRONMENT
# ============================================================================

@lru_cache(maxsize=1 << 18)
def _expected_outcome(
    ws: Workspace,
    cfg: CostRewardConfig,
    guidance: GuidanceConfig,
    s: GridState,
    leader_action: MoveAction,
    follower_action: MoveAction,
) -> Tuple[UtilityPair, Distribution]:
    u_a = u_b = 0.0
    merged: Dict[GridState, float] = {}
    for leader, follower, probability in _failure_branches(cfg, leader_action, follower_action):
        if probability <= 0.0:
            continue
        successor, follower_applied = apply_joint(s, leader, follower, ws)
        branch_a, branch_b = stage_utility(s, leader, follower_applied, cfg, ws, guidance)
        u_a += probability * branch_a
        u_b += probability * branch_b
        merged[successor] = merged.get(successor, 0.0) + probability
    return (u_a, u_b), tuple(merged.items())


@lru_cache(maxsize=1 << 16)
def _cached_actions(ws: Workspace, s: GridState, robot: Robot) -> Tuple[MoveAction, ...]:
    return tuple(feasible_actions(s, robot, ws))


@lru_cache(maxsize=1 << 18)
def _cached_apply(ws: Workspace, s: GridState, a: MoveAction) -> GridState:
    return apply_action(s, a, ws)


@lru_cache(maxsize=1 << 16)
def _cached_follower_options(ws: Workspace, s: GridState) -> Tuple[MoveAction, ...]:
    options = dict.fromkeys(_cached_actions(ws, s, Robot.FOLLOWER))
    for a in _cached_actions(ws, s, Robot.LEADER):
        if a.is_noop:
            continue
        for b in _cached_actions(ws, _cached_apply(ws, s, a), Robot.FOLLOWER):
            options.setdefault(b)
    return tuple(options)


@dataclass(frozen=True)
class RearrangementEnv:
    """A concrete rearrangement instance: workspace, costs and guidance."""

    workspace: Workspace = field(default_factory=Workspace)
    costs: CostRewardConfig = field(default_factory=CostRewardConfig)
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)

    def feasible_actions(self, s: GridState, robot: Robot) -> Tuple[MoveAction, ...]:
        return _cached_actions(self.workspace, s, robot)

    def follower_options(self, s: GridState) -> Tuple[MoveAction, ...]:
        """
        Every move the follower could make after some leader move from ``s``.

        The follower's moves feasible in ``s`` come first, in their usual
        order, followed by the moves that only the leader's move makes
        possible, in leader-action order.
        """
        return _cached_follower_options(self.workspace, s)

    def follower_effective(self, s: GridState, leader_action: MoveAction, follower_action: MoveAction) -> MoveAction:
        """
        The follower's intended move, or the no-op when it is infeasible both
        before and after ``leader_action``; in that case it idles in every
        success/failure branch.
        """
        if follower_action.is_noop or is_feasible(s, follower_action, self.workspace, Robot.FOLLOWER):
            return follower_action
        if leader_action.is_noop:
            return NOOP
        s_mid = _cached_apply(self.workspace, s, leader_action)
        return follower_action if is_feasible(s_mid, follower_action, self.workspace, Robot.FOLLOWER) else NOOP

    def is_feasible(self, s: GridState, a: MoveAction, robot: Robot) -> bool:
        return is_feasible(s, a, self.workspace, robot)

    def apply(self, s: GridState, a: MoveAction) -> GridState:
        return apply_action(s, a, self.workspace)

    def apply_joint(self, s: GridState, leader_executed: MoveAction, follower_intended: MoveAction):
        return apply_joint(s, leader_executed, follower_intended, self.workspace)

    def distance_to_goal(self, s: GridState) -> int:
        return distance_to_goal(s, self.workspace, self.costs.distance_metric)

    def state_reward(self, s: GridState) -> float:
        return state_reward(s, self.costs, self.workspace)

    def action_cost(self, s: GridState, a: MoveAction) -> float:
        return action_cost(s, a, self.costs, self.workspace)

    def transition_distribution(self, s: GridState, leader_action: MoveAction, follower_action: MoveAction):
        return transition_distribution(s, leader_action, follower_action, self.costs, self.workspace)

    def stage_utility(self, s: GridState, leader_executed: MoveAction, follower_executed: MoveAction) -> UtilityPair:
        return stage_utility(s, leader_executed, follower_executed, self.costs, self.workspace, self.guidance)

    def expected_outcome(self, s: GridState, leader_action: MoveAction, follower_action: MoveAction):
        """Expected executed-action utilities and merged successors of an intended joint action."""
        return _expected_outcome(self.workspace, self.costs, self.guidance, s, leader_action, follower_action)

    def terminal_utility(self, s: GridState) -> UtilityPair:
        return terminal_utility(s, self.costs, self.workspace, self.guidance)

    def is_goal(self, s: GridState) -> bool:
        return is_goal(s, self.workspace)

    def validate_state(self, s: GridState) -> None:
        """
        Check a state against this workspace.

        Raises:
            ValidationError: If the layout does not fit the workspace
        """
        if s.num_types != len(self.workspace.types) or s.num_cells != self.workspace.num_cells:
            raise ValidationError(
                f"State has {s.num_cells} cells x {s.num_types} types, workspace needs "
                f"{self.workspace.num_cells} x {len(self.workspace.types)}"
            )
        if s.total_objects() == 0:
            logger.warning("Scenario has no objects; it starts at the goal")


@dataclass(frozen=True)
class RearrangementGame:
    """
    The rearrangement instance seen as a finite-horizon stochastic game.

    The follower acts after the leader, so its action set at ``s`` holds the
    moves feasible after any leader move. A recommended move that the
    executed leader move does not enable degrades to the no-op.
    """

    env: RearrangementEnv
    horizon: int = config.SCENARIO_DEFAULTS["horizon"]
    discount: float = config.SCENARIO_DEFAULTS["discount"]

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if not 0.0 < self.discount <= 1.0:
            raise ValidationError(f"discount must lie in (0, 1], got {self.discount}")

    def leader_actions(self, state: GridState) -> Tuple[MoveAction, ...]:
        return self.env.feasible_actions(state, Robot.LEADER)

    def follower_actions(self, state: GridState) -> Tuple[MoveAction, ...]:
        return self.env.follower_options(state)

    def _outcome(self, state: GridState, leader_action: MoveAction, follower_action: MoveAction):
        follower_action = self.env.follower_effective(state, leader_action, follower_action)
        return self.env.expected_outcome(state, leader_action, follower_action)

    def transition(self, state: GridState, leader_action: MoveAction, follower_action: MoveAction) -> Distribution:
        return self._outcome(state, leader_action, follower_action)[1]

    def stage_utility(self, state: GridState, leader_action: MoveAction, follower_action: MoveAction) -> UtilityPair:
        return self._outcome(state, leader_action, follower_action)[0]

    def terminal_utility(self, state: GridState) -> UtilityPair:
        return self.env.terminal_utility(state)
