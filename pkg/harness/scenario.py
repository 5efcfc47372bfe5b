"""
Scenario configuration files.

A scenario is a UTF-8 JSON document with a ``schema_version`` field. Only the
initial objects are required; everything else falls back to
``config.SCENARIO_DEFAULTS`` / ``config.COSTS`` and the default 3x3 workspace.

Example:
    {
      "schema_version": 1,
      "name": "case01",
      "workspace": {"rows": 3, "cols": 3,
                    "goals": {"red": [2, 0], "green": [2, 1], "blue": [2, 2]}},
      "objects": [{"type": "red", "cell": [0, 0], "count": 2}],
      "costs": {"base_cost_axis": 1.25},
      "p_fail_a": 0.1, "p_fail_b": 0.1,
      "horizon": 2, "discount": 1.0, "max_rounds": 20, "seed": 0,
      "planner": "sgcm", "solver": "auto",
      "guidance": {"mode": "aligned"},
      "follower_model": {"kind": "obedient"}
    }
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, List, Optional, Union

import config
from constants import PLANNERS, SCHEMA_VERSION, SOLVER_METHODS
from exceptions import ScenarioParseError, ValidationError
from rearrange.baselines import FollowerModel
from rearrange.environment import (
    CostRewardConfig,
    GridState,
    GuidanceConfig,
    RearrangementEnv,
    RearrangementGame,
    Workspace,
)
from utils.helpers import require_probability

logger = logging.getLogger(__name__)

_COST_FIELDS = (
    "base_cost_axis",
    "base_cost_diagonal",
    "crowding_threshold",
    "reward_weight",
    "reward_offset",
    "distance_metric",
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one experiment run needs."""

    initial_state: GridState
    workspace: Workspace = field(default_factory=Workspace)
    costs: CostRewardConfig = field(default_factory=CostRewardConfig)
    horizon: int = config.SCENARIO_DEFAULTS["horizon"]
    discount: float = config.SCENARIO_DEFAULTS["discount"]
    max_rounds: int = config.SCENARIO_DEFAULTS["max_rounds"]
    seed: int = config.SCENARIO_DEFAULTS["seed"]
    planner: str = config.SCENARIO_DEFAULTS["planner"]
    solver: str = config.PLANNER["solver"]
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    follower_model: FollowerModel = field(default_factory=FollowerModel)
    name: str = "scenario"
    description: str = ""

    def __post_init__(self):
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if self.max_rounds < 1:
            raise ValidationError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if not 0.0 < self.discount <= 1.0:
            raise ValidationError(f"discount must lie in (0, 1], got {self.discount}")
        if self.planner not in PLANNERS.values():
            raise ValidationError(f"planner must be one of {sorted(PLANNERS.values())}, got {self.planner!r}")
        if self.solver not in SOLVER_METHODS.values():
            raise ValidationError(f"solver must be one of {sorted(SOLVER_METHODS.values())}, got {self.solver!r}")
        self.env().validate_state(self.initial_state)

    def env(self) -> RearrangementEnv:
        return RearrangementEnv(self.workspace, self.costs, self.guidance)

    def game(self) -> RearrangementGame:
        return RearrangementGame(self.env(), self.horizon, self.discount)


def _require(data: dict, key: str, kind, default: Any = None, where: str = "") -> Any:
    value = data.get(key, default)
    if value is None:
        return None
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise ValidationError(f"{where}{key} must be of type {kind.__name__}, got {value!r}")
    return value


def _parse_cell(value: Any, where: str):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise ValidationError(f"{where} must be a [row, col] pair of integers, got {value!r}")
    return int(value[0]), int(value[1])


def _parse_workspace(data: dict) -> Workspace:
    block = _require(data, "workspace", dict, {})
    rows = _require(block, "rows", int, 3, "workspace.")
    cols = _require(block, "cols", int, 3, "workspace.")
    goals = _require(block, "goals", dict, None, "workspace.")
    if goals is None:
        return Workspace(rows, cols)
    if not goals:
        raise ValidationError("workspace.goals must name at least one object type")
    goal_map = {t: _parse_cell(c, f"workspace.goals.{t}") for t, c in goals.items()}
    return Workspace.from_goal_map(rows, cols, goal_map)


def _parse_objects(data: dict, ws: Workspace) -> GridState:
    objects = _require(data, "objects", list, [])
    counts = [0] * (ws.num_cells * len(ws.types))
    for index, entry in enumerate(objects):
        where = f"objects[{index}]"
        if not isinstance(entry, dict):
            raise ValidationError(f"{where} must be an object with type, cell and count")
        obj_type = _require(entry, "type", str, None, f"{where}.")
        if obj_type is None:
            raise ValidationError(f"{where}.type is required")
        cell = _parse_cell(entry.get("cell"), f"{where}.cell")
        count = _require(entry, "count", int, 1, f"{where}.")
        if count < 0:
            raise ValidationError(f"{where}: count {count} at cell {cell} must be >= 0")
        if not ws.in_bounds(cell):
            raise ValidationError(f"{where}: cell {cell} is outside the {ws.rows}x{ws.cols} workspace")
        counts[ws.cell_index(cell) * len(ws.types) + ws.type_index(obj_type)] += count
    return GridState(len(ws.types), tuple(counts))


def _parse_costs(data: dict) -> CostRewardConfig:
    block = _require(data, "costs", dict, {})
    unknown = set(block) - set(_COST_FIELDS)
    if unknown:
        raise ValidationError(f"Unknown costs fields: {sorted(unknown)}")
    values = {}
    for name in _COST_FIELDS:
        default = config.COSTS[name]
        kind = type(default)
        values[name] = _require(block, name, kind, default, "costs.")
    shared = _require(data, "p_fail", float, config.SCENARIO_DEFAULTS["p_fail"])
    p_fail_a = _require(data, "p_fail_a", float, shared)
    p_fail_b = _require(data, "p_fail_b", float, shared)
    return CostRewardConfig(
        p_fail_A=require_probability(p_fail_a, "p_fail_a"),
        p_fail_B=require_probability(p_fail_b, "p_fail_b"),
        **values,
    )


def _parse_guidance(data: dict) -> GuidanceConfig:
    block = _require(data, "guidance", dict, {})
    return GuidanceConfig(
        mode=_require(block, "mode", str, "aligned", "guidance."),
        scale=_require(block, "scale", float, 1.0, "guidance."),
        offset=_require(block, "offset", float, 0.0, "guidance."),
    )


def scenario_from_dict(data: dict, name: Optional[str] = None) -> ScenarioConfig:
    """
    Build a validated ScenarioConfig from a parsed scenario document.

    Raises:
        ValidationError: Naming the offending field or cell
    """
    if not isinstance(data, dict):
        raise ValidationError("Scenario document must be a JSON object")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"Unsupported schema_version {version!r}, expected {SCHEMA_VERSION}")

    workspace = _parse_workspace(data)
    defaults = config.SCENARIO_DEFAULTS
    model_block = _require(data, "follower_model", dict, {})
    return ScenarioConfig(
        initial_state=_parse_objects(data, workspace),
        workspace=workspace,
        costs=_parse_costs(data),
        horizon=_require(data, "horizon", int, defaults["horizon"]),
        discount=_require(data, "discount", float, defaults["discount"]),
        max_rounds=_require(data, "max_rounds", int, defaults["max_rounds"]),
        seed=_require(data, "seed", int, defaults["seed"]),
        planner=_require(data, "planner", str, defaults["planner"]),
        solver=_require(data, "solver", str, config.PLANNER["solver"]),
        guidance=_parse_guidance(data),
        follower_model=FollowerModel.from_dict(model_block),
        name=_require(data, "name", str, name or "scenario"),
        description=_require(data, "description", str, ""),
    )


def load_scenario(path: Union[str, Path]) -> ScenarioConfig:
    """
    Load and validate a scenario file, applying defaults for missing fields.

    Raises:
        ScenarioParseError: If the file is not valid JSON (with line and column)
        ValidationError: If a value violates an invariant
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"Cannot read scenario {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioParseError(f"{path.name}: {e.msg}", e.lineno, e.colno) from e
    scenario = scenario_from_dict(data, name=path.stem)
    logger.debug(f"Loaded scenario {scenario.name} from {path}")
    return scenario


def scenario_to_dict(scenario: ScenarioConfig) -> dict:
    """Fully resolved scenario document; loading it back yields an equal config."""
    ws = scenario.workspace
    objects = []
    for cell_index in range(ws.num_cells):
        row, col = ws.cell_at(cell_index)
        for type_index, obj_type in enumerate(ws.types):
            count = scenario.initial_state.count(cell_index, type_index)
            if count:
                objects.append({"type": obj_type, "cell": [row, col], "count": count})
    costs = scenario.costs
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "description": scenario.description,
        "workspace": {
            "rows": ws.rows,
            "cols": ws.cols,
            "goals": {t: list(g) for t, g in ws.goal_map().items()},
        },
        "objects": objects,
        "costs": {name: getattr(costs, name) for name in _COST_FIELDS},
        "p_fail_a": costs.p_fail_A,
        "p_fail_b": costs.p_fail_B,
        "horizon": scenario.horizon,
        "discount": scenario.discount,
        "max_rounds": scenario.max_rounds,
        "seed": scenario.seed,
        "planner": scenario.planner,
        "solver": scenario.solver,
        "guidance": dataclasses.asdict(scenario.guidance),
        "follower_model": scenario.follower_model.to_dict(),
    }


def dump_scenario(scenario: ScenarioConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n", encoding="utf-8")
    return path


def apply_overrides(
    scenario: ScenarioConfig,
    planner: Optional[str] = None,
    horizon: Optional[int] = None,
    p_fail_a: Optional[float] = None,
    p_fail_b: Optional[float] = None,
    seed: Optional[int] = None,
    max_rounds: Optional[int] = None,
    solver: Optional[str] = None,
    follower_model: Optional[FollowerModel] = None,
) -> ScenarioConfig:
    """Return a copy of the scenario with CLI-level overrides applied and re-validated."""
    changes = {
        "planner": planner,
        "horizon": horizon,
        "seed": seed,
        "max_rounds": max_rounds,
        "solver": solver,
        "follower_model": follower_model,
    }
    changes = {k: v for k, v in changes.items() if v is not None}
    if p_fail_a is not None or p_fail_b is not None:
        changes["costs"] = dataclasses.replace(
            scenario.costs,
            p_fail_A=scenario.costs.p_fail_A if p_fail_a is None else p_fail_a,
            p_fail_B=scenario.costs.p_fail_B if p_fail_b is None else p_fail_b,
        )
    return dataclasses.replace(scenario, **changes) if changes else scenario


def bundled_case_paths(directory: Union[str, Path, None] = None) -> List[Path]:
    """Scenario files ``case*.json`` of a suite directory, in name order."""
    directory = Path(directory) if directory is not None else config.SUITE_DIR
    paths = sorted(directory.glob("case*.json"))
    if not paths:
        raise ValidationError(f"No case*.json scenarios found in {directory}")
    return paths
