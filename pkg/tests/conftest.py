"""Shared fixtures for the test suite."""

from typing import Dict, Tuple

import numpy as np
import pytest

from models import TabularGame
from rearrange.environment import (
    CostRewardConfig,
    GridState,
    RearrangementEnv,
    Workspace,
)
from solvers.stage_solver import StageMatrices


@pytest.fixture
def workspace() -> Workspace:
    """Default 3x3 workspace: red -> (2, 0), green -> (2, 1), blue -> (2, 2)."""
    return Workspace()


@pytest.fixture
def costs() -> CostRewardConfig:
    return CostRewardConfig(p_fail_A=0.1, p_fail_B=0.1)


@pytest.fixture
def exact_costs() -> CostRewardConfig:
    """Default costs with no execution failures."""
    return CostRewardConfig(p_fail_A=0.0, p_fail_B=0.0)


@pytest.fixture
def env(workspace, costs) -> RearrangementEnv:
    return RearrangementEnv(workspace, costs)


@pytest.fixture
def exact_env(workspace, exact_costs) -> RearrangementEnv:
    return RearrangementEnv(workspace, exact_costs)


@pytest.fixture
def make_state(workspace):
    """Build a GridState from (type, (row, col)) -> count placements."""

    def _make(placements: Dict[Tuple[str, Tuple[int, int]], int], ws: Workspace = None) -> GridState:
        return GridState.from_placements(ws or workspace, placements)

    return _make


def random_stage_matrices(rng: np.random.Generator, rows: int, cols: int, low=-10.0, high=10.0) -> StageMatrices:
    return StageMatrices(rng.uniform(low, high, (rows, cols)), rng.uniform(low, high, (rows, cols)))


def random_tabular_game(
    rng: np.random.Generator,
    num_states: int = 4,
    max_actions: int = 3,
    horizon: int = 2,
    aligned: bool = False,
    discount: float = 1.0,
) -> TabularGame:
    """
    Small random game over states 0..num_states-1.

    Each joint action leads to one or two successors with probabilities built
    from small integers, so they are exact in floating point up to the sum.
    """
    leader_table, follower_table, transitions, utilities, terminal = {}, {}, {}, {}, {}
    for s in range(num_states):
        leader_table[s] = tuple(range(int(rng.integers(1, max_actions + 1))))
        follower_table[s] = tuple(range(int(rng.integers(1, max_actions + 1))))
        terminal[s] = tuple(float(v) for v in rng.uniform(-5, 5, 2))
        if aligned:
            terminal[s] = (terminal[s][0], terminal[s][0])
        for a in leader_table[s]:
            for b in follower_table[s]:
                successors = rng.choice(num_states, size=int(rng.integers(1, 3)), replace=False)
                weights = rng.integers(1, 5, size=len(successors)).astype(float)
                weights /= weights.sum()
                transitions[(s, a, b)] = tuple((int(t), float(p)) for t, p in zip(successors, weights))
                u_a, u_b = (float(v) for v in rng.uniform(-10, 10, 2))
                utilities[(s, a, b)] = (u_a, u_a) if aligned else (u_a, u_b)
    return TabularGame(horizon, discount, leader_table, follower_table, transitions, utilities, terminal)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)
