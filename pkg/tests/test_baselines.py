"""Tests for the greedy baseline, follower models and round protocol."""

import pytest

from exceptions import ValidationError
from models import RoundRecord
from rearrange.baselines import (
    FollowerDecision,
    FollowerModel,
    follower_execute,
    greedy_follower_step,
    greedy_leader_step,
    greedy_run,
    livelock_kind,
    play_round,
    round_rng,
)
from rearrange.environment import NOOP, CostRewardConfig, MoveAction, RearrangementEnv, RearrangementGame, Robot
from solvers.fse_planner import rolling_horizon_run


@pytest.fixture
def crowded_env(workspace):
    return RearrangementEnv(workspace, CostRewardConfig(base_cost_axis=1.25, base_cost_diagonal=1.25))


# ============================================================================
# greedy steps
# ============================================================================

def test_greedy_idles_at_goal(env, make_state):
    goal = make_state({("red", (2, 0)): 1, ("green", (2, 1)): 1})
    assert greedy_leader_step(goal, env) == NOOP
    assert greedy_follower_step(goal, env) == NOOP


def test_greedy_leader_moves_toward_goal(env, make_state):
    assert greedy_leader_step(make_state({("red", (1, 0)): 1}), env) == MoveAction("red", (1, 0), (2, 0))


def test_greedy_idles_when_crowding_outweighs_progress(crowded_env, make_state):
    state = make_state({("red", (0, 0)): 2, ("blue", (0, 2)): 2})
    assert greedy_leader_step(state, crowded_env) == NOOP
    assert greedy_follower_step(state, crowded_env) == NOOP


def test_greedy_follower_breaks_ties_by_target_cell(env, make_state):
    # left to (1, 0) and down to (2, 1) both close one unit of distance
    assert greedy_follower_step(make_state({("red", (1, 1)): 1}), env) == MoveAction("red", (1, 1), (1, 0))


def test_greedy_follower_never_moves_diagonally(env, make_state):
    action = greedy_follower_step(make_state({("blue", (0, 0)): 1}), env)
    assert not action.is_diagonal
    assert action != NOOP


# ============================================================================
# follower models
# ============================================================================

def test_follower_model_serialization():
    model = FollowerModel.random_at_rounds([3, 1, 3])
    assert model.rounds == (1, 3)
    assert FollowerModel.from_dict(model.to_dict()) == model
    assert FollowerModel.from_dict({}) == FollowerModel.obedient()
    assert FollowerModel.random_with_prob(0.25).to_dict() == {"kind": "random_with_prob", "probability": 0.25}
    with pytest.raises(ValidationError):
        FollowerModel.from_dict({"kind": "stubborn"})
    with pytest.raises(ValidationError):
        FollowerModel.random_at_rounds([0])
    with pytest.raises(ValidationError):
        FollowerModel.random_with_prob(1.5)


def test_obedient_follower_plays_the_recommendation(env, make_state):
    s_mid = make_state({("red", (1, 0)): 1})
    recommended = MoveAction("red", (1, 0), (2, 0))
    decision = follower_execute(FollowerModel.obedient(), recommended, s_mid, 1, round_rng(0, 1), env)
    assert decision == FollowerDecision(recommended)


def test_infeasible_recommendation_degrades_to_noop(env, make_state):
    s_mid = make_state({("red", (2, 0)): 1})
    recommended = MoveAction("red", (1, 0), (2, 0))
    decision = follower_execute(FollowerModel.obedient(), recommended, s_mid, 1, round_rng(0, 1), env)
    assert decision.action == NOOP
    assert decision.degraded and not decision.disturbed


def test_random_deviation_only_at_listed_rounds(env, make_state):
    s_mid = make_state({("green", (1, 1)): 1})
    recommended = MoveAction("green", (1, 1), (2, 1))
    model = FollowerModel.random_at_rounds([2])

    calm = follower_execute(model, recommended, s_mid, 1, round_rng(4, 1), env)
    assert calm == FollowerDecision(recommended)

    for seed in range(20):
        shaken = follower_execute(model, recommended, s_mid, 2, round_rng(seed, 2), env)
        assert shaken.disturbed
        assert shaken.action != recommended
        assert shaken.action in env.feasible_actions(s_mid, Robot.FOLLOWER)


def test_deviation_probability_extremes(env, make_state):
    s_mid = make_state({("green", (1, 1)): 1})
    recommended = MoveAction("green", (1, 1), (2, 1))
    for seed in range(10):
        assert follower_execute(FollowerModel.random_with_prob(1.0), recommended, s_mid, 1, round_rng(seed, 1), env).disturbed
        assert not follower_execute(FollowerModel.random_with_prob(0.0), recommended, s_mid, 1, round_rng(seed, 1), env).disturbed


def test_zero_trust_follower_ignores_the_recommendation(env, make_state):
    s_mid = make_state({("red", (1, 1)): 1})
    decision = follower_execute(FollowerModel.zero_trust(), NOOP, s_mid, 1, round_rng(0, 1), env)
    assert decision.action == greedy_follower_step(s_mid, env)
    assert decision.disturbed


def test_round_rng_is_reproducible():
    assert round_rng(3, 2).random() == round_rng(3, 2).random()
    assert round_rng(3, 2).random() != round_rng(3, 1).random()


# ============================================================================
# round protocol
# ============================================================================

def test_play_round_applies_leader_failure(workspace, make_state):
    env = RearrangementEnv(workspace, CostRewardConfig(p_fail_A=1.0, p_fail_B=0.0))
    state = make_state({("red", (1, 0)): 1, ("blue", (1, 2)): 1})
    red_down = MoveAction("red", (1, 0), (2, 0))
    blue_down = MoveAction("blue", (1, 2), (2, 2))

    record = play_round(env, state, 1, red_down, round_rng(0, 1), lambda _s, _r: FollowerDecision(blue_down))
    assert not record.leader_success
    assert record.leader_executed == NOOP
    assert record.follower_success
    assert record.state_after == make_state({("red", (1, 0)): 1, ("blue", (2, 2)): 1})
    assert record.utility_follower == pytest.approx(env.state_reward(state) - 1.0)
    assert record.dist_to_goal == 1


def test_noops_never_fail(workspace, make_state):
    env = RearrangementEnv(workspace, CostRewardConfig(p_fail_A=1.0, p_fail_B=1.0))
    state = make_state({("red", (1, 0)): 1})
    record = play_round(env, state, 1, NOOP, round_rng(0, 1), lambda _s, _r: FollowerDecision(NOOP))
    assert record.leader_success and record.follower_success
    assert record.state_after == state


# ============================================================================
# livelock detection
# ============================================================================

def _record(index, before, after, leader="noop", follower="noop"):
    return RoundRecord(
        round_index=index,
        state_before=before,
        leader_intent=leader,
        leader_executed=leader,
        follower_recommended=None,
        follower_chosen=follower,
        follower_executed=follower,
        leader_success=True,
        follower_success=True,
        utility_leader=0.0,
        utility_follower=0.0,
        state_after=after,
        dist_to_goal=1,
    )


def test_repeated_round_is_a_livelock():
    assert livelock_kind([_record(1, "s", "s"), _record(2, "s", "s")]) == "repeat"
    assert livelock_kind([_record(1, "s", "s")]) is None
    assert livelock_kind([]) is None


def test_state_cycle_is_a_livelock():
    states = ["a", "b"] * 3
    rounds = [_record(i + 1, states[i], states[i + 1], leader=f"m{i}") for i in range(5)]
    assert livelock_kind(rounds[:4]) is None
    assert livelock_kind(rounds) == "cycle"


def test_progress_is_not_a_livelock():
    rounds = [_record(i + 1, f"s{i}", f"s{i + 1}") for i in range(6)]
    assert livelock_kind(rounds) is None


# ============================================================================
# greedy_run
# ============================================================================

def test_greedy_run_at_goal(env, make_state):
    report = greedy_run(env, make_state({("blue", (2, 2)): 1}), 20, 0)
    assert report.total_rounds == 0
    assert report.status == "complete"
    assert report.follower_model == "greedy"


def test_greedy_run_single_object(exact_env, make_state):
    report = greedy_run(exact_env, make_state({("red", (1, 0)): 1}), 20, 0, case="single")
    assert report.status == "complete"
    assert report.total_rounds == 1
    assert report.case == "single"


def test_greedy_run_gets_stuck_when_crowded(crowded_env, make_state):
    report = greedy_run(crowded_env, make_state({("red", (0, 0)): 2, ("blue", (0, 2)): 2}), 20, 1)
    assert report.status == "stuck"
    assert report.total_rounds == 2
    assert report.final_state == report.initial_state


def test_greedy_run_validates_budget(env, make_state):
    with pytest.raises(ValidationError):
        greedy_run(env, make_state({("red", (1, 0)): 1}), 0, 0)


def test_both_planners_finish_a_one_move_case(exact_env, make_state):
    state = make_state({("red", (1, 0)): 1})
    greedy = greedy_run(exact_env, state, 20, 0)
    planned = rolling_horizon_run(
        exact_env, lambda _s: RearrangementGame(exact_env, horizon=1), FollowerModel.obedient(), 20, 0, state
    )
    assert greedy.total_rounds == planned.total_rounds == 1
    assert greedy.status == planned.status == "complete"
