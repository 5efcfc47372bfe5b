"""Tests for single-stage Stackelberg solving."""

import time

import numpy as np
import pytest

from conftest import random_stage_matrices
from exceptions import ContractViolationError, MissingValueError, ScenarioParseError
from models import MixedPolicy, TabularGame, ValueTable
from solvers import stage_solver
from solvers.stage_solver import (
    StageMatrices,
    build_stackelberg_milp,
    build_stage_matrices,
    default_big_m,
    follower_best_response_set,
    solve_stackelberg_milp,
    solve_stackelberg_multilp,
    solve_stage,
    solve_team_stage,
)

COMMITMENT = StageMatrices([[2, 4], [1, 3]], [[1, 0], [0, 1]])

EXACT_SOLVERS = [solve_stackelberg_milp, solve_stackelberg_multilp]


def _single_state_game(utilities, transitions, terminal=None, discount=1.0):
    leader = tuple(sorted({a for _, a, _ in utilities}))
    follower = tuple(sorted({b for _, _, b in utilities}))
    return TabularGame(
        horizon=1,
        discount=discount,
        leader_action_table={"s": leader},
        follower_action_table={"s": follower},
        transitions=transitions,
        utilities=utilities,
        terminal=terminal or {},
    )


# ============================================================================
# build_stage_matrices
# ============================================================================

def test_constant_utility_with_zero_continuation():
    keys = [("s", a, b) for a in range(2) for b in range(3)]
    game = _single_state_game({k: (4.0, 1.0) for k in keys}, {k: (("s", 1.0),) for k in keys})
    m = build_stage_matrices("s", game, None)
    assert np.array_equal(m.U_A, np.full((2, 3), 4.0))
    assert np.array_equal(m.U_B, np.full((2, 3), 1.0))


def test_pure_continuation():
    keys = [("s", a, b) for a in range(2) for b in range(2)]
    game = _single_state_game({k: (0.0, 0.0) for k in keys}, {k: (("t", 1.0),) for k in keys})
    v_next = ValueTable(stage=1)
    v_next.set("t", 10.0, -2.0)
    m = build_stage_matrices("s", game, v_next)
    assert np.array_equal(m.U_A, np.full((2, 2), 10.0))
    assert np.array_equal(m.U_B, np.full((2, 2), -2.0))


def test_failure_split_continuation_is_the_expectation():
    branches = (("t1", 0.81), ("t2", 0.09), ("t3", 0.09), ("t4", 0.01))
    game = _single_state_game({("s", 0, 0): (0.0, 0.0)}, {("s", 0, 0): branches})
    v_next = ValueTable(stage=1)
    values = {"t1": 7.0, "t2": -3.0, "t3": 11.0, "t4": 100.0}
    for state, value in values.items():
        v_next.set(state, value, 2 * value)
    m = build_stage_matrices("s", game, v_next)
    expected = sum(p * values[s] for s, p in branches)
    assert m.U_A[0, 0] == pytest.approx(expected, abs=1e-12)
    assert m.U_B[0, 0] == pytest.approx(2 * expected, abs=1e-12)


def test_discount_scales_continuation_only():
    game = _single_state_game({("s", 0, 0): (1.0, 1.0)}, {("s", 0, 0): (("t", 1.0),)}, discount=0.5)
    v_next = ValueTable(stage=1)
    v_next.set("t", 4.0, 4.0)
    assert build_stage_matrices("s", game, v_next).U_A[0, 0] == pytest.approx(3.0)


def test_missing_successor_value_names_the_state():
    game = _single_state_game({("s", 0, 0): (0.0, 0.0)}, {("s", 0, 0): (("ghost", 1.0),)})
    with pytest.raises(MissingValueError, match="ghost"):
        build_stage_matrices("s", game, ValueTable(stage=1))


# ============================================================================
# StageMatrices
# ============================================================================

def test_stage_matrices_reject_bad_shapes_and_values():
    with pytest.raises(ContractViolationError):
        StageMatrices([[1, 2]], [[1], [2]])
    with pytest.raises(ContractViolationError):
        StageMatrices([[np.nan]], [[0.0]])
    with pytest.raises(ContractViolationError):
        StageMatrices(np.zeros((0, 2)), np.zeros((0, 2)))


def test_stage_matrices_are_read_only():
    with pytest.raises(ValueError):
        COMMITMENT.U_A[0, 0] = 9.0


def test_stage_game_text_format():
    text = "# sample\nU_A\n2 4\n1 3\n\nU_B  # follower\n1 0\n0 1\n"
    parsed = StageMatrices.from_text(text)
    assert np.array_equal(parsed.U_A, COMMITMENT.U_A)
    assert np.array_equal(parsed.U_B, COMMITMENT.U_B)
    again = StageMatrices.from_text(parsed.to_text())
    assert np.array_equal(again.U_B, parsed.U_B)


@pytest.mark.parametrize(
    "text, line",
    [
        ("U_A\n1 x\nU_B\n1 2\n", 2),
        ("1 2\nU_A\n1\n", 1),
        ("U_A\n1 2\n3\nU_B\n1 2\n1 2\n", 3),
    ],
)
def test_stage_game_text_errors_carry_line(text, line):
    with pytest.raises(ScenarioParseError) as info:
        StageMatrices.from_text(text)
    assert info.value.line == line


def test_stage_game_text_needs_both_matrices():
    with pytest.raises(ScenarioParseError):
        StageMatrices.from_text("U_A\n1 2\n")
    with pytest.raises(ScenarioParseError):
        StageMatrices.from_text("U_A\n1 2\nU_B\n1 2 3\n")


# ============================================================================
# follower_best_response_set
# ============================================================================

@pytest.mark.parametrize(
    "U_B, policy, expected",
    [
        ([[1, 0], [0, 1]], (1.0, 0.0), {0}),
        ([[1, 0], [0, 1]], (0.5, 0.5), {0, 1}),
        ([[1, 0], [0, 2]], (0.5, 0.5), {1}),
    ],
)
def test_best_response_examples(U_B, policy, expected):
    assert follower_best_response_set(U_B, MixedPolicy(policy)) == expected


def test_best_response_set_is_shift_invariant(rng):
    for _ in range(30):
        U_B = rng.uniform(-10, 10, (4, 5))
        policy = rng.dirichlet(np.ones(4))
        shift = rng.uniform(-100, 100)
        assert follower_best_response_set(U_B, policy) == follower_best_response_set(U_B + shift, policy)


# ============================================================================
# Solvers: known examples
# ============================================================================

@pytest.mark.parametrize("solver", EXACT_SOLVERS)
def test_one_by_one(solver):
    solution = solver(StageMatrices([[3.0]], [[3.0]]))
    assert solution.leader_policy.probabilities == (1.0,)
    assert solution.follower_action.index == 0
    assert (solution.leader_value, solution.follower_value) == pytest.approx((3.0, 3.0))


@pytest.mark.parametrize("solver", EXACT_SOLVERS)
def test_leader_commits_to_mixed_policy(solver):
    solution = solver(COMMITMENT)
    assert solution.leader_policy.probabilities == pytest.approx((0.5, 0.5), abs=1e-6)
    assert solution.follower_action.index == 1
    assert solution.leader_value == pytest.approx(3.5, abs=1e-6)
    assert solution.follower_value == pytest.approx(0.5, abs=1e-6)
    # at the commitment point the follower is indifferent
    assert solution.ties == 1


@pytest.mark.parametrize("solver", EXACT_SOLVERS + [solve_team_stage])
def test_aligned_game_picks_global_maximum(solver, rng):
    for _ in range(10):
        U = rng.permutation(20).reshape(4, 5).astype(float)
        solution = solver(StageMatrices(U, U))
        row, column = np.unravel_index(np.argmax(U), U.shape)
        assert solution.leader_policy.probabilities == pytest.approx(MixedPolicy.pure(row, 4).probabilities, abs=1e-9)
        assert solution.follower_action.index == column
        assert solution.leader_value == pytest.approx(U.max())
        assert solution.follower_value == pytest.approx(U.max())


@pytest.mark.parametrize("solver", EXACT_SOLVERS)
def test_zero_leader_payoff(solver, rng):
    solution = solver(StageMatrices(np.zeros((3, 3)), rng.uniform(-10, 10, (3, 3))))
    assert solution.leader_value == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("solver", EXACT_SOLVERS)
def test_single_leader_action_breaks_ties_for_the_leader(solver):
    solution = solver(StageMatrices([[1.0, 5.0, 2.0]], [[3.0, 3.0, 1.0]]))
    assert solution.leader_policy.probabilities == (1.0,)
    assert solution.follower_action.index == 1
    assert solution.leader_value == pytest.approx(5.0)
    assert solution.ties == 1


def test_team_shortcut_takes_first_maximum_row_major():
    U = np.array([[1.0, 7.0], [7.0, 0.0]])
    solution = solve_team_stage(StageMatrices(U, U))
    assert solution.leader_policy.probabilities == (1.0, 0.0)
    assert solution.follower_action.index == 1


def test_team_shortcut_needs_aligned_matrices():
    with pytest.raises(ContractViolationError):
        solve_team_stage(COMMITMENT)


def test_big_m_below_bound_is_rejected():
    # max |U_B| = 1, so big_M must exceed 4
    with pytest.raises(ContractViolationError):
        solve_stackelberg_milp(COMMITMENT, big_M=4.0)
    assert solve_stackelberg_milp(COMMITMENT, big_M=4.5).leader_value == pytest.approx(3.5, abs=1e-6)


def test_default_big_m_exceeds_bound(rng):
    for _ in range(20):
        U_B = rng.uniform(-50, 50, (3, 3))
        assert default_big_m(U_B) > 2 * (np.max(np.abs(U_B)) + 1)


def test_milp_model_layout():
    program = build_stackelberg_milp(COMMITMENT, 10.0)
    # z (4) + pi_B (2) + lambda
    assert program.num_variables == 7
    assert list(program.integrality) == [0, 0, 0, 0, 1, 1, 0]
    assert np.isinf(program.var_lower[-1]) and np.isinf(program.var_upper[-1])
    assert list(program.objective[:4]) == [2.0, 4.0, 1.0, 3.0]


def test_solve_stage_dispatch():
    assert solve_stage(StageMatrices([[1.0]], [[1.0]])).method == "team"
    assert solve_stage(COMMITMENT).method == "milp"
    assert solve_stage(COMMITMENT, "multilp").method == "multilp"
    with pytest.raises(ContractViolationError):
        solve_stage(COMMITMENT, "simplex")


def test_highs_backend_matches_commitment_example():
    solution = solve_stage(COMMITMENT, "milp-highs")
    assert solution.method == "milp-highs"
    assert solution.leader_value == pytest.approx(3.5, abs=1e-5)
    assert solution.follower_action.index == 1


# ============================================================================
# Solvers: properties on random games
# ============================================================================

def _pure_commitment_value(m: StageMatrices, row: int) -> float:
    responses = follower_best_response_set(m.U_B, MixedPolicy.pure(row, m.shape[0]))
    return max(m.U_A[row, j] for j in responses)


def test_milp_agrees_with_multilp_oracle(rng):
    for _ in range(100):
        rows, cols = (int(v) for v in rng.integers(1, 7, 2))
        m = random_stage_matrices(rng, rows, cols)
        milp = solve_stackelberg_milp(m)
        oracle = solve_stackelberg_multilp(m)
        assert milp.leader_value == pytest.approx(oracle.leader_value, abs=1e-6)

        for solution in (milp, oracle):
            policy = solution.leader_policy.as_array()
            assert np.all(policy >= 0.0) and np.all(policy <= 1.0)
            assert policy.sum() == pytest.approx(1.0, abs=1e-9)
            assert solution.follower_action.index in follower_best_response_set(m.U_B, solution.leader_policy)
            assert solution.leader_value == pytest.approx(
                float(policy @ m.U_A[:, solution.follower_action.index]), abs=1e-9
            )
            best_pure = max(_pure_commitment_value(m, i) for i in range(rows))
            assert solution.leader_value >= best_pure - 1e-8


def test_highs_backend_agrees_with_oracle(rng):
    for _ in range(25):
        rows, cols = (int(v) for v in rng.integers(1, 5, 2))
        m = random_stage_matrices(rng, rows, cols)
        highs = solve_stage(m, "milp-highs")
        assert highs.leader_value == pytest.approx(solve_stackelberg_multilp(m).leader_value, abs=1e-5)


def test_optimistic_tie_breaking(rng):
    for _ in range(50):
        m = random_stage_matrices(rng, 3, 3)
        # integer payoffs make follower ties common
        m = StageMatrices(np.round(m.U_A), np.round(m.U_B / 5))
        solution = solve_stackelberg_milp(m)
        policy = solution.leader_policy
        for j in follower_best_response_set(m.U_B, policy):
            assert solution.leader_value >= float(policy.as_array() @ m.U_A[:, j]) - 1e-9


@pytest.mark.slow
def test_oracle_equivalence_on_500_games():
    rng = np.random.default_rng(500)
    started = time.perf_counter()
    for _ in range(500):
        rows, cols = (int(v) for v in rng.integers(1, 9, 2))
        m = random_stage_matrices(rng, rows, cols)
        milp = solve_stackelberg_milp(m)
        oracle = solve_stackelberg_multilp(m)
        assert milp.leader_value == pytest.approx(oracle.leader_value, abs=1e-6)
        assert milp.follower_action.index in follower_best_response_set(m.U_B, milp.leader_policy)
        assert oracle.follower_action.index in follower_best_response_set(m.U_B, oracle.leader_policy)
    assert time.perf_counter() - started < 10.0


@pytest.mark.parametrize("solver", EXACT_SOLVERS)
def test_columns_below_the_incumbent_are_not_solved(solver, monkeypatch):
    calls = []
    original = stage_solver.lp_solve

    def counting(program):
        calls.append(program)
        return original(program)

    monkeypatch.setattr(stage_solver, "lp_solve", counting)
    # column 1 pays the leader at most 1, column 0 already pays 5
    solution = solver(StageMatrices([[5.0, 1.0], [4.0, 0.0]], [[1.0, 0.0], [0.0, 1.0]]))
    assert solution.follower_action.index == 0
    assert solution.leader_value == pytest.approx(5.0)
    assert len(calls) == 1


def test_identical_answers_are_not_counted_as_ties():
    # columns 0 and 1 agree on the row the leader plays
    U = np.array([[4.0, 4.0, 1.0], [0.0, 2.0, 2.0]])
    solution = solve_team_stage(StageMatrices(U, U))
    assert solution.follower_action.index == 0
    assert solution.ties == 0
