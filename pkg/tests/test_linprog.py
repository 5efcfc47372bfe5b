import numpy as np
import pytest

from exceptions import ContractViolationError
from solvers import linprog as linprog_module
from solvers.linprog import LinearProgram, LPStatus, MixedIntegerProgram, lp_solve, milp_solve


def test_lp_bounded_maximum():
    # max x  s.t.  x <= 5, x >= 0
    result = lp_solve(LinearProgram(objective=[1.0], A_ub=[[1.0]], b_ub=[5.0], maximize=True))
    assert result.status is LPStatus.OPTIMAL
    assert result.x[0] == pytest.approx(5.0)
    assert result.objective == pytest.approx(5.0)


def test_lp_unbounded():
    result = lp_solve(LinearProgram(objective=[1.0], maximize=True))
    assert result.status is LPStatus.UNBOUNDED
    assert result.x is None


def test_lp_degenerate_face_returns_a_vertex():
    # max x + y  s.t.  x + y <= 1, x, y >= 0: the whole edge is optimal
    result = lp_solve(LinearProgram(objective=[1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0], maximize=True))
    assert result.status is LPStatus.OPTIMAL
    assert result.objective == pytest.approx(1.0)
    assert sorted(np.round(result.x, 9)) == [0.0, 1.0]


def test_lp_infeasible():
    # x <= -1 with x >= 0
    result = lp_solve(LinearProgram(objective=[1.0], A_ub=[[1.0]], b_ub=[-1.0]))
    assert result.status is LPStatus.INFEASIBLE


def test_lp_minimization_with_equality_and_free_variable():
    # min x - y  s.t.  x + y == 2, x in [0, 3], y free but y <= 1
    program = LinearProgram(
        objective=[1.0, -1.0],
        A_ub=[[0.0, 1.0]],
        b_ub=[1.0],
        A_eq=[[1.0, 1.0]],
        b_eq=[2.0],
        bounds=[(0.0, 3.0), (None, None)],
    )
    result = lp_solve(program)
    assert result.status is LPStatus.OPTIMAL
    assert result.x == pytest.approx([1.0, 1.0])
    assert result.objective == pytest.approx(0.0, abs=1e-12)


def test_linear_program_rejects_inconsistent_input():
    with pytest.raises(ContractViolationError):
        LinearProgram(objective=[1.0, 1.0], A_ub=[[1.0]], b_ub=[1.0])
    with pytest.raises(ContractViolationError):
        LinearProgram(objective=[1.0], A_ub=[[1.0]], b_ub=[1.0, 2.0])
    with pytest.raises(ContractViolationError):
        LinearProgram(objective=[np.inf])
    with pytest.raises(ContractViolationError):
        LinearProgram(objective=[])


def test_milp_picks_integer_point():
    # max x + 2y  s.t.  x + y <= 1.5, x, y binary
    program = MixedIntegerProgram(
        objective=[1.0, 2.0],
        A=[[1.0, 1.0]],
        lower=[-np.inf],
        upper=[1.5],
        var_lower=[0.0, 0.0],
        var_upper=[1.0, 1.0],
        integrality=[1, 1],
        maximize=True,
    )
    result = milp_solve(program)
    assert result.status is LPStatus.OPTIMAL
    assert result.x == pytest.approx([0.0, 1.0])
    assert result.objective == pytest.approx(2.0)


def test_milp_infeasible():
    program = MixedIntegerProgram(
        objective=[1.0],
        A=[[1.0]],
        lower=[0.4],
        upper=[0.6],
        var_lower=[0.0],
        var_upper=[1.0],
        integrality=[1],
    )
    assert milp_solve(program).status is LPStatus.INFEASIBLE


def test_box_bounded_infeasible_lp_is_settled_in_one_solve(monkeypatch):
    calls = []
    original = linprog_module._run_highs

    def counting(program, objective):
        calls.append(objective)
        return original(program, objective)

    monkeypatch.setattr(linprog_module, "_run_highs", counting)
    program = LinearProgram(objective=[1.0], A_ub=[[1.0]], b_ub=[-1.0], bounds=[(0.0, 1.0)])
    assert program.is_box_bounded()
    assert lp_solve(program).status is LPStatus.INFEASIBLE
    assert len(calls) == 1


def test_free_variable_is_not_box_bounded():
    assert not LinearProgram(objective=[1.0], bounds=[(0.0, None)]).is_box_bounded()
    assert not LinearProgram(objective=[1.0]).is_box_bounded()
