"""
LP and MILP kernel shared by both stage-solver paths.

Both entry points wrap SciPy's HiGHS bindings: ``lp_solve`` uses the dual
simplex so optimal solutions are vertices, ``milp_solve`` hands a model with
integrality markers to HiGHS branch-and-bound.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from constants import TOLERANCES
from exceptions import ContractViolationError, SolverError

logger = logging.getLogger(__name__)

LP_OPTIONS = {
    "primal_feasibility_tolerance": TOLERANCES["LP_FEASIBILITY"],
    "dual_feasibility_tolerance": TOLERANCES["LP_FEASIBILITY"],
    "maxiter": 100000,
}

MILP_OPTIONS = {
    "mip_rel_gap": 1e-9,
    "presolve": True,
}


class LPStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(values, columns: int, name: str) -> np.ndarray:
    if values is None:
        return np.zeros((0, columns))
    matrix = np.atleast_2d(np.asarray(values, dtype=float))
    if matrix.size == 0:
        return np.zeros((0, columns))
    if matrix.shape[1] != columns:
        raise ContractViolationError(f"{name} has {matrix.shape[1]} columns, expected {columns}")
    return matrix


@dataclass
class LinearProgram:
    """
    Linear program over ``len(objective)`` variables.

    Inequalities read ``A_ub @ x <= b_ub`` and equalities ``A_eq @ x == b_eq``.
    ``bounds`` holds one (low, high) pair per variable, ``None`` meaning
    unbounded on that side; it defaults to x >= 0.
    """

    objective: np.ndarray
    A_ub: Optional[np.ndarray] = None
    b_ub: Optional[np.ndarray] = None
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    bounds: Optional[List[Tuple[Optional[float], Optional[float]]]] = None
    maximize: bool = False

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        if n == 0:
            raise ContractViolationError("Linear program needs at least one variable")
        self.A_ub = _as_matrix(self.A_ub, n, "A_ub")
        self.A_eq = _as_matrix(self.A_eq, n, "A_eq")
        self.b_ub = np.asarray(self.b_ub if self.b_ub is not None else [], dtype=float).ravel()
        self.b_eq = np.asarray(self.b_eq if self.b_eq is not None else [], dtype=float).ravel()
        if self.b_ub.size != self.A_ub.shape[0] or self.b_eq.size != self.A_eq.shape[0]:
            raise ContractViolationError("Constraint right-hand sides do not match their matrices")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ContractViolationError(f"Expected {n} variable bounds, got {len(self.bounds)}")
        for block in (self.objective, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.all(np.isfinite(block)):
                raise ContractViolationError("Linear program coefficients must be finite")

    @property
    def num_variables(self) -> int:
        return self.objective.size

    def is_box_bounded(self) -> bool:
        """True when every variable has finite bounds on both sides, so the LP cannot be unbounded."""
        return all(
            lo is not None and hi is not None and np.isfinite(lo) and np.isfinite(hi) for lo, hi in self.bounds
        )


@dataclass
class LPResult:
    status: LPStatus
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None


def _run_highs(program: LinearProgram, objective: np.ndarray):
    return linprog(
        objective,
        A_ub=program.A_ub if program.A_ub.shape[0] else None,
        b_ub=program.b_ub if program.b_ub.size else None,
        A_eq=program.A_eq if program.A_eq.shape[0] else None,
        b_eq=program.b_eq if program.b_eq.size else None,
        bounds=program.bounds,
        method="highs-ds",
        options=LP_OPTIONS,
    )


def lp_solve(program: LinearProgram) -> LPResult:
    """
    Solve a linear program.

    Args:
        program: The program to solve

    Returns:
        LPResult with status OPTIMAL (vertex solution and objective in the
        program's own sense), INFEASIBLE or UNBOUNDED

    Raises:
        SolverError: On iteration limits or numerical trouble
    """
    sign = -1.0 if program.maximize else 1.0
    result = _run_highs(program, sign * program.objective)

    if result.status == 0:
        return LPResult(LPStatus.OPTIMAL, np.asarray(result.x, dtype=float), sign * float(result.fun))

    if result.status == 2 and program.is_box_bounded():
        return LPResult(LPStatus.INFEASIBLE)

    if result.status in (2, 3):
        # HiGHS can report "infeasible or unbounded"; settle it with a feasibility solve
        check = _run_highs(program, np.zeros(program.num_variables))
        if check.status == 0:
            return LPResult(LPStatus.UNBOUNDED)
        if check.status == 2:
            return LPResult(LPStatus.INFEASIBLE)
        raise SolverError(f"LP feasibility check failed: {check.message}")

    if result.status == 1:
        raise SolverError(f"LP iteration limit reached: {result.message}", "ITERATION_LIMIT")
    raise SolverError(f"LP solve failed: {result.message}")


@dataclass
class MixedIntegerProgram:
    """
    Mixed-integer linear program in the row-bounded form ``lower <= A @ x <= upper``.

    ``integrality`` marks integer variables with 1 and continuous ones with 0.
    """

    objective: np.ndarray
    A: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    var_lower: np.ndarray
    var_upper: np.ndarray
    integrality: np.ndarray
    maximize: bool = False
    names: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float).ravel()
        n = self.objective.size
        self.A = _as_matrix(self.A, n, "A")
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        self.var_lower = np.asarray(self.var_lower, dtype=float).ravel()
        self.var_upper = np.asarray(self.var_upper, dtype=float).ravel()
        self.integrality = np.asarray(self.integrality, dtype=int).ravel()
        rows = self.A.shape[0]
        if self.lower.size != rows or self.upper.size != rows:
            raise ContractViolationError("Row bounds do not match the constraint matrix")
        if not (self.var_lower.size == self.var_upper.size == self.integrality.size == n):
            raise ContractViolationError("Variable bounds and integrality must cover every variable")
        if not (np.all(np.isfinite(self.objective)) and np.all(np.isfinite(self.A))):
            raise ContractViolationError("MILP coefficients must be finite")

    @property
    def num_variables(self) -> int:
        return self.objective.size


def milp_solve(program: MixedIntegerProgram) -> LPResult:
    """
    Solve a mixed-integer program with HiGHS branch-and-bound.

    Raises:
        SolverError: On time/node limits or numerical trouble
    """
    sign = -1.0 if program.maximize else 1.0
    result = milp(
        c=sign * program.objective,
        constraints=LinearConstraint(program.A, program.lower, program.upper),
        bounds=Bounds(lb=program.var_lower, ub=program.var_upper),
        integrality=program.integrality,
        options=MILP_OPTIONS,
    )
    if result.status == 0:
        return LPResult(LPStatus.OPTIMAL, np.asarray(result.x, dtype=float), sign * float(result.fun))
    if result.status == 2:
        return LPResult(LPStatus.INFEASIBLE)
    if result.status == 3:
        return LPResult(LPStatus.UNBOUNDED)
    raise SolverError(f"MILP solve failed: {result.message}")
