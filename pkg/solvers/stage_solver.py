"""
Single-stage Stackelberg solvers.

A stage game is a pair of payoff matrices indexed [leader action][follower
action]. The leader commits to a mixed policy, the follower answers with a pure
best response, and ties between follower best responses are broken in the
leader's favour.

Solution paths:
- ``solve_stackelberg_milp``: the big-M mixed-integer model over the joint
  distribution z, the one-hot follower vector and the follower's dual scalar.
  The default backend searches the binaries by enumeration (each fixed vector
  leaves an LP); ``backend="highs"`` hands the whole model to HiGHS.
- ``solve_stackelberg_multilp``: one LP per follower column, the oracle.
- ``solve_team_stage``: exact shortcut when both matrices are identical.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from constants import SOLVER_METHODS, TOLERANCES
from exceptions import ContractViolationError, ScenarioParseError, SolverError
from models import (
    Distribution,
    GameSpec,
    MixedPolicy,
    PurePolicy,
    StateId,
    UtilityPair,
    ValueTable,
    expected_stage_value,
)
from solvers.linprog import (
    LinearProgram,
    LPStatus,
    MixedIntegerProgram,
    lp_solve,
    milp_solve,
)
from utils.helpers import format_real

logger = logging.getLogger(__name__)

# (leader index, follower index) -> (stage utility pair, successor distribution)
StateExpansion = Mapping[Tuple[int, int], Tuple[UtilityPair, Distribution]]


@dataclass(frozen=True, eq=False)
class StageMatrices:
    """Leader and follower payoff-plus-continuation matrices of one stage game."""

    U_A: np.ndarray
    U_B: np.ndarray
    leader_labels: Tuple[str, ...] = ()
    follower_labels: Tuple[str, ...] = ()

    def __post_init__(self):
        U_A = np.array(self.U_A, dtype=float)
        U_B = np.array(self.U_B, dtype=float)
        if U_A.ndim != 2 or U_A.size == 0:
            raise ContractViolationError(f"Stage matrices must be nonempty 2-D arrays, got shape {U_A.shape}")
        if U_A.shape != U_B.shape:
            raise ContractViolationError(f"Stage matrix shapes differ: {U_A.shape} vs {U_B.shape}")
        if not (np.all(np.isfinite(U_A)) and np.all(np.isfinite(U_B))):
            raise ContractViolationError("Stage matrices contain non-finite entries")
        U_A.setflags(write=False)
        U_B.setflags(write=False)
        object.__setattr__(self, "U_A", U_A)
        object.__setattr__(self, "U_B", U_B)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.U_A.shape

    def is_aligned(self) -> bool:
        return bool(np.array_equal(self.U_A, self.U_B))

    def to_text(self) -> str:
        """Render both matrices in the plain-text stage-game format."""
        lines = []
        if self.leader_labels:
            lines.append("# rows: " + ", ".join(self.leader_labels))
        if self.follower_labels:
            lines.append("# columns: " + ", ".join(self.follower_labels))
        for name, matrix in (("U_A", self.U_A), ("U_B", self.U_B)):
            lines.append(name)
            for row in matrix:
                lines.append(" ".join(format_real(v) for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "StageMatrices":
        """
        Parse the plain-text stage-game format.

        A line ``U_A`` opens the leader matrix and ``U_B`` the follower matrix;
        every following non-blank line is one row of space-separated reals.
        ``#`` starts a comment.

        Raises:
            ScenarioParseError: On unknown content, ragged rows or bad numbers
        """
        blocks: Dict[str, list] = {}
        current: Optional[str] = None
        for line_no, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line in ("U_A", "U_B"):
                if line in blocks:
                    raise ScenarioParseError(f"Duplicate matrix header {line}", line_no)
                current = line
                blocks[current] = []
                continue
            if current is None:
                raise ScenarioParseError("Matrix row before any U_A/U_B header", line_no, 1)
            row = []
            for token in line.split():
                try:
                    row.append(float(token))
                except ValueError:
                    raise ScenarioParseError(
                        f"Not a number: {token!r}", line_no, raw.find(token) + 1
                    ) from None
            if blocks[current] and len(row) != len(blocks[current][0]):
                raise ScenarioParseError(
                    f"Row has {len(row)} entries, expected {len(blocks[current][0])}", line_no
                )
            blocks[current].append(row)

        for name in ("U_A", "U_B"):
            if not blocks.get(name):
                raise ScenarioParseError(f"Missing or empty matrix {name}")
        try:
            return cls(np.array(blocks["U_A"]), np.array(blocks["U_B"]))
        except ContractViolationError as e:
            raise ScenarioParseError(e.message) from e


@dataclass(frozen=True)
class StageSolution:
    """
    Leader commitment and follower answer of one stage game.

    ``ties`` counts the other follower best responses under the returned
    leader policy, leaving out columns that pay both players exactly what the
    chosen column pays on every row the leader plays.
    """

    leader_policy: MixedPolicy
    follower_action: PurePolicy
    leader_value: float
    follower_value: float
    method: str = SOLVER_METHODS["MILP"]
    ties: int = 0


def build_stage_matrices(
    state: StateId,
    game: GameSpec,
    v_next: Optional[ValueTable],
    expansion: Optional[StateExpansion] = None,
) -> StageMatrices:
    """
    Fold stage utility and discounted expected continuation into the stage matrices.

    Args:
        state: State the stage game is played at
        game: The game
        v_next: Next-stage values, or None at the last stage (terminal utilities are used)
        expansion: Cached utilities and successors per joint action index, if available

    Returns:
        StageMatrices with entry (i, j) = u(s, a_i, b_j) + gamma * E[v_next(s')]

    Raises:
        MissingValueError: If a successor has no entry in v_next
    """
    leader_actions = game.leader_actions(state)
    follower_actions = game.follower_actions(state)
    U_A = np.zeros((len(leader_actions), len(follower_actions)))
    U_B = np.zeros_like(U_A)

    for i, a in enumerate(leader_actions):
        for j, b in enumerate(follower_actions):
            if expansion is not None:
                (u_a, u_b), outcomes = expansion[(i, j)]
            else:
                u_a, u_b = game.stage_utility(state, a, b)
                outcomes = game.transition(state, a, b)
            cont_a = cont_b = 0.0
            for successor, probability in outcomes:
                v_a, v_b = game.terminal_utility(successor) if v_next is None else v_next[successor]
                cont_a += probability * v_a
                cont_b += probability * v_b
            U_A[i, j] = u_a + game.discount * cont_a
            U_B[i, j] = u_b + game.discount * cont_b

    return StageMatrices(
        U_A,
        U_B,
        tuple(str(a) for a in leader_actions),
        tuple(str(b) for b in follower_actions),
    )


def follower_best_response_set(U_B, leader_policy) -> Set[int]:
    """
    All follower columns maximizing the expected follower payoff.

    Ties are detected with absolute tolerance 1e-9.
    """
    matrix = np.asarray(U_B, dtype=float)
    weights = leader_policy.as_array() if isinstance(leader_policy, MixedPolicy) else np.asarray(leader_policy, dtype=float)
    if matrix.ndim != 2 or weights.shape != (matrix.shape[0],):
        raise ContractViolationError(
            f"Leader policy of length {weights.size} does not fit a matrix of shape {matrix.shape}"
        )
    payoffs = weights @ matrix
    best = payoffs.max()
    return {j for j, v in enumerate(payoffs) if v >= best - TOLERANCES["BEST_RESPONSE"]}


def default_big_m(U_B: np.ndarray) -> float:
    """Big-M that bounds the follower's best-response gap for this matrix."""
    magnitude = float(np.max(np.abs(U_B)))
    spread = float(np.max(U_B) - np.min(U_B))
    return 2.0 * (magnitude + 1.0) + 2.0 * spread + 1.0


def _same_answers(m: StageMatrices, rows: Sequence[int], column: int, candidates: Set[int]) -> Set[int]:
    """Candidate columns indistinguishable from ``column`` on ``rows``, ``column`` included."""
    return {
        k
        for k in candidates
        if np.array_equal(m.U_A[rows, k], m.U_A[rows, column]) and np.array_equal(m.U_B[rows, k], m.U_B[rows, column])
    }


def _make_solution(m: StageMatrices, weights, column: int, method: str) -> StageSolution:
    policy = MixedPolicy.from_weights(weights)
    responses = follower_best_response_set(m.U_B, policy)
    if column not in responses:
        raise SolverError(f"{method} returned follower column {column} outside the best-response set {sorted(responses)}")
    same = _same_answers(m, policy.support(), column, responses)
    # payoff-identical answers on the played rows collapse to the lowest index
    column = min(same)
    follower = PurePolicy(column, m.shape[1])
    ties = len(responses - same)
    if ties:
        logger.debug(f"Stage solve ({method}): follower indifferent among columns {sorted(responses)}")
    return StageSolution(
        leader_policy=policy,
        follower_action=follower,
        leader_value=expected_stage_value(m.U_A, policy, column),
        follower_value=expected_stage_value(m.U_B, policy, column),
        method=method,
        ties=ties,
    )


def _variable_layout(m: StageMatrices) -> Tuple[int, int, int]:
    n_a, n_b = m.shape
    n_z = n_a * n_b
    return n_z, n_z + n_b, n_z + n_b + 1


def build_stackelberg_milp(m: StageMatrices, big_M: float) -> MixedIntegerProgram:
    """
    Big-M MILP for the leader's stage problem.

    Variables, in order: z (joint distribution, row-major |A|x|B|), the
    one-hot follower vector pi_B, and the free dual scalar lambda. With
    x = z 1 the leader policy, the constraints are

        sum pi_B = 1,  sum z = 1,  z 1 <= 1,  pi_B <= z^T 1 <= 1,
        0 <= lambda - (U_B^T x)_k <= M (1 - pi_B_k)   for every column k,

    and the objective is max sum(U_A * z).
    """
    n_a, n_b = m.shape
    pi_offset, lam, n_vars = _variable_layout(m)

    rows, lower, upper = [], [], []

    def add(row, lo, hi):
        rows.append(row)
        lower.append(lo)
        upper.append(hi)

    row = np.zeros(n_vars)
    row[pi_offset:lam] = 1.0
    add(row, 1.0, 1.0)

    row = np.zeros(n_vars)
    row[:pi_offset] = 1.0
    add(row, 1.0, 1.0)

    for i in range(n_a):
        row = np.zeros(n_vars)
        row[i * n_b:(i + 1) * n_b] = 1.0
        add(row, -np.inf, 1.0)

    for j in range(n_b):
        row = np.zeros(n_vars)
        row[j:pi_offset:n_b] = 1.0
        add(row, -np.inf, 1.0)
        row = row.copy()
        row[pi_offset + j] = -1.0
        add(row, 0.0, np.inf)

    for k in range(n_b):
        # lambda - sum_i U_B[i, k] * sum_j z[i, j]
        row = np.zeros(n_vars)
        for i in range(n_a):
            row[i * n_b:(i + 1) * n_b] = -m.U_B[i, k]
        row[lam] = 1.0
        add(row, 0.0, np.inf)
        row = row.copy()
        row[pi_offset + k] = big_M
        add(row, -np.inf, big_M)

    var_lower = np.zeros(n_vars)
    var_upper = np.ones(n_vars)
    var_lower[lam] = -np.inf
    var_upper[lam] = np.inf
    integrality = np.zeros(n_vars, dtype=int)
    integrality[pi_offset:lam] = 1

    objective = np.zeros(n_vars)
    objective[:pi_offset] = m.U_A.ravel()

    return MixedIntegerProgram(
        objective=objective,
        A=np.array(rows),
        lower=np.array(lower),
        upper=np.array(upper),
        var_lower=var_lower,
        var_upper=var_upper,
        integrality=integrality,
        maximize=True,
    )


def _fixed_follower_skeleton(program: MixedIntegerProgram, lam_bound: float) -> LinearProgram:
    """
    The MILP's rows split into equalities and one-sided inequalities, with
    pi_B left to be fixed per column. Once pi_B is one-hot, lambda equals the
    follower's payoff of a distribution, so |lambda| <= lam_bound.
    """
    bounds = [
        (None if np.isinf(lo) else float(lo), None if np.isinf(hi) else float(hi))
        for lo, hi in zip(program.var_lower, program.var_upper)
    ]
    bounds[-1] = (-lam_bound, lam_bound)

    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for row, lo, hi in zip(program.A, program.lower, program.upper):
        if lo == hi:
            A_eq.append(row)
            b_eq.append(lo)
            continue
        if np.isfinite(hi):
            A_ub.append(row)
            b_ub.append(hi)
        if np.isfinite(lo):
            A_ub.append(-row)
            b_ub.append(-lo)

    return LinearProgram(
        objective=program.objective,
        A_ub=np.array(A_ub),
        b_ub=np.array(b_ub),
        A_eq=np.array(A_eq),
        b_eq=np.array(b_eq),
        bounds=bounds,
        maximize=True,
    )


def _fix_follower(skeleton: LinearProgram, column: int, n_b: int, pi_offset: int) -> LinearProgram:
    """The LP left over once pi_B is fixed to the unit vector e_column."""
    bounds = list(skeleton.bounds)
    for k in range(n_b):
        value = 1.0 if k == column else 0.0
        bounds[pi_offset + k] = (value, value)
    return replace(skeleton, bounds=bounds)


def _leader_weights(m: StageMatrices, x: np.ndarray) -> np.ndarray:
    n_a, n_b = m.shape
    return x[:n_a * n_b].reshape(n_a, n_b).sum(axis=1)


def solve_stackelberg_milp(
    m: StageMatrices,
    big_M: Optional[float] = None,
    backend: str = "enumerate",
) -> StageSolution:
    """
    Solve the stage game through its big-M MILP.

    Args:
        m: Stage matrices
        big_M: Complementarity constant; defaults to ``default_big_m(m.U_B)``
        backend: "enumerate" searches the follower binaries one fixed vector at a
            time, skipping columns whose best entry cannot beat the incumbent; "highs" runs HiGHS branch-and-bound and re-solves the LP of the
            chosen binary to obtain a vertex

    Returns:
        StageSolution with the leader policy recovered as the row sums of z

    Raises:
        ContractViolationError: If big_M is too small for the matrix
        SolverError: If no binary assignment is feasible
    """
    threshold = 2.0 * (float(np.max(np.abs(m.U_B))) + 1.0)
    if big_M is None:
        big_M = default_big_m(m.U_B)
    elif big_M <= threshold:
        raise ContractViolationError(f"big_M={big_M} must exceed {threshold} for this matrix")

    n_a, n_b = m.shape
    program = build_stackelberg_milp(m, big_M)
    pi_offset, _, _ = _variable_layout(m)
    skeleton = _fixed_follower_skeleton(program, float(np.max(np.abs(m.U_B))) + 1.0)

    if backend == "highs":
        result = milp_solve(program)
        if result.status is not LPStatus.OPTIMAL:
            raise SolverError(f"Stackelberg MILP is {result.status.value}; check big_M")
        column = int(np.argmax(result.x[pi_offset:pi_offset + n_b]))
        polished = lp_solve(_fix_follower(skeleton, column, n_b, pi_offset))
        if polished.status is not LPStatus.OPTIMAL:
            raise SolverError(f"Re-solve with follower column {column} is {polished.status.value}")
        return _make_solution(m, _leader_weights(m, polished.x), column, SOLVER_METHODS["MILP_HIGHS"])

    if backend != "enumerate":
        raise ContractViolationError(f"Unknown MILP backend {backend!r}")

    # against column j the leader earns at most the column maximum
    column_bounds = m.U_A.max(axis=0)
    best_column, best_value, best_x = None, -np.inf, None
    for column in range(n_b):
        if column_bounds[column] <= best_value + TOLERANCES["COLUMN_TIE"]:
            continue
        result = lp_solve(_fix_follower(skeleton, column, n_b, pi_offset))
        if result.status is not LPStatus.OPTIMAL:
            continue
        if result.objective > best_value + TOLERANCES["COLUMN_TIE"]:
            best_column, best_value, best_x = column, result.objective, result.x

    if best_column is None:
        raise SolverError("No follower column admits a feasible commitment; check big_M")
    return _make_solution(m, _leader_weights(m, best_x), best_column, SOLVER_METHODS["MILP"])


def solve_stackelberg_multilp(m: StageMatrices) -> StageSolution:
    """
    Solve the stage game with one LP per follower column.

    LP j maximizes the leader's payoff against column j over the simplex,
    subject to column j being a follower best response. The best LP wins;
    equal values go to the lowest column index. Columns whose largest leader
    entry cannot beat the incumbent are not solved.
    """
    n_a, n_b = m.shape
    column_bounds = m.U_A.max(axis=0)
    best_column, best_value, best_x = None, -np.inf, None

    for column in range(n_b):
        if column_bounds[column] <= best_value + TOLERANCES["COLUMN_TIE"]:
            continue
        # (U_B[:, k] - U_B[:, column]) . x <= 0 for every other column k
        others = [k for k in range(n_b) if k != column]
        A_ub = np.array([m.U_B[:, k] - m.U_B[:, column] for k in others]) if others else None
        program = LinearProgram(
            objective=m.U_A[:, column],
            A_ub=A_ub,
            b_ub=np.zeros(len(others)) if others else None,
            A_eq=np.ones((1, n_a)),
            b_eq=np.ones(1),
            bounds=[(0.0, 1.0)] * n_a,
            maximize=True,
        )
        result = lp_solve(program)
        if result.status is not LPStatus.OPTIMAL:
            continue
        if result.objective > best_value + TOLERANCES["COLUMN_TIE"]:
            best_column, best_value, best_x = column, result.objective, result.x

    if best_column is None:
        raise SolverError("Every follower column LP is infeasible")
    return _make_solution(m, best_x, best_column, SOLVER_METHODS["MULTILP"])


def solve_team_stage(m: StageMatrices) -> StageSolution:
    """
    Exact solution of an aligned stage game (U_A == U_B).

    The leader plays the row of the first global maximum in row-major order and
    the follower its column.
    """
    if not m.is_aligned():
        raise ContractViolationError("Team shortcut needs identical leader and follower matrices")
    row, column = np.unravel_index(int(np.argmax(m.U_A)), m.shape)
    weights = np.zeros(m.shape[0])
    weights[row] = 1.0
    return _make_solution(m, weights, int(column), SOLVER_METHODS["TEAM"])


def solve_stage(
    m: StageMatrices,
    method: str = SOLVER_METHODS["AUTO"],
    big_M: Optional[float] = None,
) -> StageSolution:
    """
    Dispatch a stage game to one of the solution paths.

    ``auto`` takes the team shortcut on aligned matrices and the MILP otherwise.
    """
    if method == SOLVER_METHODS["AUTO"]:
        method = SOLVER_METHODS["TEAM"] if m.is_aligned() else SOLVER_METHODS["MILP"]

    if method == SOLVER_METHODS["TEAM"]:
        return solve_team_stage(m)
    if method == SOLVER_METHODS["MILP"]:
        return solve_stackelberg_milp(m, big_M)
    if method == SOLVER_METHODS["MILP_HIGHS"]:
        return solve_stackelberg_milp(m, big_M, backend="highs")
    if method == SOLVER_METHODS["MULTILP"]:
        return solve_stackelberg_multilp(m)
    raise ContractViolationError(f"Unknown stage solver method {method!r}")


def available_methods() -> Sequence[str]:
    return tuple(SOLVER_METHODS.values())
