"""
Constants module containing schema versions, planner and status names, exit codes,
numerical tolerances, move directions, default object types and output columns.
"""

# ============================================================================
# SCHEMA
# ============================================================================

SCHEMA_VERSION = 1

# ============================================================================
# PLANNERS
# ============================================================================

PLANNERS = {
    "SGCM": "sgcm",
    "GREEDY": "greedy",
}

# ============================================================================
# STAGE SOLVER METHODS
# ============================================================================

SOLVER_METHODS = {
    "AUTO": "auto",
    "MILP": "milp",
    "MILP_HIGHS": "milp-highs",
    "MULTILP": "multilp",
    "TEAM": "team",
}

# ============================================================================
# EPISODE STATUSES
# ============================================================================

EPISODE_STATUSES = {
    "COMPLETE": "complete",
    "INCOMPLETE": "incomplete",
    "STUCK": "stuck",
    "ERROR": "error",
}

# ============================================================================
# EXIT CODES
# ============================================================================

EXIT_CODES = {
    "SUCCESS": 0,
    "VALIDATION_ERROR": 1,
    "RUNTIME_ERROR": 2,
    "RESOURCE_LIMIT": 3,
}

# ============================================================================
# TOLERANCES
# ============================================================================

TOLERANCES = {
    "DISTRIBUTION_SUM": 1e-12,
    "PROBABILITY_DUST": 1e-15,
    "POLICY_SUM": 1e-9,
    "BEST_RESPONSE": 1e-9,
    "COLUMN_TIE": 1e-9,
    "LP_FEASIBILITY": 1e-10,
}

# ============================================================================
# MOVE DIRECTIONS (row delta, col delta)
# ============================================================================

AXIS_DIRECTIONS = (
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
)

DIAGONAL_DIRECTIONS = (
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
)

# ============================================================================
# OBJECT TYPES
# ============================================================================

DEFAULT_OBJECT_TYPES = ("red", "green", "blue")

DISTANCE_METRICS = ("manhattan", "chebyshev")

GUIDANCE_MODES = ("aligned", "affine")

NOOP_LABEL = "noop"

# ============================================================================
# FOLLOWER MODELS
# ============================================================================

FOLLOWER_MODELS = {
    "OBEDIENT": "obedient",
    "RANDOM_AT_ROUNDS": "random_at_rounds",
    "RANDOM_WITH_PROB": "random_with_prob",
    "ZERO_TRUST": "zero_trust",
}

# ============================================================================
# LIVELOCK DETECTION
# ============================================================================

LIVELOCK = {
    "MAX_CYCLE_PERIOD": 4,
    "MIN_CYCLE_REPETITIONS": 3,
}

LIVELOCK_KINDS = {
    "REPEAT": "repeat",
    "CYCLE": "cycle",
}

# ============================================================================
# OUTPUT COLUMNS
# ============================================================================

ROUND_CSV_COLUMNS = (
    "round",
    "state_hash",
    "leader_intent",
    "leader_exec",
    "follower_rec",
    "follower_exec",
    "u_A",
    "u_B",
    "dist_to_goal",
)

COMPARISON_CSV_COLUMNS = (
    "case",
    "greedy_status",
    "greedy_rounds",
    "greedy_utility",
    "sgcm_status",
    "sgcm_rounds",
    "sgcm_utility",
)

SWEEP_CSV_COLUMNS = (
    "case",
    "model",
    "seed",
    "status",
    "rounds",
    "baseline_rounds",
)

PLOT_CSV_COLUMNS = (
    "series",
    "round",
    "utility",
    "disturbed",
)

CSV_DECIMAL_PLACES = 6
