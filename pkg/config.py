"""Configuration for the conegeo conical-geodesic solver and estimate auditor."""

from pathlib import Path

# Paths
PROJECT_ROOT = Path(__file__).resolve().parent
DEFAULT_OUT_DIR = PROJECT_ROOT / "runs"

# Geometry
DEFAULT_U_MAX = 16.0
DEFAULT_N_U = 129
DEFAULT_N_T = 65
CURVATURE_LOWER_BOUND_B = 0.0
PARTITION_TOL = 1e-14
DISTANCE_CAP_RADIUS = 1.0

# Divisor
DEFAULT_BETA = 0.75
DEFAULT_C_FRACTION = 0.5

# Boundary data
BUMP_AMPLITUDE = 0.5
BUMP_WIDTH = 2.0

# Weights
DEGENERATE_WEIGHT_TOL = 1e-300

# Solver
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 40
MIN_STEP = 2.0 ** -20
BARRIER_RHS_BOUND = 2.0
DEFAULT_EPS_LIST = (1e-1, 1e-2, 1e-3)
SANDWICH_TOL = 1e-6
ROUNDOFF_SAFETY = 4.0
STEP_ROUNDOFF_FACTOR = 100.0
MAX_BRIDGE_DEPTH = 3
WARM_START_MIN_CONVEXITY = 1e-8
LATERAL_CLOSURES = ("neumann", "dirichlet")

# Estimates
MP_RELATIVE_TOL = 1e-6
HOLDER_MAX_PAIRS = 400_000
DIVISOR_HOLDER_RADIUS = 0.5
DEFAULT_MU = 0.9
DEFAULT_DELTA = 0.45
DEFAULT_ORACLE_N_X = 4097
SCHEMA_VERSION = 1
TRUNCATION_MARGIN = 2.0

# Analysis
GROWTH_SLOPE_TOL = 0.05
QUAD_EPSREL = 1e-12

# Grid CSV columns
COL_U = "u"
COL_T = "t"
COL_PHI = "phi"
CSV_FLOAT_FORMAT = "%.17g"

# Series CSV columns
SERIES_COLUMNS = [
    "eps",
    "eta",
    "sup_dt_phi",
    "sup_weighted_lap",
    "holder_seminorm",
    "oracle_distance",
]

# Output file names
GRID_FILE = "grid_{entry}.csv"
REPORT_FILE = "report_{entry}.json"
SERIES_FILE = "series.csv"
CONVERGENCE_FILE = "convergence.jsonl"
METADATA_FILE = "metadata.json"
