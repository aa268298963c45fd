# config.py

import logging
import os
import sys

# Application
APP_NAME = "torus_vortex"

# Torus Grid Configuration
DEFAULT_PERIODS = (1.0, 1.0)
DEFAULT_RESOLUTION = 128
MIN_RESOLUTION = 16
FFT_WORKERS = int(os.environ.get("TORUS_VORTEX_FFT_WORKERS", "1"))

# Background Function Configuration
DEFAULT_BACKGROUND_MODE = "gaussian"  # Options: "gaussian", "exact"
SIGMA_GRID_FACTOR = 2.0               # Gaussian width in units of the largest grid spacing
MIN_VORTEX_SEPARATION_CELLS = 4.0     # Warn when vortex points are closer than this
CUTOFF_RADIUS_FRACTION = 0.25         # Exact mode: cutoff radius as a fraction of min(L1, L2)
LOG_RADIUS_FLOOR_FRACTION = 1e-2      # Exact mode: ln r floored at this fraction of the grid spacing

# Exponential Guard
OVERFLOW_GUARD = 100.0

# Constraint Continuation Configuration
CONTINUATION_INITIAL_STEP = 0.1
CONTINUATION_STEP_FLOOR = 1e-6
NEWTON_TOLERANCE = 1e-13
NEWTON_MAX_ITERS = 50
NEWTON_MAX_HALVINGS = 30
ENVELOPE_CONSTANT = 1e3
CERTIFICATE_SLACK = 1e-12
SWEEP_MAX_RANK = 5

# Tri-diagonal Calculus Configuration
DET_ORACLE_MAX_SIZE = 12
FD_STEP = 1e-5
FD_RELATIVE_TOLERANCE = 1e-6
DETERMINANT_TOLERANCE = 1e-10
APPENDIX_SAMPLES = 10_000
APPENDIX_MAX_SIZE = 10
SYLVESTER_MAX_SIZE = 8

# Local Minimum Configuration
MIN_MAX_ITERS = 2000
GRADIENT_TOLERANCE = 1e-8
ARMIJO_C = 1e-4
BACKTRACK_RATIO = 0.5
MAX_BACKTRACKS = 40
ADMISSIBILITY_MARGIN = 0.9
INITIAL_STEP_NORM = 1.0
BB_STEP_BOUNDS = (1e-10, 1e10)
VERIFY_TOLERANCE = 1e-6
RECOMMENDED_RANKS = (3, 4, 5)
LAMBDA_WARNING_MULTIPLE = 4.0

# Preconditioner Configuration
PRECONDITIONER_SHIFT = "vacuum"  # Options: "vacuum", "identity"

# Mountain Pass Configuration
PATH_NODES = 21
DEFORMATION_STEP = 0.5
MAX_NODE_MOVE = 0.5              # Largest metric displacement of a node per sweep, relative to path spacing
MAX_SWEEPS = 20_000
STAGNATION_TOLERANCE = 1e-10
STAGNATION_WINDOW = 200
MP_GRADIENT_TOLERANCE = 1e-6
POLISH_THRESHOLD = 1e-3
POLISH_MAX_ITERS = 40
XI0_GROWTH = 2.0
XI0_INITIAL = 1.0
XI0_CAP = 2.0 ** 10
ENERGY_DROP = 1.0
DISTINCTNESS_RADIUS = 1e-3
LEVEL_MARGIN = 1e-8
PROFILE_STRIDE = 10              # Path energies are recorded every this many sweeps
MAX_WORKERS = int(os.environ.get("TORUS_VORTEX_WORKERS", "4"))

# Constraint Sweep Configuration
SWEEP_SAMPLES = 5
SWEEP_AMPLITUDE = 0.5
SWEEP_MODES = 4
UNIQUENESS_TOLERANCE = 1e-10

# Artifact Configuration
DEFAULT_FIELD_FORMAT = "csv"  # Options: "csv", "binary"
DEFAULT_OUTPUT_DIR = "out"

# CLI Exit Codes
EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_ADMISSIBILITY = 3
EXIT_SOLVER_ERROR = 4

# Logging Configuration
LOG_LEVEL = logging.INFO
LOG_FORMAT = "%(asctime)s | %(name)s | %(levelname)s | %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

def setup_logging(level: int | None = None):
    logging.basicConfig(
        level=LOG_LEVEL if level is None else level,
        format=LOG_FORMAT,
        datefmt=LOG_DATE_FORMAT,
        handlers=[
            logging.StreamHandler(sys.stdout)
        ],
        force=True,
    )

    logging.getLogger("concurrent.futures").setLevel(logging.WARNING)

    return logging.getLogger(APP_NAME)
