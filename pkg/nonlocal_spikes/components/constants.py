MAX_HISTORY_LENGTH = 100

# Sobolev order used for all norms unless configured
DEFAULT_ELL = 2

# Default rescaled grids per dimension: (L_z, N)
DEFAULT_GRIDS = {1: (30.0, 2048), 2: (20.0, 256), 3: (15.0, 96)}

# Hypothesis checks
TOL_NULL = 1e-8
TOL_DET = 1e-8
TOL_DEGENERATE = 1e-6
TOL_CRITICALITY = 1e-6
TOL_HESSIAN = 1e-8
TOL_PAIRING = 1e-8
TOL_SYMMETRY_ANALYTIC = 1e-10
TOL_SYMMETRY_GRIDDED = 1e-8
MAX_CONDITION = 1e8
FD_STEP = 1e-5
FD_STEP_SYMBOL = 1e-3
SCAN_SAMPLES = 400
SCAN_EXCLUDED_BALL = 0.5
SCAN_MIN_CUTOFF = 40.0

# Ground state
GS_R_MAX = 40.0
GS_NODES = 120
GS_MAX_NEWTON = 50
GS_NONDEGENERACY_MARGIN = 0.05
GS_DIMENSION_STEP = 0.25

# Solver
TOL_INNER = 1e-11
TOL_OUTER = 1e-10
TOL_NEUMANN = 1e-14
TOL_KRYLOV = 1e-12
MAX_INNER_ITERATIONS = 60
MAX_OUTER_ITERATIONS = 30
MAX_NEUMANN_TERMS = 200
INNER_BALL = 0.1
OUTER_BALL = 1.0
TOL_SYMMETRY_DRIFT = 1e-6
RESIDUAL_TOLERANCE = 1e-8
PRECONDITIONER_SAMPLES = 5

# Continuation and tails
TAIL_WINDOW = (0.5, 0.9)
TAIL_NOISE_FLOOR = 1e-13
TAIL_MIN_SAMPLES = 10
TAIL_R2_MARGIN = 0.02
