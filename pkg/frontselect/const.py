"""Constants for the frontselect toolkit."""

DOMAIN = "frontselect"

# Equilibrium roles
ROLE_UNSTABLE = "unstable-origin"
ROLE_WAKE = "wake-state"
ROLES = (ROLE_UNSTABLE, ROLE_WAKE)

# Normal form cases
CASE_COLINEAR = "colinear"
CASE_INDEPENDENT = "independent"

# System definition checks
EQUILIBRIUM_TOL = 1e-10
JACOBIAN_REL_TOL = 1e-6
JACOBIAN_SAMPLES = 10
FD_JACOBIAN_STEP = 1e-6

# Dispersion relation
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12
DOUBLE_ROOT_RESIDUAL = 1e-9
DEGENERATE_D02 = 1e-8
SPEED_TOL = 1e-10
OSCILLATORY_TOL = 1e-6
SIGN_IMAG_TOL = 1e-9
HYP1_TOL = 1e-8
K_GRID_POINTS = 2001
PINCH_MAX_BISECTIONS = 20
PINCH_STEPS = 60
FAR_FIELD_GAMMAS = (1e-2, 5e-3, 2.5e-3)
POLE_THRESHOLD = 1e-6

# Normal form
KERNEL_GAP = 1e-6
COLINEAR_TOL = 1e-8
JORDAN_CHAIN_TOL = 1e-8
STRUCTURE_TOL = 1e-10
CONDITION_LIMIT = 1e8

# Front solve
DEFAULT_DOMAIN = (-50.0, 50.0)
DEFAULT_SPACING = 0.05
FRONT_NEWTON_MAX_ITER = 100
FRONT_RESIDUAL_TOL = 1e-8
BOUNDARY_TOL = 1e-6
PUSHED_B_TOL = 1e-6
WAKE_MARGIN = 1e-6

# Spectral checks
SCAN_DEPTH = 0.2
SCAN_EIGENVALUES = 30
LOCALIZATION_THRESHOLD = 0.9
POINT_SPECTRUM_TOL = 1e-4
RITZ_RESIDUAL_TOL = 1e-6
ZERO_MODE_FLOOR = 10.0

# Self-similar tail
XI_MAX = 12.0
XI_STEP = 0.01
DEFAULT_MU = 0.05
DEFAULT_T = 100.0
MATCHING_FLOOR = 0.5

# Simulation
DEFAULT_H_TRACK = 0.5
FIT_START_FRACTION = 0.25
MIN_FIT_SAMPLES = 50
BLOW_UP_FACTOR = 10.0
BURN_IN_TIME = 10.0
DEFAULT_SIM_DOMAIN = (-50.0, 400.0)
DEFAULT_SIM_DX = 0.1
DEFAULT_SIM_DT = 0.01
DEFAULT_SIM_T_END = 100.0

# Exit codes
EXIT_OK = 0
EXIT_DEFINITION = 1
EXIT_HYPOTHESIS = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4
