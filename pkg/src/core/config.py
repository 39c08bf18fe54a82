from pathlib import Path

# Go two levels up from config.py → from core → src → project root
BASE_DIR = Path(__file__).resolve().parents[2]

# Reference diagrams regenerated by make_diagrams.py
DATA_DIR = BASE_DIR / 'data'

# --- Classification tolerances ---
CLOSED_FORM_TOL = 1e-9
NUMERIC_TOL = 1e-6
BOUNDARY_REFINE_TOL = 1e-8

# Below this |alpha| * tau^2 the generalized cos/sin switch to their Taylor series
TRIG_SERIES_THRESHOLD = 1e-8

# Relative bound on |det - 1| after a product of transfer matrices
UNIMODULAR_TOL = 1e-12

# --- Integrator defaults ---
DEFAULT_STEPS_PER_PERIOD = 4096
MIN_STEPS_PER_PERIOD = 16
MIN_STEPS_PER_PULSE = 32

# --- Diagram windows: (alpha_min, alpha_max, beta_min, beta_max) ---
GLOBAL_WINDOW = (-1.0, 4.0, -4.0, 4.0)
DETAIL_WINDOW = (-0.2, 0.6, -1.5, 1.5)
DEFAULT_RESOLUTION = (201, 161)

# Clip for the cotangent branch of the triangular Tr = -2 curve
DEFAULT_BETA_MAX = 4.0

# Seed shared by the randomized verification grids
VERIFY_SEED = 20240517

