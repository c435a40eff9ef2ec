import os

from dotenv import load_dotenv

load_dotenv()

# GRID SIZES
N_THETA = int(os.getenv("RATCHET_N_THETA", "401"))  # type points, two-period models
N_PRICE = int(os.getenv("RATCHET_N_PRICE", "401"))  # first-period price diagnostics
N_THETA_MULTI = int(os.getenv("RATCHET_N_THETA_MULTI", "101"))  # per period, T > 2

# TOLERANCES
MASS_TOL = float(os.getenv("RATCHET_MASS_TOL", "1e-12"))  # probability mass
STRICT_TOL = float(os.getenv("RATCHET_STRICT_TOL", "1e-10"))  # relative slack
TIE_TOL = float(os.getenv("RATCHET_TIE_TOL", "1e-12"))  # revenue ties
REVENUE_STEPS = int(os.getenv("RATCHET_REVENUE_STEPS", "2"))  # price-grid steps

# TRUNCATED NORMAL SUPPORT
NORMAL_WIDTH = float(os.getenv("RATCHET_NORMAL_WIDTH", "5.0"))  # standard deviations

# SIZE LIMITS
MAX_HORIZON = int(os.getenv("RATCHET_MAX_HORIZON", "6"))  # periods
ORACLE_BUDGET = int(os.getenv("RATCHET_ORACLE_BUDGET", "10000000"))  # evaluations
ENUM_MAX_TYPES = int(os.getenv("RATCHET_ENUM_MAX_TYPES", "8"))  # per period
ENUM_MAX_PRICES = int(os.getenv("RATCHET_ENUM_MAX_PRICES", "25"))  # price grid points

# RUNTIME
THREADS = int(os.getenv("RATCHET_THREADS", "1"))
SEED = int(os.getenv("RATCHET_SEED", "0"))
LOG_LEVEL = os.getenv("RATCHET_LOG_LEVEL", "INFO")
