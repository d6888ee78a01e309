# src/resilient_hsa/constants.py
"""Project-wide constants: distribution metadata, packaged resources, construction budgets and audit limits."""

# ------------------------------------------- DISTRIBUTION/PACKAGE METADATA ------------------------------------------ #
# IMPORTANT: Must match the `[project].name` field in pyproject.toml.
DIST_NAME = "resilient-hsa"

# -------------------------------------------------- LOGGING --------------------------------------------------------- #
# Default packaged logging configuration (relative to the package)
LOGGING_CONFIG_RESOURCE_PATH: tuple[str, ...] = ("resilient_hsa", "data", "logging.json")

# ------------------------------------------------- TEST VECTORS ----------------------------------------------------- #
# Worked example (K=5, d=3, s=1, L=2, q=3, p=13), shipped read-only with the package.
EXAMPLE_VECTORS_RESOURCE_PATH: tuple[str, ...] = ("resilient_hsa", "data", "example_k5.json")

# ------------------------------------------------- FIELD ARITHMETIC ------------------------------------------------- #
# Desk-scale modulus ceiling: residues < 2**20 keep every int64 product and row sum exact.
MAX_MODULUS = 1 << 20

# ------------------------------------------------- CONSTRUCTION ----------------------------------------------------- #
GS_MAX_ATTEMPTS = 64
CODE_MAX_ATTEMPTS = 256
SCHEME_MAX_ATTEMPTS = 64

# ---------------------------------------------------- AUDIT --------------------------------------------------------- #
# Largest joint assignment count the brute-force mutual-information oracle will enumerate.
BRUTE_FORCE_LIMIT = 10**7

# Exhaustive link sweeps stay exact up to this many nodes; larger K falls back to sampled realizations.
EXHAUSTIVE_MAX_K = 6
SAMPLED_REALIZATIONS = 1000

# -------------------------------------------------------- CLI ------------------------------------------------------- #
ENV_SEED = "HSA_SEED"
DEFAULT_REPORT_DIR = "reports"

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID_CONFIG = 2
EXIT_CONSTRUCTION_FAILED = 3
