"""
Apollonia - settings

Every tunable is read once from the environment (a .env file is honoured)
and exposed as a module-level constant. CLI flags override these per run.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

VERSION = "1.0.0"

# ==================================================
# PATHS
# ==================================================
BASE_DIR = Path(__file__).resolve().parent.parent
DATA_DIR = Path(os.getenv("APOLLONIA_DATA_DIR", str(BASE_DIR / "data")))
DOMAIN_DIR = DATA_DIR / "domains"
OUTPUT_DIR = DATA_DIR / "outputs"


def _env_float(name, default):
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError:
        print(f"⚠️  Ignoring {name}={raw!r} (not a number), using {default}")
        return default


def _env_int(name, default):
    return int(_env_float(name, default))


# ==================================================
# GEOMETRY
# ==================================================
TOLERANCE_REL = _env_float("APOLLONIA_TOLERANCE_REL", 1e-9)
TOLERANCE_ABS = _env_float("APOLLONIA_TOLERANCE_ABS", 1e-12)

# ==================================================
# PACKING
# ==================================================
# circles smaller than this fraction of the largest base radius are refused
MIN_RADIUS_FACTOR = _env_float("APOLLONIA_MIN_RADIUS_FACTOR", 1e-9)
MAX_EMISSIONS = _env_int("APOLLONIA_MAX_EMISSIONS", 5_000_000)
# generators kept alive by the shared cache, least recently used evicted first
PACKING_CACHE_SIZE = _env_int("APOLLONIA_PACKING_CACHE_SIZE", 4)

# ==================================================
# CUBATURE
# ==================================================
SUPNORM_SAMPLES = _env_int("APOLLONIA_SUPNORM_SAMPLES", 256)
SUPNORM_INFLATION = _env_float("APOLLONIA_SUPNORM_INFLATION", 1.05)
MEAN_VALUE_ORDER = 64
MC_SAMPLES = _env_int("APOLLONIA_MC_SAMPLES", 1_000_000)

# ==================================================
# GREEDY BASELINE
# ==================================================
GREEDY_STALL_LIMIT = _env_int("APOLLONIA_GREEDY_STALL_LIMIT", 10_000_000)
GREEDY_BATCH = 1024

# ==================================================
# EXPERIMENTS
# ==================================================
THREADS = max(1, _env_int("APOLLONIA_THREADS", 1))
MIN_FIT_POINTS = 10
# fits starting below these are pre-asymptotic
PREASYMPTOTIC_N = 1_000
PREASYMPTOTIC_T = 100.0
