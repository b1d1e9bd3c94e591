"""
Latticeworks v1.0 - Configuration Module
=========================================
Centralized configuration and constants
"""

import os
from pathlib import Path

# === APPLICATION INFO ===
APP_VERSION = "1.0"
APP_NAME = "Latticeworks"
APP_LICENSE = "Proprietary"

# === LATTICE FAMILIES ===
SQUARE = 'square'
TRIANGULAR = 'triangular'
HEXAGONAL = 'hexagonal'
ARCHIMEDEAN = 'archimedean-3-12-2'
MIXED = 'mixed'
DUAL = 'dual'
CUSTOM = 'custom'              # imported graphs without a lattice family

LATTICE_FAMILIES = [SQUARE, TRIANGULAR, HEXAGONAL, ARCHIMEDEAN, MIXED]

# Короткі імена, які приймає CLI
FAMILY_ALIASES = {
    'sq': SQUARE,
    'square': SQUARE,
    'tri': TRIANGULAR,
    'triangular': TRIANGULAR,
    'hex': HEXAGONAL,
    'hexagonal': HEXAGONAL,
    'fisher': ARCHIMEDEAN,
    '3-12-2': ARCHIMEDEAN,
    'archimedean': ARCHIMEDEAN,
    'archimedean-3-12-2': ARCHIMEDEAN,
    'mixed': MIXED,
}

# Ступінь вершини в глибині ґратки (для пошуку межі патча)
BULK_DEGREE = {
    SQUARE: 4,
    TRIANGULAR: 6,
    HEXAGONAL: 3,
    ARCHIMEDEAN: 3,
}

# Квадрати довжин ребер (у одиницях решітки) для кожної родини
EDGE_LENGTHS_SQUARED = {
    SQUARE: (1,),
    TRIANGULAR: (1,),
    HEXAGONAL: (1,),
    ARCHIMEDEAN: (1, 3),
    MIXED: (1, 3),
}

# === SIZE LIMITS ===
MAX_PATCH_VERTICES = 2 ** 20
MAX_EXACT_EDGES = 24            # 2^E повний перебір
MAX_HOLLEY_EDGES = 20
MAX_ANNULUS_K = 3
VERIFY_EMBEDDING_MAX_EDGES = 20000  # exact planarity self-check on construction

# === ENUMERATION ===
ENUMERATION_BUDGET = 10 ** 8    # walk extensions, hard error beyond
SAW_SPLIT_DEPTH = 3             # prefix depth for parallel SAW counting
PHASE_CACHE_SIZE = 4096         # LRU of e^{-i sigma T} factors

# === TOLERANCES ===
RESIDUAL_TOLERANCE = 1e-10
BOUNDARY_TOLERANCE = 1e-9
EXACT_TOLERANCE = 1e-12
BISECTION_TOLERANCE = 1e-12
COORDINATE_EPSILON = 1e-9

# === MONTE CARLO ===
SAMPLES_PER_BLOCK = 1000        # one RNG stream per block
DEFAULT_BURN_IN = 200
DEFAULT_THINNING = 1
DEFAULT_BATCHES = 20            # batch means for correlated chains
DEFAULT_SEED = 0

# === PERFORMANCE ===
MIN_WORKERS = 1
MAX_WORKERS = 32
DEFAULT_WORKERS = 2

# === OUTPUT ===
SUPPORTED_FORMATS = ['json', 'csv']
DEFAULT_FORMAT = 'json'
SPEC_FILE_VERSION = 1
GRAPH_FILE_VERSION = 1

# === EXIT CODES ===
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3
EXIT_INVARIANT = 4

# === PATHS ===
def get_project_root() -> Path:
    """Get project root directory"""
    return Path(__file__).parent

# === LOGGING ===
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVEL = os.environ.get('LATTICEWORKS_LOG_LEVEL', 'INFO')
LOG_FILE = 'latticeworks.log'
LOG_TO_FILE = os.environ.get('LATTICEWORKS_LOG_FILE', '0') == '1'
