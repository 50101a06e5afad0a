"""
Django settings for the orbit decoding simulator.

Polar Orbit Decoding of binary linear block codes: library apps plus the
management commands that run the BLER experiments.
"""

from pathlib import Path
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# No web surface is served; the key only satisfies Django's startup checks.
SECRET_KEY = config('SECRET_KEY', default='orbitdecoding-offline-simulator-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'algebra',      # GF(2) matrices, permutations, BSGS
    'polar',        # polar kernel, transform, orbit decoder
    'codes',        # eBCH / eGolay / repetition constructions
    'simulations',  # AWGN channel and BLER experiments
]

# Results are written as CSV files; nothing is persisted in a database.
DATABASES = {}

USE_TZ = True
TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Application-specific settings
APP_NAME = 'Polar Orbit Decoding'
APP_DESCRIPTION = 'Parallel polar decoding over automorphism orbits of linear block codes'
APP_VERSION = '1.0.0'

# Monte-Carlo defaults
SIMULATION_SEED = config('POD_SEED', default=2026, cast=int)
SIMULATION_MIN_ERRORS = config('POD_MIN_ERRORS', default=100, cast=int)
SIMULATION_MAX_TRIALS = config('POD_MAX_TRIALS', default=1_000_000, cast=int)
SIMULATION_BATCH_TRIALS = config('POD_BATCH_TRIALS', default=256, cast=int)
SIMULATION_WORKERS = config('POD_WORKERS', default=1, cast=int)

# Decoder defaults
POD_BRANCH_WORKERS = config('POD_BRANCH_WORKERS', default=1, cast=int)
POD_PATH_METRIC = config('POD_PATH_METRIC', default='exact')
POD_MIN_SUM = config('POD_MIN_SUM', default=False, cast=bool)
POD_COMBINER = config('POD_COMBINER', default='ml-among-valid')
ML_MAX_K = config('POD_ML_MAX_K', default=20, cast=int)

# Base permutation search (perm=search)
POD_DESIGN_SNR_DB = config('POD_DESIGN_SNR_DB', default=4.0, cast=float)
POD_SEARCH_ITERATIONS = config('POD_SEARCH_ITERATIONS', default=3000, cast=int)
POD_SEARCH_SEED = config('POD_SEARCH_SEED', default=7, cast=int)

# Long BLER-curve checks are opt-in
RUN_SLOW_TESTS = config('POD_RUN_SLOW_TESTS', default=False, cast=bool)

# Compiled codes and groups are memoized per process
CACHES = {
    'default': {
        'BACKEND': 'django.core.cache.backends.locmem.LocMemCache',
        'LOCATION': 'orbitdecoding-codes',
        'TIMEOUT': None,
        'OPTIONS': {
            'MAX_ENTRIES': 64,
        }
    },
}

LOG_LEVEL = config('LOG_LEVEL', default='INFO')

# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'file': {
            'level': LOG_LEVEL,
            'class': 'logging.FileHandler',
            'filename': config('LOG_FILE', default=str(BASE_DIR / 'orbitdecoding.log')),
            'formatter': 'simple',
        },
        'console': {
            'level': LOG_LEVEL,
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['file', 'console'],
            'level': 'WARNING',
            'propagate': True,
        },
        'algebra': {
            'handlers': ['file', 'console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'polar': {
            'handlers': ['file', 'console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'codes': {
            'handlers': ['file', 'console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
        'simulations': {
            'handlers': ['file', 'console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
