from pathlib import Path

from decouple import config

BASE_DIR = Path(__file__).resolve().parent.parent

DEBUG = config('CPFIX_DEBUG', default=False, cast=bool)

INSTALLED_APPS = [
    'cpfix',
]

USE_TZ = True

# Numerical defaults, echoed into every report
CPFIX = {
    'TOL_EQ': config('CPFIX_TOL_EQ', default=1e-8, cast=float),
    'CONVERGENCE_TOL': config('CPFIX_CONVERGENCE_TOL', default=1e-10, cast=float),
    'PSD_TOL': config('CPFIX_PSD_TOL', default=1e-9, cast=float),
    'HERMITIAN_TOL': config('CPFIX_HERMITIAN_TOL', default=1e-9, cast=float),
    'MAX_ITER': config('CPFIX_MAX_ITER', default=100000, cast=int),
    'CESARO_TOL': config('CPFIX_CESARO_TOL', default=1e-11, cast=float),
    'CESARO_CAP': config('CPFIX_CESARO_CAP', default=1000000, cast=int),
    'CAUCHY_WINDOW': config('CPFIX_CAUCHY_WINDOW', default=5, cast=int),
    'MINIMALITY_TOL': config('CPFIX_MINIMALITY_TOL', default=1e-10, cast=float),
    'MINIMALITY_MAX_ITER': config('CPFIX_MINIMALITY_MAX_ITER', default=10000, cast=int),
    'ISOMETRY_LEVELS': config('CPFIX_ISOMETRY_LEVELS', default=3, cast=int),
    'SAMPLES': config('CPFIX_SAMPLES', default=100, cast=int),
    'SEED': config('CPFIX_SEED', default=0, cast=int),
}

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'cpfix': {
            'handlers': ['console'],
            'level': config('CPFIX_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
    },
}
