"""
Django settings for the mixedproject ground-state suite.

The project has no web surface: Django provides configuration, logging and the
management-command CLI, Django REST framework validates run configurations and
renders reports.
"""

from pathlib import Path
import os

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Only used by Django internals; nothing is signed by the CLI.
SECRET_KEY = os.environ.get('MIXED_SECRET_KEY', 'mixedproject-cli-only')

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'rest_framework',
    'groundstates',
]

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True

TIME_ZONE = 'UTC'


# Logging

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'run': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'run',
        },
    },
    'loggers': {
        'groundstates': {
            'handlers': ['console'],
            'level': os.environ.get('MIXED_LOG_LEVEL', 'INFO'),
            'propagate': False,
        },
    },
}


# Sobolev constant cache (see groundstates.cache)

SOBOLEV_CACHE = {
    'ENABLED': os.environ.get('SOBOLEV_CACHE_ENABLED', '1') == '1',
    'HOST': os.environ.get('REDIS_HOST', 'redis'),
    'PORT': int(os.environ.get('REDIS_PORT', '6379')),
    'EXPIRE': int(os.environ.get('SOBOLEV_CACHE_EXPIRE', str(7 * 24 * 3600))),
}


# Numerical defaults, overridable per run from the config file

SOLVER_DEFAULTS = {
    'max_iters': 5000,
    'grad_tol': 1e-8,
    'step_rule': 'bb',
    'step_size': 0.5,
    'n_starts': 8,
    'radial': False,
    'symmetrize': True,
}

LAMBDA_DEFAULTS = {
    'n_starts': 4,
    'corpus_size': 200,
    'max_iters': 3000,
    'grad_tol': 1e-8,
}

REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}
