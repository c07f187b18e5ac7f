"""
Django settings for hdemg_site project.

The project has no web surface: it is a library plus management commands
(`python manage.py synth|preprocess|train|classify|eval|sweep|heatmap|import`).
The database only stores finished experiment runs.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/5.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('HDEMG_SECRET_KEY', 'django-insecure-hdemg-local-experiments-only')

DEBUG = os.environ.get('HDEMG_DEBUG', '') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # my apps
    'hdc.apps.HdcConfig',
    'emg.apps.EmgConfig',
    'experiments.apps.ExperimentsConfig',

    'django.contrib.contenttypes',
]


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Experiment harness
# Experiment defaults (D, n, filter chain, vote window) live on the config
# dataclasses; an experiment YAML file overrides them per run.

HDEMG = {
    # thread count for independent subjects / conditions / sweep points
    'WORKERS': int(os.environ.get('HDEMG_WORKERS', 1)),
    'OUTPUT_DIR': BASE_DIR / 'runs',
    # store every `eval` / `sweep` report as an ExperimentRun row
    'RECORD_RUNS': True,
}


# Logging
# https://docs.djangoproject.com/en/5.2/topics/logging/

LOG_LEVEL = os.environ.get('HDEMG_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'hdc': {'handlers': ['console'], 'level': LOG_LEVEL},
        'emg': {'handlers': ['console'], 'level': LOG_LEVEL},
        'experiments': {'handlers': ['console'], 'level': LOG_LEVEL},
    },
}


# Internationalization
# https://docs.djangoproject.com/en/5.2/topics/i18n/

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Default primary key field type
# https://docs.djangoproject.com/en/5.2/ref/settings/#default-auto-field

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
