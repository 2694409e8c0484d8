"""
Django settings for the sheetwalk project.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals; nothing here is served.
SECRET_KEY = os.getenv('SECRET_KEY', 'sheetwalk-local-only')

DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []

# Application definition
DJANGO_APPS = [
    'django.contrib.contenttypes',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'simulation',
    'experiments',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

# Experiments never touch the database; the test runner only needs a backend name.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# REST Framework is used for its serializers only
REST_FRAMEWORK = {
    'UNAUTHENTICATED_USER': None,
}


def _int_list(value, default):
    if not value:
        return default
    return [int(item) for item in value.split(',') if item.strip()]


# Experiment defaults; every entry can be overridden through the environment
SHEETWALK = {
    'SEED': int(os.getenv('SHEETWALK_SEED', '42')),
    'LAMBDA': float(os.getenv('SHEETWALK_LAMBDA', '0.19')),
    'BETA': float(os.getenv('SHEETWALK_BETA', '0.08')),
    'SUBSTRIPS': int(os.getenv('SHEETWALK_SUBSTRIPS', '8')),
    'T_GRID_SIZE': int(os.getenv('SHEETWALK_T_GRID', '1024')),
    'COUPLING_GRID_SIZE': int(os.getenv('SHEETWALK_COUPLING_GRID', '2048')),
    'MAXIMAL_GRID_SIZE': int(os.getenv('SHEETWALK_MAXIMAL_GRID', '256')),
    'REPLICAS': int(os.getenv('SHEETWALK_REPLICAS', '200')),
    'BM_N_LIST': _int_list(os.getenv('SHEETWALK_BM_N'), [2 ** k for k in range(8, 17)]),
    'SHEET_N_LIST': _int_list(os.getenv('SHEETWALK_SHEET_N'), [2 ** 10, 2 ** 12, 2 ** 14, 2 ** 16]),
    'COVARIANCE_N': int(os.getenv('SHEETWALK_COVARIANCE_N', str(2 ** 14))),
    'ORLICZ_TOLERANCE': float(os.getenv('SHEETWALK_ORLICZ_TOL', '1e-6')),
    'MEAN_CHECK_REPLICAS': int(os.getenv('SHEETWALK_MEAN_CHECK_REPLICAS', '1000000')),
    'MEAN_CHECK_CHUNK': int(os.getenv('SHEETWALK_MEAN_CHECK_CHUNK', '100000')),
    'OUTPUT_DIR': Path(os.getenv('SHEETWALK_OUTPUT_DIR', str(BASE_DIR / 'results'))),
    'THREADS': os.getenv('SHEETWALK_THREADS', 'auto'),
    # 'local' runs replicas in a thread pool, 'celery' dispatches them to workers
    'EXECUTOR': os.getenv('SHEETWALK_EXECUTOR', 'local'),
}

# Celery settings (only consulted when SHEETWALK['EXECUTOR'] == 'celery')
CELERY_BROKER_URL = os.getenv('CELERY_BROKER_URL', 'redis://localhost:6379')
CELERY_RESULT_BACKEND = os.getenv('CELERY_RESULT_BACKEND', 'redis://localhost:6379')
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE

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
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'simulation': {
            'handlers': ['console'],
            'level': os.getenv('SHEETWALK_LOG_LEVEL', 'INFO'),
        },
        'experiments': {
            'handlers': ['console'],
            'level': os.getenv('SHEETWALK_LOG_LEVEL', 'INFO'),
        },
    },
}
