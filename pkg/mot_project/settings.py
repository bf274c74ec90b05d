"""
Django settings for mot_project project.

Tracker presets and the run ledger switches live at the bottom of this file.
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get('SECRET_KEY', 'django-insecure-mot-tracking-dev-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.environ.get('DEBUG', '1') == '1'

ALLOWED_HOSTS = ['localhost', '127.0.0.1']


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'tracking.apps.TrackingConfig',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'mot_project.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'mot_project.wsgi.application'
ASGI_APPLICATION = 'mot_project.asgi.application'


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'fr-fr'

TIME_ZONE = 'Europe/Paris'

USE_I18N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)

STATIC_URL = 'static/'

# Default primary key field type
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Logging

MOT_LOG_LEVEL = os.environ.get('MOT_LOG_LEVEL', 'INFO').upper()

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
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'tracking': {
            'handlers': ['console'],
            'level': MOT_LOG_LEVEL,
            'propagate': False,
        },
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
        },
    },
}


# Tracker presets (values override the TrackerConfig defaults)

TRACKER_PRESETS = {
    'mot17': {'beta_f': 0.822, 'off': 0.525},
    'mot20': {'beta_f': 0.66, 'off': 0.9},
    'dancetrack': {'beta_f': 0.8, 'off': 0.1},
    # compatibility baseline: median appearance, plain IoU, two-frame velocity
    'mot_fcg': {'appearance_mode': 'median', 'spatial_mode': 'iou', 'n': 2},
}

TRACKER_DEFAULT_PRESET = 'mot17'


# Run ledger

TRACKING_RECORD_RUNS = os.environ.get('TRACKING_RECORD_RUNS', '1') == '1'

# runs still "en cours" after this many hours are closed by close_stale_runs
TRACKING_STALE_RUN_HOURS = 24


# Scenario values used by the synth command before the scenario file and --set

SYNTH_DEFAULTS = {
    'n_targets': 5,
    'n_frames': 100,
    'embed_dim': 128,
}
