"""
Django settings for the forge project.

Django is used here for settings, logging configuration, the management
command line and the test runner. There is no web surface and no database.

Library defaults live in the ``FORGE`` dict below; run configuration files
and command-line flags override them (see ``experiments.config``).
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Only used by Django internals; nothing here is signed or served.
SECRET_KEY = os.getenv('SECRET_KEY', 'forge-offline-key')

DEBUG = os.getenv('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Third party apps
    'rest_framework',

    # Local apps
    'colorspace',
    'transform',
    'dataset',
    'features',
    'classifier',
    'evaluation',
    'universality',
    'experiments',
]

# No database: every structure is in memory and every output is a file.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Forge defaults
FORGE = {
    # Transformation space: (min, max) per factor; hue in degrees on the 0-360 circle
    'TRANSFORM': {
        'HUE': (-18.0, 18.0),
        'SATURATION': (0.6, 1.4),
        'LIGHTNESS': (0.6, 1.4),
        'CONTRAST': (0.6, 1.4),
        'ENABLED': ('hue', 'saturation', 'lightness', 'contrast'),
        'ORDER': ('hue', 'saturation', 'lightness', 'contrast'),
        # Rec.601
        'LUMA_WEIGHTS': (0.299, 0.587, 0.114),
    },
    'DATASET': {
        'WIDTH': 128,
        'HEIGHT': 384,
        'PADDING': 10,
        'FLIP_PROBABILITY': 0.5,
        'NAMING_RULE': r'^(?P<identity>-?\d+)_c(?P<camera>\d+)',
        'MANIFEST_NAME': 'manifest.jsonl',
        'EXTENSIONS': ('.png', '.jpg', '.jpeg'),
    },
    'DESCRIPTOR': {
        'PARTS': 6,
        'BINS': 8,
    },
    'TRAIN': {
        'LR': 0.001,
        'LR_STEP': 40,
        'LR_GAMMA': 0.1,
        'MOMENTUM': 0.9,
        'WEIGHT_DECAY': 0.0005,
        'BATCH_SIZE': 32,
        'EPOCHS': 60,
        'SMOOTHING': 0.1,
        'GEOMETRIC': True,
    },
    'EVAL': {
        'EXCLUDE_SAME_CAMERA_SAME_ID': True,
        'RANKS': (1, 5, 10),
    },
    'ANALYSIS_SIZE': 1000,
    'OUT_DIR': os.getenv('FORGE_OUT', 'runs'),
    'SEED': 0,
    'THREADS': int(os.getenv('FORGE_THREADS', '1')),
}


# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv('FORGE_LOG', 'INFO').upper(),
    },
}
