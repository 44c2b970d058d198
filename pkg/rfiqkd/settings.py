"""
Django settings for rfiqkd project.

The project has no database and no web layer; Django provides the management-command
front end and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
import os
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

SECRET_KEY = os.environ.get('RFIQKD_SECRET_KEY', 'rfiqkd-commands-only-no-sessions')
DEBUG = False

INSTALLED_APPS = (
    'rfiqkd',
)

DATABASES = {}

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = False

# Process-pool size for scan, compare and grouped extraction
RFIQKD_WORKERS = int(os.environ.get('RFIQKD_WORKERS', '1'))

# printf-style format of every float column in CSV output
RFIQKD_CSV_FLOAT_FORMAT = '%.6e'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '%(levelname)s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'rfiqkd': {
            'handlers': ['console'],
            'level': os.environ.get('RFIQKD_LOG_LEVEL', 'WARNING'),
            'propagate': False,
        },
    },
}
