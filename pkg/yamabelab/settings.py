"""
Settings used by the ``yamabelab`` console script when DJANGO_SETTINGS_MODULE
is not set. Projects embedding the app configure YAMABELAB themselves.
"""

SECRET_KEY = "yamabelab-cli"  # NOQA: S105

INSTALLED_APPS = [
    "yamabelab",
]

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
    }
}

# Checks run in-process, one after the other, so reports are reproducible
TASKS = {
    "default": {
        "BACKEND": "django_tasks.backends.immediate.ImmediateBackend",
        "ENQUEUE_ON_COMMIT": False,
    }
}

USE_TZ = True

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "handlers": {
        "console": {"class": "logging.StreamHandler"},
    },
    "loggers": {
        "yamabelab": {"handlers": ["console"], "level": "WARNING"},
    },
}

YAMABELAB = {}
