import os

from pathlib import Path


BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = "c6u0-9c!7nilj_ysatsda0(f@e_2mws2f!6m0n^o*4#*q#kzp)"  # NOQA: S105

DEBUG = True

INSTALLED_APPS = [
    "yamabelab",
]

DATABASES = {
    "default": {
        "ENGINE": "django.db.backends.sqlite3",
        "NAME": ":memory:",
    }
}

TASKS = {
    "default": {
        "BACKEND": "django_tasks.backends.immediate.ImmediateBackend",
        "ENQUEUE_ON_COMMIT": False,
    }
}

USE_TZ = True

YAMABELAB = {
    "OUTPUT_DIR": os.getenv("YAMABELAB_TEST_OUTPUT", str(BASE_DIR / "test-output")),
}
