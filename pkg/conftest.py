import os

import django


os.environ.setdefault("DJANGO_SETTINGS_MODULE", "yamabelab.test.settings")

django.setup()
