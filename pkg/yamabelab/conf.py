from functools import cache

from django.apps import apps
from django.core.exceptions import ImproperlyConfigured


@cache
def get_app_config():
    """
    The installed YamabeLabAppConfig, looked up by class so that a project may
    install a subclass (with its own defaults) under another label.
    """
    from yamabelab.apps import YamabeLabAppConfig

    found = [
        app_config
        for app_config in apps.get_app_configs()
        if isinstance(app_config, YamabeLabAppConfig)
    ]
    if len(found) != 1:  # pragma: no cover
        raise ImproperlyConfigured(
            f"Expected the yamabelab app once in INSTALLED_APPS, found it {len(found)} times"
        )
    return found[0]


def get_lab_settings():
    """The YAMABELAB setting merged over the defaults, as a fresh copy."""
    return get_app_config().get_lab_settings()
