"""
Boundary closures of the radial solver, configured by name in
YAMABELAB_CLOSURES the way Django configures cache backends.

A ``CLOSURE`` path names either a module exposing ``Closure``
(``yamabelab.closures.robin``) or a closure class
(``yamabelab.closures.robin.RobinClosure``).
"""

from django.core.exceptions import ImproperlyConfigured
from django.utils.module_loading import import_string

from yamabelab.closures.base import BaseClosure
from yamabelab.conf import get_app_config


class InvalidClosureError(ImproperlyConfigured):
    pass


def import_closure(dotted_path):
    """The closure class at ``dotted_path``, or at its ``Closure`` attribute."""
    try:
        target = import_string(f"{dotted_path}.Closure")
    except ImportError:
        try:
            target = import_string(dotted_path)
        except ImportError as e:
            raise InvalidClosureError(f"Could not find closure '{dotted_path}': {e}") from e
    if not (isinstance(target, type) and issubclass(target, BaseClosure)):
        raise InvalidClosureError(f"'{dotted_path}' is not a BaseClosure subclass")
    return target


def get_closure(closure="default", **kwargs):
    """
    The closure configured as ``closure`` in YAMABELAB_CLOSURES, or the one
    at that dotted path. Options of the settings entry other than
    ``CLOSURE`` are passed to the closure; keyword arguments override them.
    """
    conf = get_app_config().get_closure_config().get(closure)
    if conf is None:
        return import_closure(closure)(kwargs)
    params = {**conf, **kwargs}
    return import_closure(params.pop("CLOSURE"))(params)
