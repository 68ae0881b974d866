from collections.abc import Mapping

import numpy as np


def deep_update(source, overrides):
    """Update a nested dictionary or similar mapping.

    Modify ``source`` in place.
    """
    for key, value in overrides.items():
        if isinstance(value, Mapping) and value:
            returned = deep_update(source.get(key, {}), value)
            source[key] = returned
        else:
            source[key] = overrides[key]
    return source


def log_grid(r_lo, r_hi, points_per_decade):
    """
    Geometric grid from ``r_lo`` to ``r_hi`` (both included) with roughly
    ``points_per_decade`` intervals per factor of ten.

    The step in s = ln r is uniform, so grids built with the same step can be
    extended by whole steps without moving interior nodes:

    >>> log_grid(1e-2, 1e2, 4)
    array([1.00000000e-02, 1.77827941e-02, ..., 1.00000000e+02])
    """
    if not 0 < r_lo < r_hi:
        raise ValueError(f"Invalid grid bounds ({r_lo}, {r_hi})")
    decades = np.log10(r_hi / r_lo)
    intervals = max(int(round(decades * points_per_decade)), 2)
    s = np.linspace(np.log(r_lo), np.log(r_hi), intervals + 1)
    grid = np.exp(s)
    grid[0] = r_lo
    grid[-1] = r_hi
    return grid


def loglog_slope(r, values, r_a, r_b):
    """Least-squares slope of log|values| against log r over [r_a, r_b]."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (r >= r_a) & (r <= r_b) & (np.abs(values) > 0)
    if mask.sum() < 2:
        raise ValueError(f"Not enough nodes in [{r_a}, {r_b}] to fit a slope")
    slope, _ = np.polyfit(np.log(r[mask]), np.log(np.abs(values[mask])), 1)
    return float(slope)


def to_builtin(value):
    """Convert numpy scalars/arrays and Fractions to JSON-friendly values."""
    from fractions import Fraction

    if isinstance(value, Mapping):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, Fraction)):
        return float(value)
    return value
