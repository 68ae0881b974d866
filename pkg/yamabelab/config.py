"""
Run configuration files: ``key = value`` lines, ``#`` comments and blank
lines. Command-line flags override file values.
"""

from dataclasses import dataclass, field
from pathlib import Path

from yamabelab.bubble import eval_bubble, kelvin_bubble
from yamabelab.exceptions import ConfigError
from yamabelab.sturm_liouville import POTENTIALS, BoundParams, SturmLiouvilleProblem


def _positive_int(value):
    value = int(value)
    if value <= 0:
        raise ValueError("must be a positive integer")
    return value


def _positive_float(value):
    value = float(value)
    if not value > 0:
        raise ValueError("must be positive")
    return value


def _potential(value):
    if value not in POTENTIALS:
        raise ValueError(f"must be one of {', '.join(POTENTIALS)}")
    return value


CONFIG_KEYS = {
    "dim": int,
    "delta0": float,
    "potential": _potential,
    "lambda": _positive_float,
    "rhs": str,
    "beta": float,
    "alpha": float,
    "r_lo": float,
    "r_hi": _positive_float,
    "points_per_decade": _positive_int,
    "tol": _positive_float,
    "seed": int,
    "epsilon": float,
    "height": _positive_float,
    "l": int,
    "output_dir": str,
    "closure": str,
}

RHS_PRESETS = ("r2U", "r3U", "r2Ulambda", "rlUlambda")


@dataclass
class RunConfig:
    values: dict = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def __contains__(self, key):
        return key in self.values

    def get(self, key, default=None):
        return self.values.get(key, default)

    def with_overrides(self, **overrides):
        """A copy with every non-None override applied (and type-checked)."""
        values = dict(self.values)
        for key, raw in overrides.items():
            if raw is None:
                continue
            values[key] = _coerce(key, raw)
        config = RunConfig(values, self.source)
        config.validate()
        return config

    def validate(self):
        dim = self.values.get("dim")
        if dim is not None and dim < 3:
            raise ConfigError(f"dim must be at least 3, got {dim}", key="dim")
        return self


def _coerce(key, raw, line=None):
    if key not in CONFIG_KEYS:
        raise ConfigError(f"Unknown key {key!r}", line=line, key=key)
    try:
        return CONFIG_KEYS[key](raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value {raw!r} for {key!r}: {e}", line=line, key=key) from e


def parse_config(text, source=None):
    values = {}
    for line_number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not separator or not key:
            raise ConfigError(f"Expected 'key = value', got {raw_line.strip()!r}", line=line_number)
        if key in values:
            raise ConfigError(f"Duplicate key {key!r}", line=line_number, key=key)
        values[key] = _coerce(key, value, line=line_number)
    return RunConfig(values, source).validate()


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    return parse_config(text, source=str(path))


def _rhs_from_config(config, n, lam):
    """(callable H, default BoundParams or None) for the configured rhs."""
    rhs = config.get("rhs", "r2U")
    l = config.get("l")
    if rhs == "r2U":
        return (lambda r: r**2 * eval_bubble(n, r)), BoundParams(2, n - 4)
    if rhs == "r3U":
        return (lambda r: r**3 * eval_bubble(n, r)), BoundParams(3, n - 5)
    if rhs == "r2Ulambda":
        return (
            lambda r: r**2 * kelvin_bubble(n, lam, r) * (1 - (lam / r) ** 8)
        ), BoundParams(2, n - 4)
    if rhs == "rlUlambda":
        if l is None:
            raise ConfigError("rhs = rlUlambda needs the key l", key="l")
        return (
            lambda r: r**l * kelvin_bubble(n, lam, r) * (1 - (lam / r) ** (2 * l + 4))
        ), BoundParams(l, n - 2 - l)

    from yamabelab.serializers import read_radial_csv

    tabulated = read_radial_csv(Path(rhs), name="rhs")
    return tabulated, None


def problem_from_config(config):
    """A SturmLiouvilleProblem from the ``dim``/``delta0``/``rhs``/... keys."""
    for key in ("dim", "delta0"):
        if key not in config:
            raise ConfigError(f"Missing required key {key!r}", key=key)
    n = config["dim"]
    lam = config.get("lambda", 1.0)
    rhs, bounds = _rhs_from_config(config, n, lam)
    if "beta" in config or "alpha" in config or bounds is None:
        try:
            bounds = BoundParams(config["beta"], config["alpha"])
        except KeyError as e:
            raise ConfigError(
                f"A tabulated rhs needs the key {e.args[0]!r}", key=e.args[0]
            ) from e

    name = config.get("rhs", "r2U")
    return SturmLiouvilleProblem(
        n=n,
        delta0=config["delta0"],
        rhs=rhs,
        bound_params=bounds,
        r_lo=config.get("r_lo", 0.0),
        r_hi=config.get("r_hi"),
        potential=config.get("potential", "bubble"),
        lam=lam,
        points_per_decade=config.get("points_per_decade"),
        tolerance=config.get("tol"),
        name=name if name in RHS_PRESETS else "tabulated",
    )
