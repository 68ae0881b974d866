from dataclasses import dataclass
from functools import cached_property

import numpy as np

from scipy.interpolate import CubicSpline

from yamabelab.exceptions import OutOfDomainError
from yamabelab.utils import loglog_slope


# Relative slack when deciding whether a radius lies inside the grid
DOMAIN_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class RadialFunction:
    """
    Values of a radial profile on a strictly increasing grid of radii, with the
    power-law exponents it follows at both ends (``r**inner_exponent`` as
    r -> 0 and ``r**outer_exponent`` as r -> oo). Either exponent may be None
    when the profile is pinned by a Dirichlet condition at that end.

    Between nodes the profile is a cubic spline in s = log r.
    """

    grid: np.ndarray
    values: np.ndarray
    inner_exponent: float | None = None
    outer_exponent: float | None = None
    name: str = ""

    def __post_init__(self):
        grid = np.array(self.grid, dtype=float)
        values = np.array(self.values, dtype=float)

        if grid.ndim != 1 or grid.shape != values.shape:
            raise ValueError("grid and values must be one-dimensional and equal length")
        if len(grid) < 4:
            raise ValueError("A radial function needs at least four nodes")
        if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be positive and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.name or 'radial function'} has non-finite values")

        grid.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __repr__(self):
        return (
            f"<RadialFunction {self.name or '?'} on [{self.r_min:g}, {self.r_max:g}]"
            f" ({len(self.grid)} nodes)>"
        )

    @property
    def r_min(self):
        return float(self.grid[0])

    @property
    def r_max(self):
        return float(self.grid[-1])

    @cached_property
    def _spline(self):
        return CubicSpline(np.log(self.grid), self.values)

    def _check_domain(self, r):
        r = np.asarray(r, dtype=float)
        low = self.r_min * (1 - DOMAIN_SLACK)
        high = self.r_max * (1 + DOMAIN_SLACK)
        outside = (r < low) | (r > high)
        if np.any(outside):
            offending = float(np.atleast_1d(r)[np.atleast_1d(outside)][0])
            raise OutOfDomainError(
                f"Radius {offending!r} is outside the grid of {self.name or 'radial function'}"
                f" [{self.r_min!r}, {self.r_max!r}]",
                radius=offending,
            )
        return np.clip(r, self.r_min, self.r_max)

    def __call__(self, r):
        r = self._check_domain(r)
        result = self._spline(np.log(r))
        return float(result) if np.ndim(result) == 0 else result

    def derivative(self, r, order=1):
        """
        Radial derivative d^k f / dr^k (k = 1 or 2) of the interpolant.
        """
        r = self._check_domain(r)
        s = np.log(r)
        f_s = self._spline(s, 1)
        if order == 1:
            result = f_s / r
        elif order == 2:
            result = (self._spline(s, 2) - f_s) / r**2
        else:
            raise ValueError(f"Unsupported derivative order {order}")
        return float(result) if np.ndim(result) == 0 else result

    def slope(self, r_a, r_b):
        return loglog_slope(self.grid, self.values, r_a, r_b)

    def check_exponents(self, tolerance):
        """
        Compare the declared end exponents with the log-log slope over the first
        and last grid decade.
        """
        report = {"ok": True}
        ends = [
            ("inner", self.inner_exponent, self.r_min, self.r_min * 10),
            ("outer", self.outer_exponent, self.r_max / 10, self.r_max),
        ]
        for label, exponent, r_a, r_b in ends:
            if exponent is None:
                continue
            fitted = self.slope(r_a, r_b)
            ok = abs(fitted - exponent) <= tolerance
            report[label] = {"declared": exponent, "fitted": fitted, "ok": ok}
            report["ok"] = report["ok"] and ok
        return report

    def kelvin(self, lam, n):
        """
        Kelvin transform about the sphere of radius ``lam``:
        (lam / r)^(n-2) f(lam^2 / r), tabulated on the image grid lam^2 / r_j.

        Nodes map onto nodes, so no interpolation happens and applying the
        transform twice returns the original table up to rounding.
        """
        if lam <= 0:
            raise ValueError("Kelvin radius must be positive")
        grid = lam**2 / self.grid[::-1]
        values = (lam / grid) ** (n - 2) * self.values[::-1]
        return RadialFunction(
            grid,
            values,
            inner_exponent=None
            if self.outer_exponent is None
            else 2 - n - self.outer_exponent,
            outer_exponent=None
            if self.inner_exponent is None
            else 2 - n - self.inner_exponent,
            name=f"kelvin({self.name or 'f'}, {lam:g})",
        )

    def restrict(self, r_lo, r_hi):
        mask = (self.grid >= r_lo) & (self.grid <= r_hi)
        return RadialFunction(
            self.grid[mask],
            self.values[mask],
            inner_exponent=self.inner_exponent,
            outer_exponent=self.outer_exponent,
            name=self.name,
        )

    def __add__(self, other):
        if not isinstance(other, RadialFunction):
            return NotImplemented
        if len(self.grid) != len(other.grid) or not np.allclose(
            self.grid, other.grid, rtol=1e-14, atol=0
        ):
            raise ValueError("Radial functions live on different grids")
        return RadialFunction(self.grid, self.values + other.values, name=self.name)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, factor):
        return RadialFunction(
            self.grid,
            factor * self.values,
            inner_exponent=self.inner_exponent,
            outer_exponent=self.outer_exponent,
            name=self.name,
        )

    __rmul__ = __mul__
