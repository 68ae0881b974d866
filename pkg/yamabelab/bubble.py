"""
The standard bubble U(r) = (1 + r^2)^(-(n-2)/2), its Kelvin transforms, the
interpolated potential V_lambda and the single-chart stand-ins for the
manifold profiles xi and xi-tilde.
"""

import logging

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from scipy.integrate import quad_vec

from yamabelab.conf import get_lab_settings
from yamabelab.exceptions import PreconditionError, QuadratureError


logger = logging.getLogger("yamabelab.bubble")


@dataclass(frozen=True)
class Dimension:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise PreconditionError(f"Dimension must be an integer >= 3, got {self.n}")

    @property
    def c(self):
        """Conformal constant c(n) = (n-2) / (4(n-1)), a float in (0, 1/4)."""
        return conformal_constant(self.n)

    @property
    def exact_c(self):
        return Fraction(self.n - 2, 4 * (self.n - 1))

    @property
    def critical_exponent(self):
        return (self.n + 2) / (self.n - 2)


@dataclass(frozen=True)
class KelvinParams:
    lam: float

    def __post_init__(self):
        if not self.lam > 0:
            raise PreconditionError(
                f"Kelvin radius must be positive, got {self.lam}", inequality="lambda > 0"
            )


def _dimension(n):
    return n.n if isinstance(n, Dimension) else Dimension(n).n


def _lambda(lam):
    return lam.lam if isinstance(lam, KelvinParams) else KelvinParams(lam).lam


def conformal_constant(n):
    return (n - 2) / (4 * (n - 1))


def _scalar_or_array(value):
    return float(value) if np.ndim(value) == 0 else value


def eval_bubble(n, r):
    n = _dimension(n)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise PreconditionError("The bubble is evaluated at r >= 0", inequality="r >= 0")
    return _scalar_or_array((1 + r**2) ** (-(n - 2) / 2))


def bubble_derivatives(n, r):
    """Return (U, U', U'') at ``r`` from the closed form."""
    n = _dimension(n)
    r = np.asarray(r, dtype=float)
    base = 1 + r**2
    u = base ** (-(n - 2) / 2)
    du = -(n - 2) * r * base ** (-n / 2)
    d2u = -(n - 2) * base ** (-n / 2) + (n - 2) * n * r**2 * base ** (-n / 2 - 1)
    return _scalar_or_array(u), _scalar_or_array(du), _scalar_or_array(d2u)


def scaled_bubble(n, mu):
    """
    The rescaled exact bubble v_mu(y) = mu^((n-2)/2) U(mu y) as a radial
    callable ``g(r, order=0)`` returning the value or a radial derivative.
    """
    n = _dimension(n)

    def g(r, order=0):
        values = bubble_derivatives(n, mu * np.asarray(r, dtype=float))
        return mu ** ((n - 2) / 2) * mu**order * values[order]

    return g


def kelvin_transform(f, lam, r, n):
    """
    Evaluate (lam / r)^(n-2) f(lam^2 / r) for a RadialFunction or a callable.

    A RadialFunction raises OutOfDomainError naming lam^2 / r when the image
    point leaves its grid.
    """
    n = _dimension(n)
    lam = _lambda(lam)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PreconditionError("Kelvin transforms are evaluated at r > 0", inequality="r > 0")
    return _scalar_or_array((lam / r) ** (n - 2) * np.asarray(f(lam**2 / r)))


def kelvin_bubble(n, lam, r):
    """Closed form U^lam(r) = lam^(n-2) (r^2 + lam^4)^(-(n-2)/2)."""
    n = _dimension(n)
    lam = _lambda(lam)
    r = np.asarray(r, dtype=float)
    return _scalar_or_array(lam ** (n - 2) * (r**2 + lam**4) ** (-(n - 2) / 2))


def eval_V_lambda(n, lam, r, *, swap=False, epsrel=None, node_cap=None):
    """
    V_lambda(r) = n(n+2) int_0^1 (t U + (1-t) U^lam)^(4/(n-2)) dt.

    The integrand is normalised node by node by its larger endpoint value so
    the relative tolerance applies to every radius, then integrated with
    adaptive Gauss-Kronrod (21 points per panel) under a cap on the total
    number of integrand evaluations. ``swap`` integrates the t <-> 1-t
    mirror of the integrand.
    """
    n = _dimension(n)
    lam = _lambda(lam)
    quadrature = get_lab_settings()["QUADRATURE"]
    epsrel = quadrature["EPSREL"] if epsrel is None else epsrel
    node_cap = quadrature["NODE_CAP"] if node_cap is None else node_cap

    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise PreconditionError("V_lambda is evaluated at r > 0", inequality="r > 0")

    power = 4 / (n - 2)
    u = np.atleast_1d(eval_bubble(n, r))
    u_lam = np.atleast_1d(kelvin_bubble(n, lam, r))
    first, second = (u_lam, u) if swap else (u, u_lam)
    scale = np.maximum(u, u_lam)

    def integrand(t):
        return ((t * first + (1 - t) * second) / scale) ** power

    result, error, info = quad_vec(
        integrand,
        0,
        1,
        epsabs=0,
        epsrel=epsrel,
        norm="max",
        limit=max(node_cap // 21, 1),
        quadrature="gk21",
        full_output=True,
    )
    if not info.success:
        achieved = float(error / max(np.max(np.abs(result)), np.finfo(float).tiny))
        raise QuadratureError(
            f"V_lambda quadrature did not reach epsrel={epsrel} (achieved {achieved:.3e})",
            achieved=achieved,
        )

    values = n * (n + 2) * scale**power * result
    return float(values[0]) if np.ndim(r) == 0 else values


def potential_bounds(n, lam, r):
    """Pointwise bounds n(n+2) min(U, U^lam)^(4/(n-2)) <= V_lambda <= ... max(...)."""
    n = _dimension(n)
    u = eval_bubble(n, r)
    u_lam = kelvin_bubble(n, lam, r)
    power = 4 / (n - 2)
    return (
        n * (n + 2) * np.minimum(u, u_lam) ** power,
        n * (n + 2) * np.maximum(u, u_lam) ** power,
    )


def eval_xi(n, Q, mu, P):
    """
    xi(P) = (mu / (1 + mu^2 d^2))^((n-2)/2) with d the Euclidean distance
    between ``P`` and ``Q`` in the chart.
    """
    n = _dimension(n)
    if not mu > 0:
        raise PreconditionError("mu must be positive", inequality="mu > 0")
    d = float(np.linalg.norm(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)))
    return (mu / (1 + mu**2 * d**2)) ** ((n - 2) / 2)


def eval_xi_tilde(n, Q, mu, P, jet, f2, f3):
    """
    xi corrected by the two angular terms
    c(n) R~(2)(theta) f2(mu d) mu^((n-10)/2) and
    c(n) R~(3)(theta) f3(mu d) mu^((n-12)/2).

    At P = Q the direction is undefined and both corrections vanish with f2
    and f3, so xi is returned.
    """
    from yamabelab.sphere import build_R_bar_tilde

    n = _dimension(n)
    xi = eval_xi(n, Q, mu, P)
    offset = np.asarray(P, dtype=float) - np.asarray(Q, dtype=float)
    d = float(np.linalg.norm(offset))
    if d == 0:
        return xi

    theta = offset / d
    _, r2_tilde = build_R_bar_tilde(jet, 2)
    _, r3_tilde = build_R_bar_tilde(jet, 3)
    c = conformal_constant(n)

    correction = c * r2_tilde.evaluate(theta) * f2(mu * d) * mu ** ((n - 10) / 2)
    correction += c * r3_tilde.evaluate(theta) * f3(mu * d) * mu ** ((n - 12) / 2)
    return xi - float(correction)
