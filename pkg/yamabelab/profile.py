"""
The composite blow-up profile

    v = U + M^(-8/(n-2)) v2 + M^(-10/(n-2)) v3,
    v2 = -c(n) R-tilde^(2)(theta) f2(r),  v3 = -c(n) R-tilde^(3)(theta) f3(r),

its residual in the rescaled Yamabe equation and the error envelopes for
sampled solutions around it.

Every field here is separable: a sum of terms P(theta) f(r) with P a
homogeneous polynomial read on the unit sphere. Derivatives are taken by
differentiating the polynomial extension in ambient coordinates.
"""

import logging
import math

from dataclasses import dataclass, field

import numpy as np

from yamabelab.bubble import conformal_constant, scaled_bubble
from yamabelab.conf import get_lab_settings
from yamabelab.curvature import (
    cnc_rescaled_coeffs,
    r3_component_split,
    scalar_curvature_rescaled,
)
from yamabelab.exceptions import (
    ConsistencyError,
    DependencyError,
    PreconditionError,
    RefinementError,
)
from yamabelab.radial import RadialFunction
from yamabelab.sphere import SphericalPolynomial, build_R_bar_tilde, product_mean
from yamabelab.sturm_liouville import BvpSolution
from yamabelab.utils import log_grid, loglog_slope


logger = logging.getLogger("yamabelab.profile")

V3_VARIANTS = ("full", "eigen")

# Fitted constants growing faster than M^GROWTH_SLOPE_LIMIT are flagged
GROWTH_SLOPE_LIMIT = 0.1


def zone_radius(n, M, epsilon=None):
    """M^((16-eps)/(n-2)^2), the radius up to which the residual bound is claimed."""
    if epsilon is None:
        epsilon = get_lab_settings()["PROFILE"]["EPSILON"]
    return M ** ((16 - epsilon) / (n - 2) ** 2)


def sample_directions(n, count=None, seed=None):
    """``count`` reproducible unit vectors drawn from ``default_rng(seed)``."""
    profile_settings = get_lab_settings()["PROFILE"]
    count = profile_settings["DIRECTIONS"] if count is None else count
    seed = profile_settings["SEED"] if seed is None else seed
    rng = np.random.default_rng(seed)
    directions = rng.normal(size=(count, n))
    return directions / np.linalg.norm(directions, axis=-1, keepdims=True)


def constant_radial(r, order=0):
    r = np.asarray(r, dtype=float)
    return np.ones_like(r) if order == 0 else np.zeros_like(r)


@dataclass(frozen=True, eq=False)
class SeparableTerm:
    """
    weight * P(theta) * f(r). ``radial`` is a RadialFunction or a callable
    ``g(r, order)``; when ``problem`` is given, f'' comes from its ODE
    instead of the spline.
    """

    angular: SphericalPolynomial
    radial: object
    weight: float = 1.0
    problem: object = None
    label: str = ""

    @property
    def degree(self):
        return self.angular.degree

    def _spline_jet(self, r):
        if isinstance(self.radial, RadialFunction):
            return (
                np.asarray(self.radial(r)),
                np.asarray(self.radial.derivative(r, 1)),
                np.asarray(self.radial.derivative(r, 2)),
            )
        return tuple(np.asarray(self.radial(r, order)) for order in range(3))

    def _ode_second_derivative(self, r, f, f1):
        problem = self.problem
        return (
            -problem.rhs_values(r)
            - (problem.n - 1) * f1 / r
            - (problem.potential_values(r) - problem.delta0 / r**2) * f
        )

    def radial_jet(self, r):
        """(f, f', f'') at ``r``, each already multiplied by the weight."""
        r = np.asarray(r, dtype=float)
        f, f1, f2 = self._spline_jet(r)
        if self.problem is not None:
            f2 = self._ode_second_derivative(r, f, f1)
        return self.weight * f, self.weight * f1, self.weight * f2

    def second_derivative_drift(self, r):
        """Max |spline f'' - ODE f''| relative to max |ODE f''| over ``r``."""
        if self.problem is None:
            return 0.0
        r = np.asarray(r, dtype=float)
        f, f1, spline = self._spline_jet(r)
        ode = self._ode_second_derivative(r, f, f1)
        scale = float(np.max(np.abs(ode)))
        if scale == 0:
            return 0.0
        return float(np.max(np.abs(spline - ode))) / scale

    @property
    def domain(self):
        if isinstance(self.radial, RadialFunction):
            return self.radial.r_min, self.radial.r_max
        return 0.0, math.inf


class SeparableField:
    """
    A sum of SeparableTerms. The first term is the base (a radial profile with
    a constant angular factor); the remaining terms are corrections.
    """

    def __init__(self, n, terms):
        self.n = int(n)
        self.terms = list(terms)
        if not self.terms:
            raise ValueError("A separable field needs at least a base term")
        base = self.terms[0]
        if base.degree != 0:
            raise ValueError("The base term of a separable field must be radial")
        for term in self.terms:
            if term.angular.n != self.n:
                raise ValueError(f"Term {term.label!r} lives in {term.angular.n} variables")

    def __repr__(self):
        labels = ", ".join(term.label or "?" for term in self.terms)
        return f"<SeparableField n={self.n} terms=[{labels}]>"

    @classmethod
    def radial(cls, n, radial, label="U"):
        return cls(n, [SeparableTerm(SphericalPolynomial.constant(n, 1.0), radial, label=label)])

    @classmethod
    def bubble(cls, n, mu=1.0):
        """The exact bubble family v_mu(y) = mu^((n-2)/2) U(mu y)."""
        return cls.radial(n, scaled_bubble(n, mu), label="U" if mu == 1 else f"U_{mu:g}")

    @property
    def is_radial(self):
        return all(term.degree == 0 for term in self.terms)

    @property
    def domain(self):
        lows, highs = zip(*(term.domain for term in self.terms), strict=True)
        return max(lows), min(highs)

    def _polar(self, points):
        points = np.asarray(points, dtype=float)
        r = np.linalg.norm(points, axis=-1)
        if np.any(r <= 0):
            raise PreconditionError(
                "Separable fields are evaluated away from the origin", inequality="r > 0"
            )
        return points, r, points / r[..., None]

    def value(self, points):
        _, r, theta = self._polar(points)
        total = np.zeros(r.shape)
        for term in self.terms:
            f, _, _ = term.radial_jet(r)
            total = total + term.angular.evaluate(theta) * f
        return total

    def gradient(self, points):
        _, r, theta = self._polar(points)
        total = np.zeros(r.shape + (self.n,))
        for term in self.terms:
            d = term.degree
            f, f1, _ = term.radial_jet(r)
            P = term.angular.evaluate(theta)
            grad_P = term.angular.gradient(theta)
            total = total + (f / r)[..., None] * grad_P
            total = total + (P * (f1 - d * f / r))[..., None] * theta
        return total

    def hessian(self, points):
        _, r, theta = self._polar(points)
        identity = np.eye(self.n)
        outer = theta[..., :, None] * theta[..., None, :]
        total = np.zeros(r.shape + (self.n, self.n))
        for term in self.terms:
            d = term.degree
            f, f1, f2 = term.radial_jet(r)
            P = term.angular.evaluate(theta)
            grad_P = term.angular.gradient(theta)
            hess_P = term.angular.hessian(theta)
            tangential = (f1 - d * f / r) / r
            mixed = grad_P[..., :, None] * theta[..., None, :]
            total = total + (f / r**2)[..., None, None] * hess_P
            total = total + tangential[..., None, None] * (mixed + np.swapaxes(mixed, -1, -2))
            normal = f2 - 2 * d * f1 / r + d * (d + 1) * f / r**2
            total = total + (P * normal)[..., None, None] * outer
            total = total + (P * tangential)[..., None, None] * (identity - outer)
        return total

    def laplacian(self, points):
        _, r, theta = self._polar(points)
        n = self.n
        total = np.zeros(r.shape)
        for term in self.terms:
            d = term.degree
            f, f1, f2 = term.radial_jet(r)
            P = term.angular.evaluate(theta)
            total = total + P * (f2 + (n - 1) * f1 / r - d * (d + n - 2) * f / r**2)
            if d >= 2:
                total = total + f * term.angular.laplacian().evaluate(theta) / r**2
        return total

    def check_refinement(self, r, tolerance=None):
        """
        Raise RefinementError when a spline second derivative has drifted from
        the ODE it solves by more than ``tolerance`` over ``r``.
        """
        if tolerance is None:
            tolerance = get_lab_settings()["PROFILE"]["REFINEMENT_TOLERANCE"]
        drifts = {term.label: term.second_derivative_drift(r) for term in self.terms}
        worst = max(drifts, key=drifts.get)
        if drifts[worst] > tolerance:
            raise RefinementError(
                f"Second derivative of {worst!r} is under-resolved (relative drift"
                f" {drifts[worst]:.2e} > {tolerance:.1e}); refine its grid",
                order=2,
                drifts=drifts,
            )
        return drifts


def metric_correction(jet, M, separable, points):
    """b-bar . grad + d-bar : hess of ``separable``, i.e. (Delta_g - Delta) applied to it."""
    b, d = cnc_rescaled_coeffs(jet, points, M)
    gradient = separable.gradient(points)
    hessian = separable.hessian(points)
    return np.einsum("...i,...i->...", b, gradient) + np.einsum("...ij,...ij->...", d, hessian)


def _unpack_solution(solution):
    if isinstance(solution, BvpSolution):
        return solution.profile, solution.problem
    return solution, None


@dataclass(frozen=True, eq=False)
class ProfileApprox:
    n: int
    M: float
    v2_angular: SphericalPolynomial
    v2_radial: RadialFunction
    v3_angular: SphericalPolynomial
    v3_radial: RadialFunction
    v3_eigen_angular: SphericalPolynomial
    v2_problem: object = None
    v3_problem: object = None

    def __post_init__(self):
        if not self.M >= 1:
            raise PreconditionError(f"Blow-up height M={self.M!r} is below 1", inequality="M >= 1")
        for label in ("v2_angular", "v3_angular", "v3_eigen_angular"):
            polynomial = getattr(self, label)
            mean = float(polynomial.mean())
            if abs(mean) > 1e-10 * max(polynomial.max_abs_coefficient(), 1.0):
                raise ConsistencyError(f"{label} has non-zero sphere mean {mean!r}", lhs=mean, rhs=0)

    def __repr__(self):
        return f"<ProfileApprox n={self.n} M={self.M:g}>"

    @property
    def v2_weight(self):
        return self.M ** (-8 / (self.n - 2))

    @property
    def v3_weight(self):
        return self.M ** (-10 / (self.n - 2))

    @property
    def v3_difference_norm(self):
        """L2 sphere norm of the angular part dropped by the eigencomponent variant."""
        difference = self.v3_angular - self.v3_eigen_angular
        return math.sqrt(max(product_mean(difference, difference), 0.0))

    def as_field(self, v3="full"):
        if v3 not in V3_VARIANTS:
            raise ValueError(f"v3 must be one of {V3_VARIANTS}, got {v3!r}")
        v3_angular = self.v3_angular if v3 == "full" else self.v3_eigen_angular
        terms = [
            SeparableTerm(SphericalPolynomial.constant(self.n, 1.0), scaled_bubble(self.n, 1.0), label="U")
        ]
        if not self.v2_angular.is_zero():
            terms.append(
                SeparableTerm(
                    self.v2_angular, self.v2_radial, self.v2_weight, self.v2_problem, label="v2"
                )
            )
        if not v3_angular.is_zero():
            terms.append(
                SeparableTerm(
                    v3_angular, self.v3_radial, self.v3_weight, self.v3_problem, label=f"v3_{v3}"
                )
            )
        return SeparableField(self.n, terms)

    def evaluate(self, points, v3="full"):
        return self.as_field(v3).value(points)

    def gradient(self, points, v3="full"):
        return self.as_field(v3).gradient(points)

    def laplacian(self, points, v3="full"):
        return self.as_field(v3).laplacian(points)

    def physical(self, x, v3="full"):
        """u-tilde(x) = M v(M^(2/(n-2)) x)."""
        x = np.asarray(x, dtype=float)
        return self.M * self.evaluate(self.M ** (2 / (self.n - 2)) * x, v3=v3)


def build_profile(jet, n, M, f2=None, f3=None):
    """
    Assemble the composite profile of a jet at height M from solved f2 and
    f3 (BvpSolutions, or bare RadialFunctions).
    """
    missing = [name for name, value in (("f2", f2), ("f3", f3)) if value is None]
    if missing:
        raise DependencyError(
            f"build_profile needs the solved {' and '.join(missing)}", missing=missing
        )
    if jet.n != n:
        raise PreconditionError(f"Jet has n={jet.n}, profile requested for n={n}", inequality="jet.n == n")

    v2_radial, v2_problem = _unpack_solution(f2)
    v3_radial, v3_problem = _unpack_solution(f3)
    for label, problem in (("f2", v2_problem), ("f3", v3_problem)):
        if problem is not None and problem.n != n:
            raise PreconditionError(
                f"{label} was solved for n={problem.n}, not n={n}", inequality=f"{label}.n == n"
            )

    c = conformal_constant(n)
    _, tilde2 = build_R_bar_tilde(jet, 2)
    _, tilde3 = build_R_bar_tilde(jet, 3)
    split = r3_component_split(jet)
    eigen = split["components"].get(3)
    eigen_angular = (
        eigen.polynomial.to_float() * -c if eigen is not None else SphericalPolynomial.zero(n, 3)
    )

    profile = ProfileApprox(
        n=n,
        M=M,
        v2_angular=tilde2.to_float() * -c,
        v2_radial=v2_radial,
        v3_angular=tilde3.to_float() * -c,
        v3_radial=v3_radial,
        v3_eigen_angular=eigen_angular,
        v2_problem=v2_problem,
        v3_problem=v3_problem,
    )
    logger.debug(
        "Built profile n=%d M=%g, v3 full/eigen difference %.3e",
        n,
        M,
        profile.v3_difference_norm,
    )
    return profile


@dataclass(frozen=True, eq=False)
class SampledSolution:
    """Values on the product grid radii x directions, shape (len(radii), len(directions))."""

    radii: np.ndarray
    directions: np.ndarray
    values: np.ndarray
    description: str = "loaded"
    M: float | None = None
    source_field: object = field(default=None, repr=False)

    def __post_init__(self):
        radii = np.array(self.radii, dtype=float)
        directions = np.array(self.directions, dtype=float)
        values = np.array(self.values, dtype=float)
        if radii.ndim != 1 or np.any(radii <= 0) or np.any(np.diff(radii) <= 0):
            raise ValueError("radii must be positive and strictly increasing")
        if directions.ndim != 2:
            raise ValueError("directions must have shape (count, n)")
        if not np.allclose(np.linalg.norm(directions, axis=-1), 1.0, rtol=1e-12, atol=1e-12):
            raise ValueError("directions must be unit vectors")
        if values.shape != (len(radii), len(directions)):
            raise ValueError(
                f"values must have shape {(len(radii), len(directions))}, got {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"{self.description} has non-finite values")
        object.__setattr__(self, "radii", radii)
        object.__setattr__(self, "directions", directions)
        object.__setattr__(self, "values", values)

    @property
    def n(self):
        return self.directions.shape[1]

    @property
    def points(self):
        return self.radii[:, None, None] * self.directions[None, :, :]

    @classmethod
    def from_field(cls, separable, radii, directions, description="exact profile", M=None):
        radii = np.asarray(radii, dtype=float)
        directions = np.asarray(directions, dtype=float)
        values = separable.value(radii[:, None, None] * directions[None, :, :])
        return cls(radii, directions, values, description=description, M=M, source_field=separable)

    @classmethod
    def from_profile(cls, profile, radii, directions=None, v3="full"):
        if directions is None:
            directions = sample_directions(profile.n)
        return cls.from_field(
            profile.as_field(v3), radii, directions, description="exact profile", M=profile.M
        )

    def perturbed(self, perturbation, label="perturbation"):
        """
        Add ``perturbation(r, theta)`` evaluated with r of shape (R, 1) and
        theta of shape (1, D, n); the separable description is dropped.
        """
        extra = np.asarray(
            perturbation(self.radii[:, None], self.directions[None, :, :]), dtype=float
        )
        values = self.values + np.broadcast_to(extra, self.values.shape)
        return SampledSolution(
            self.radii,
            self.directions,
            values,
            description=f"{self.description} + {label}",
            M=self.M,
        )


def pde_residual(profile, jet, radii=None, directions=None, v3="eigen", epsilon=None):
    """
    Residual of U + F^(3) in the rescaled equation

        Delta_g v - c-bar v + n(n-2) v^((n+2)/(n-2)),

    with Delta_g = Delta + b-bar . grad + d-bar : hess, and the constant C
    fitted in |residual| <= C M^(-12/(n-2)) (1+r)^(6-n).
    """
    n, M = profile.n, profile.M
    if epsilon is None:
        epsilon = get_lab_settings()["PROFILE"]["EPSILON"]
    zone = zone_radius(n, M, epsilon)
    if radii is None:
        radii = log_grid(1e-2, zone, 16)
    radii = np.asarray(radii, dtype=float)
    if np.max(radii) > zone * (1 + 1e-12):
        logger.warning(
            "Residual requested up to r=%g, beyond the zone radius M^((16-eps)/(n-2)^2)=%g",
            float(np.max(radii)),
            zone,
        )
    if directions is None:
        directions = sample_directions(n)

    separable = profile.as_field(v3)
    drifts = separable.check_refinement(radii)

    points = radii[:, None, None] * np.asarray(directions, dtype=float)[None, :, :]
    value = separable.value(points)
    exponent = (n + 2) / (n - 2)
    residual = (
        separable.laplacian(points)
        + metric_correction(jet, M, separable, points)
        - scalar_curvature_rescaled(jet, points, M) * value
        + n * (n - 2) * np.sign(value) * np.abs(value) ** exponent
    )

    envelope = M ** (-12 / (n - 2)) * (1 + radii) ** (6 - n)
    ratios = np.max(np.abs(residual), axis=1) / envelope
    return {
        "tag": "dec8e1",
        "n": n,
        "M": M,
        "v3": v3,
        "zone_radius": zone,
        "radii": radii,
        "residual": residual,
        "ratios": ratios,
        "fitted_constant": float(np.max(ratios)),
        "second_derivative_drift": drifts,
    }


def envelope_exponent(n, regime, epsilon=None):
    if regime == "improved":
        return 8 - n
    if regime == "coarse":
        if epsilon is None:
            epsilon = get_lab_settings()["PROFILE"]["EPSILON"]
        return 8 - n + 0.75 * (n - 10 + math.sqrt(epsilon))
    raise ValueError(f"Unknown envelope regime {regime!r}, expected 'coarse' or 'improved'")


def error_envelope_check(v, profile, regime="improved", epsilon=None, v3="full"):
    """
    Fit C in |v - (U + F^(3))| <= C M^(-12/(n-2)) (1+r)^e with e = 8-n
    (improved) or 8-n+a-bar, a-bar = 3/4 (n-10+sqrt(eps)) (coarse).
    """
    n = profile.n
    if v.n != n:
        raise PreconditionError(
            f"Sampled solution has n={v.n}, profile has n={n}", inequality="v.n == profile.n"
        )
    M = profile.M
    exponent = envelope_exponent(n, regime, epsilon)
    error = v.values - profile.evaluate(v.points, v3=v3)
    envelope = M ** (-12 / (n - 2)) * (1 + v.radii) ** exponent
    ratios = np.max(np.abs(error), axis=1) / envelope
    return {
        "tag": "2omega82" if regime == "improved" else "nov19e6",
        "regime": regime,
        "n": n,
        "M": M,
        "exponent": exponent,
        "description": v.description,
        "radii": v.radii,
        "ratios": ratios,
        "fitted_constant": float(np.max(ratios)),
    }


def compare_envelope_fits(reports):
    """
    Log-log slope of the fitted constant against M across ``reports``; a
    slope above GROWTH_SLOPE_LIMIT means the claimed rate is not the
    observed one.
    """
    pairs = sorted((float(report["M"]), float(report["fitted_constant"])) for report in reports)
    Ms = np.array([M for M, _ in pairs])
    constants = np.array([C for _, C in pairs])
    positive = constants > 0
    slope = None
    if positive.sum() >= 2 and len(set(Ms[positive])) >= 2:
        slope = loglog_slope(Ms[positive], constants[positive], Ms.min(), Ms.max())
    spread = (
        float(constants.max() / constants.min()) if np.all(positive) and len(constants) else None
    )
    flagged = bool(slope is not None and slope > GROWTH_SLOPE_LIMIT)
    if flagged:
        logger.warning("Fitted envelope constant grows like M^%.3f", slope)
    return {
        "M": Ms,
        "constants": constants,
        "slope": slope,
        "spread": spread,
        "flagged": flagged,
    }
