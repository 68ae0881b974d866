"""
Singular radial boundary-value problems T a = -H around the bubble, where

    T a = a'' + (n-1)/r a' + (V(r) - delta0 / r^2) a

and V is either the bubble potential n(n+2) U^(4/(n-2)) or the interpolated
potential V_lambda. The presets f2, f3, f2_lambda and f_plambda_l, their bound
envelopes and the comparison functions phi_1 ... phi_4 live here too.
"""

import logging
import math

from dataclasses import dataclass, field
from functools import cache

import numpy as np
import sympy

from scipy.linalg import LinAlgError, solve_banded

from yamabelab.bubble import eval_bubble, eval_V_lambda, kelvin_bubble
from yamabelab.closures import get_closure
from yamabelab.closures.base import BaseClosure, TridiagonalSystem
from yamabelab.conf import get_lab_settings
from yamabelab.exceptions import PreconditionError, SolverError
from yamabelab.radial import RadialFunction
from yamabelab.utils import log_grid


logger = logging.getLogger("yamabelab.sturm_liouville")

POTENTIALS = ("bubble", "interpolated")

# Reported violations per check are capped at this many nodes
MAX_REPORTED_VIOLATIONS = 20


def positive_root(n, delta0):
    """lambda_+ = the positive root of p^2 + (n-2) p - delta0."""
    return (-(n - 2) + math.sqrt((n - 2) ** 2 + 4 * delta0)) / 2


def l_bar(n):
    """Largest admissible degree l for the f_plambda_l family."""
    return n - 4


@dataclass(frozen=True)
class BoundParams:
    """0 <= H <= C r^beta (1+r)^(-beta-alpha); C is fitted when left as None."""

    beta: float
    alpha: float
    C: float | None = None


@dataclass(frozen=True, eq=False)
class SturmLiouvilleProblem:
    n: int
    delta0: float
    rhs: object
    bound_params: BoundParams
    r_lo: float = 0.0
    r_hi: float | None = None
    potential: str = "bubble"
    lam: float = 1.0
    growth_exponent: float | None = None
    points_per_decade: int | None = None
    grid_r_min: float | None = None
    grid_r_max: float | None = None
    tolerance: float | None = None
    allow_signed_rhs: bool = False
    name: str = ""

    def __post_init__(self):
        if self.potential not in POTENTIALS:
            raise PreconditionError(
                f"Unknown potential {self.potential!r}, expected one of {POTENTIALS}",
                inequality="potential in {bubble, interpolated}",
            )
        if self.r_lo < 0:
            raise PreconditionError("r_lo must be 0 or positive", inequality="r_lo >= 0")
        if self.r_hi is not None and not self.r_hi > max(self.r_lo, 0):
            raise PreconditionError("r_hi must exceed r_lo", inequality="r_hi > r_lo")

    def __repr__(self):
        return f"<SturmLiouvilleProblem {self.name or '?'} n={self.n} delta0={self.delta0:g}>"

    @property
    def inner_is_asymptotic(self):
        return self.r_lo == 0

    @property
    def outer_is_asymptotic(self):
        return self.r_hi is None

    @property
    def lambda_plus(self):
        return positive_root(self.n, self.delta0)

    @property
    def inner_exponent(self):
        """Local behaviour a ~ r^k at r -> 0, used by the Robin closure."""
        return min(self.lambda_plus, self.bound_params.beta + 2)

    @property
    def outer_exponent(self):
        return 2 - self.bound_params.alpha

    @property
    def certificate_exponent(self):
        if self.growth_exponent is not None:
            return self.growth_exponent
        return min(self.bound_params.beta + 2, self.lambda_plus - 0.5)

    def build_grid(self):
        lab_settings = get_lab_settings()
        ppd = self.points_per_decade or lab_settings["GRID"]["POINTS_PER_DECADE"]
        if self.inner_is_asymptotic:
            r_start = self.grid_r_min or lab_settings["GRID"]["R_MIN"]
        else:
            r_start = self.r_lo
        if self.outer_is_asymptotic:
            r_end = self.grid_r_max or lab_settings["GRID"]["R_MAX"]
        else:
            r_end = self.r_hi
        return log_grid(r_start, r_end, ppd)

    def potential_values(self, r):
        if self.potential == "bubble":
            return self.n * (self.n + 2) * (1 + r**2) ** -2.0
        return eval_V_lambda(self.n, self.lam, r)

    def rhs_values(self, r):
        return np.asarray(self.rhs(r), dtype=float) * np.ones_like(r)

    def validate(self, grid=None):
        """Check the solvability hypotheses and return the certificate exponent."""
        n = self.n
        delta0 = self.delta0
        beta = self.bound_params.beta
        alpha = self.bound_params.alpha
        p = self.certificate_exponent

        if int(n) != n or n < 3:
            raise PreconditionError(f"Dimension must be an integer >= 3, got {n}", inequality="n >= 3")
        if delta0 < n:
            raise PreconditionError(
                f"δ₀ < n ({delta0:g} < {n})", inequality="delta0 >= n"
            )
        if beta < 0:
            raise PreconditionError(f"β < 0 ({beta:g})", inequality="beta >= 0")
        if self.outer_is_asymptotic:
            if not alpha > 2:
                raise PreconditionError(f"α ≤ 2 ({alpha:g})", inequality="alpha > 2")
            if not delta0 + (alpha - 2) * (n - alpha) > 0:
                raise PreconditionError(
                    f"δ₀ + (α−2)(n−α) ≤ 0 ({delta0 + (alpha - 2) * (n - alpha):g})",
                    inequality="delta0 + (alpha-2)(n-alpha) > 0",
                )
        if not 0 < p <= beta + 2:
            raise PreconditionError(
                f"growth exponent p={p:g} outside (0, β+2]", inequality="0 < p <= beta+2"
            )
        if not p * (p + n - 2) < delta0:
            raise PreconditionError(
                f"p(p+n−2) ≥ δ₀ ({p * (p + n - 2):g} ≥ {delta0:g})",
                inequality="p(p+n-2) < delta0",
            )
        if grid is not None and not self.allow_signed_rhs:
            if np.any(self.rhs_values(grid) < 0):
                raise PreconditionError(
                    f"H < 0 somewhere on the domain of {self.name or 'the problem'}",
                    inequality="H >= 0",
                )
        return p


@dataclass(frozen=True, eq=False)
class BvpSolution:
    problem: SturmLiouvilleProblem
    profile: RadialFunction
    residual_norm: float
    bound_certificate: float | None
    closure: str = "robin"
    rhs_constant: float | None = None
    details: dict = field(default_factory=dict)

    def __repr__(self):
        return (
            f"<BvpSolution {self.profile.name or '?'} residual={self.residual_norm:.3e}"
            f" C0={self.bound_certificate}>"
        )

    @property
    def grid(self):
        return self.profile.grid

    @property
    def values(self):
        return self.profile.values


def _assemble(problem, grid, h):
    n = problem.n
    r2 = grid**2
    size = len(grid)
    lower = np.full(size, 1 / h**2 - (n - 2) / (2 * h))
    upper = np.full(size, 1 / h**2 + (n - 2) / (2 * h))
    main = -2 / h**2 + r2 * problem.potential_values(grid) - problem.delta0
    rhs = -r2 * problem.rhs_values(grid)
    return TridiagonalSystem(grid, h, lower, main, upper, rhs)


def _solve_system(system):
    size = len(system.grid)
    start = 1 if system.inner_dirichlet else 0
    stop = size - 1 if system.outer_dirichlet else size

    ab = np.zeros((3, stop - start))
    ab[0, 1:] = system.upper[start : stop - 1]
    ab[1] = system.main[start:stop]
    ab[2, :-1] = system.lower[start + 1 : stop]

    try:
        interior = solve_banded((1, 1), ab, system.rhs[start:stop])
    except (LinAlgError, ValueError) as e:
        raise SolverError(f"Banded solve failed: {e}") from e
    if not np.all(np.isfinite(interior)):
        raise SolverError("Banded solve returned non-finite values")

    values = np.zeros(size)
    values[start:stop] = interior
    return values


def residual_field(problem, grid, values):
    """
    (1+r)^alpha (T a + H) on nodes 2 .. N-3, using fourth-order stencils in
    s = log r that are independent of the second-order solve.
    """
    n = problem.n
    h = float(np.log(grid[1] / grid[0]))
    a = values
    a_s = (-a[4:] + 8 * a[3:-1] - 8 * a[1:-3] + a[:-4]) / (12 * h)
    a_ss = (-a[4:] + 16 * a[3:-1] - 30 * a[2:-2] + 16 * a[1:-3] - a[:-4]) / (12 * h**2)
    r = grid[2:-2]
    operator = (a_ss + (n - 2) * a_s) / r**2 + (
        problem.potential_values(r) - problem.delta0 / r**2
    ) * a[2:-2]
    residual = operator + problem.rhs_values(r)
    return r, residual * (1 + r) ** problem.bound_params.alpha


def certificate_envelope(r, p, alpha):
    return r**p * (1 + r) ** (-p + 2 - alpha)


def rhs_envelope(r, beta, alpha):
    return r**beta * (1 + r) ** (-beta - alpha)


def solve_bvp(problem, closure="default"):
    """
    Solve T a = -H with a second-order log-grid discretisation. Asymptotic
    ends are closed by ``closure`` (a name from YAMABELAB_CLOSURES, a dotted
    path or a BaseClosure instance); r_lo = lambda and a finite r_hi are
    Dirichlet ends.
    """
    lab_settings = get_lab_settings()
    tolerance = problem.tolerance or lab_settings["SOLVER"]["TOLERANCE"]
    nonneg_tolerance = lab_settings["SOLVER"]["NONNEGATIVITY_TOLERANCE"]

    if not isinstance(closure, BaseClosure):
        closure = get_closure(closure)

    grid = problem.build_grid()
    p = problem.validate(grid)
    h = float(np.log(grid[1] / grid[0]))
    solve_grid = closure.extend_grid(problem, grid, h)
    offset = int(np.argmin(np.abs(solve_grid - grid[0])))

    system = _assemble(problem, solve_grid, h)
    if problem.inner_is_asymptotic:
        closure.close_inner(system, problem.inner_exponent)
    else:
        system.inner_dirichlet = True
    if problem.outer_is_asymptotic:
        closure.close_outer(system, problem.outer_exponent)
    else:
        system.outer_dirichlet = True

    values = _solve_system(system)[offset : offset + len(grid)]
    if not problem.inner_is_asymptotic:
        values[0] = 0.0
    if not problem.outer_is_asymptotic:
        values[-1] = 0.0

    profile = RadialFunction(
        grid,
        values,
        inner_exponent=problem.inner_exponent if problem.inner_is_asymptotic else None,
        outer_exponent=problem.outer_exponent if problem.outer_is_asymptotic else None,
        name=problem.name,
    )

    _, residual = residual_field(problem, grid, values)
    residual_norm = float(np.max(np.abs(residual)))
    logger.debug(
        "Solved %s on %d nodes with %s closure, residual %.3e",
        problem.name or "problem",
        len(solve_grid),
        closure.name,
        residual_norm,
    )
    if residual_norm > tolerance:
        raise SolverError(
            f"Residual {residual_norm:.3e} of {problem.name or 'the problem'} exceeds"
            f" the tolerance {tolerance:.3e}; refine the grid"
        )

    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    if not problem.allow_signed_rhs and np.any(values < -nonneg_tolerance * max(scale, 1.0)):
        raise SolverError(
            f"{problem.name or 'Solution'} is negative at some node although H >= 0"
        )

    alpha = problem.bound_params.alpha
    certificate = None
    if np.all(values >= -nonneg_tolerance * max(scale, 1.0)):
        certificate = float(np.max(values / certificate_envelope(grid, p, alpha)))

    rhs = problem.rhs_values(grid)
    rhs_constant = float(np.max(np.abs(rhs) / rhs_envelope(grid, problem.bound_params.beta, alpha)))

    return BvpSolution(
        problem=problem,
        profile=profile,
        residual_norm=residual_norm,
        bound_certificate=certificate,
        closure=closure.name,
        rhs_constant=rhs_constant,
        details={"certificate_exponent": p, "nodes": len(solve_grid)},
    )


def _require(condition, message, inequality):
    if not condition:
        raise PreconditionError(message, inequality=inequality)


def _check_lambda_window(lam):
    window = get_lab_settings()["LAMBDA_WINDOW"]
    _require(
        abs(lam - 1) <= window,
        f"λ={lam:g} is outside the window [1−{window:g}, 1+{window:g}]",
        "|lambda - 1| <= LAMBDA_WINDOW",
    )


def f2_problem(n, **kwargs):
    _require(n >= 10, f"f2 needs n ≥ 10, got n={n}", "n >= 10")
    return SturmLiouvilleProblem(
        n=n,
        delta0=2 * n,
        rhs=lambda r: r**2 * eval_bubble(n, r),
        bound_params=BoundParams(beta=2, alpha=n - 4),
        name="f2",
        **kwargs,
    )


def f3_problem(n, **kwargs):
    _require(n >= 8, f"f3 needs n ≥ 8, got n={n}", "n >= 8")
    return SturmLiouvilleProblem(
        n=n,
        delta0=3 * (n + 1),
        rhs=lambda r: r**3 * eval_bubble(n, r),
        bound_params=BoundParams(beta=3, alpha=n - 5),
        name="f3",
        **kwargs,
    )


def f2_lambda_problem(n, lam, **kwargs):
    _require(n >= 10, f"f2_lambda needs n ≥ 10, got n={n}", "n >= 10")
    _check_lambda_window(lam)

    def rhs(r):
        return r**2 * kelvin_bubble(n, lam, r) * (1 - (lam / r) ** 8)

    return SturmLiouvilleProblem(
        n=n,
        delta0=2 * n,
        rhs=rhs,
        bound_params=BoundParams(beta=2, alpha=n - 4),
        r_lo=lam,
        potential="interpolated",
        lam=lam,
        name=f"f2_lambda({lam:g})",
        **kwargs,
    )


def f_plambda_l_problem(n, lam, l, eigenvalue=None, r_hi=1e4, **kwargs):
    _require(
        3 <= l <= l_bar(n),
        f"l={l} outside 3 ≤ l ≤ {l_bar(n)} for n={n}",
        "3 <= l <= l_bar",
    )
    _check_lambda_window(lam)
    eigenvalue = l * (l + n - 2) if eigenvalue is None else eigenvalue

    def rhs(r):
        return r**l * kelvin_bubble(n, lam, r) * (1 - (lam / r) ** (2 * l + 4))

    return SturmLiouvilleProblem(
        n=n,
        delta0=eigenvalue,
        rhs=rhs,
        bound_params=BoundParams(beta=l, alpha=n - 2 - l),
        r_lo=lam,
        r_hi=r_hi,
        potential="interpolated",
        lam=lam,
        name=f"f_plambda_l({lam:g}, {l})",
        **kwargs,
    )


def solve_f2(n, closure="default", **kwargs):
    return solve_bvp(f2_problem(n, **kwargs), closure=closure)


def solve_f3(n, closure="default", **kwargs):
    return solve_bvp(f3_problem(n, **kwargs), closure=closure)


def solve_f2_lambda(n, lam, closure="default", **kwargs):
    return solve_bvp(f2_lambda_problem(n, lam, **kwargs), closure=closure)


def solve_f_plambda_l(n, lam, l, eigenvalue=None, r_hi=1e4, closure="default", **kwargs):
    return solve_bvp(
        f_plambda_l_problem(n, lam, l, eigenvalue=eigenvalue, r_hi=r_hi, **kwargs),
        closure=closure,
    )


def _slack(solution, r):
    factor = get_lab_settings()["SOLVER"]["VIOLATION_FACTOR"]
    alpha = solution.problem.bound_params.alpha
    return factor * solution.residual_norm * r**2 * (1 + r) ** (-alpha)


def _lower_bound_report(solution, envelope, mask):
    r = solution.grid[mask]
    values = solution.values[mask]
    lower = envelope(r)
    margin = values - lower
    failing = margin < -_slack(solution, r)
    violations = [
        {"r": float(ri), "value": float(vi), "envelope": float(ei), "margin": float(mi)}
        for ri, vi, ei, mi in zip(
            r[failing], values[failing], lower[failing], margin[failing], strict=True
        )
    ][:MAX_REPORTED_VIOLATIONS]
    return {
        "lower_bound_ok": not bool(np.any(failing)),
        "violation_count": int(np.sum(failing)),
        "violations": violations,
        "min_margin": float(np.min(margin)) if len(margin) else None,
        "nodes_checked": int(len(r)),
    }


def _window_mask(solution, r_window, exclude_lo=False):
    r = solution.grid
    mask = (r >= r_window[0]) & (r <= r_window[1])
    if exclude_lo:
        mask &= r > solution.problem.r_lo
    return mask


def f2_lower_envelope(n, r):
    """U(r)/(6(n-4)) (r^4 + (3n-4)/(n-2) r^2)."""
    r = np.asarray(r, dtype=float)
    return eval_bubble(n, r) / (6 * (n - 4)) * (r**4 + (3 * n - 4) / (n - 2) * r**2)


def f2_lambda_lower_envelope(n, lam, epsilon, r):
    r = np.asarray(r, dtype=float)
    c = (3 * n - 4) / (n - 2)
    return (
        (1 - epsilon)
        / (6 * (n - 4))
        * kelvin_bubble(n, lam, r)
        * (r**4 * (1 - (lam / r) ** 8) + c * r**2 * (1 - (lam / r) ** 4))
    )


def check_f2_bounds(f2, n, r_window=(1e-3, 1e3)):
    """
    Lower bound f2 >= U/(6(n-4)) (r^4 + (3n-4)/(n-2) r^2) node by node, and the
    smallest C with f2 <= C r^(3/2) (1+r)^(9/2-n).
    """
    _require(n >= 10, f"f2 bounds need n ≥ 10, got n={n}", "n >= 10")
    mask = _window_mask(f2, r_window)
    report = {"tag": "nov19e1", "n": n, "r_window": list(r_window)}
    report.update(_lower_bound_report(f2, lambda r: f2_lower_envelope(n, r), mask))

    r = f2.grid
    report["upper_constant"] = float(np.max(f2.values / (r**1.5 * (1 + r) ** (4.5 - n))))
    report["exponents"] = f2.profile.check_exponents(
        get_lab_settings()["SOLVER"]["SLOPE_TOLERANCE"]
    )
    report["ok"] = report["lower_bound_ok"] and math.isfinite(report["upper_constant"])
    if not report["lower_bound_ok"]:
        logger.warning("f2 lower bound fails at %d nodes", report["violation_count"])
    return report


def check_f3_bounds(f3, n):
    """f3 <= C r^(5/2) (1+r)^(9/2-n) with a finite fitted C and inner exponent 3."""
    r = f3.grid
    constant = float(np.max(f3.values / (r**2.5 * (1 + r) ** (4.5 - n))))
    exponents = f3.profile.check_exponents(get_lab_settings()["SOLVER"]["SLOPE_TOLERANCE"])
    return {
        "tag": "aabb",
        "n": n,
        "upper_constant": constant,
        "nonnegative": bool(np.all(f3.values >= 0)),
        "exponents": exponents,
        "ok": math.isfinite(constant) and bool(np.all(f3.values >= 0)),
    }


def delta_of_epsilon(epsilon):
    table = get_lab_settings()["DELTA_OF_EPSILON"]
    for key, delta in table.items():
        if math.isclose(float(key), epsilon):
            return float(delta)
    raise PreconditionError(
        f"No δ(ε) configured for ε={epsilon:g}; add it to YAMABELAB['DELTA_OF_EPSILON']",
        inequality="|lambda - 1| <= delta(epsilon)",
    )


def check_f2lambda_bounds(f, n, lam, epsilon=0.1, r_window=(0.0, 1e3)):
    """
    (1-eps)/(6(n-4)) U^lam (r^4 (1-(lam/r)^8) + (3n-4)/(n-2) r^2 (1-(lam/r)^4)) <= f
    on (lambda, r_window[1]], and the smallest C with f <= C r^(6-n).
    """
    delta = delta_of_epsilon(epsilon)
    _require(
        abs(lam - 1) <= delta,
        f"|λ−1| = {abs(lam - 1):g} exceeds δ(ε) = {delta:g}",
        "|lambda - 1| <= delta(epsilon)",
    )
    mask = _window_mask(f, r_window, exclude_lo=True)
    report = {"tag": "mar10e2", "n": n, "lambda": lam, "epsilon": epsilon, "delta": delta}
    report.update(
        _lower_bound_report(f, lambda r: f2_lambda_lower_envelope(n, lam, epsilon, r), mask)
    )
    r = f.grid
    report["upper_constant"] = float(np.max(f.values / r ** (6.0 - n)))
    report["ok"] = report["lower_bound_ok"] and math.isfinite(report["upper_constant"])
    return report


def scan_lambda_window(n, epsilon=0.1, offsets=(0.01, 0.02, 0.05), **kwargs):
    """
    Largest tried |lambda - 1| for which the f2_lambda lower bound holds on both
    sides of 1. The delta(eps) table is bypassed here.
    """
    largest = 0.0
    rows = []
    for offset in sorted(offsets):
        ok = True
        for lam in (1 - offset, 1 + offset):
            f = solve_f2_lambda(n, lam, **kwargs)
            mask = _window_mask(f, (0.0, 1e3), exclude_lo=True)
            bound = _lower_bound_report(
                f, lambda r, lam=lam: f2_lambda_lower_envelope(n, lam, epsilon, r), mask
            )
            rows.append({"lambda": lam, "lower_bound_ok": bound["lower_bound_ok"]})
            ok = ok and bound["lower_bound_ok"]
        if not ok:
            break
        largest = offset
    return {"n": n, "epsilon": epsilon, "largest_offset": largest, "rows": rows}


def check_fpl_bounds(f, n, l, slope_window=None):
    """0 <= f <= C r^(l+4-n) and the outer log-log slope near r_hi."""
    r = f.grid
    r_hi = f.problem.r_hi
    slope_window = slope_window or (r_hi / 100, r_hi / 10)
    inside = r > f.problem.r_lo
    constant = float(np.max(f.values[inside] / r[inside] ** (l + 4.0 - n)))
    slope = f.profile.slope(*slope_window)
    expected = l + 4 - n
    tolerance = max(get_lab_settings()["SOLVER"]["SLOPE_TOLERANCE"], 5e-2)
    nonnegative = bool(np.all(f.values >= 0))
    return {
        "tag": "15-1new",
        "n": n,
        "l": l,
        "upper_constant": constant,
        "nonnegative": nonnegative,
        "outer_slope": slope,
        "expected_slope": expected,
        "ok": nonnegative and math.isfinite(constant) and abs(slope - expected) <= tolerance,
    }


# Symbolic side: the operator T with the bubble potential, for the
# supersolution identities and manufactured solutions.

_r = sympy.Symbol("r", positive=True)


def _symbolic_bubble(n):
    return (1 + _r**2) ** (-sympy.Rational(n - 2, 2))


def symbolic_operator(expr, n, delta0):
    potential = n * (n + 2) / (1 + _r**2) ** 2
    return (
        sympy.diff(expr, _r, 2)
        + sympy.Rational(n - 1) / _r * sympy.diff(expr, _r)
        + (potential - sympy.Integer(delta0) / _r**2) * expr
    )


def _vanishes(expr, n):
    """Exact zero test after clearing the bubble's fractional power."""
    cleared = sympy.expand(expr * (1 + _r**2) ** sympy.Rational(n - 2, 2))
    return sympy.simplify(cleared) == 0


@cache
def supersolution_expressions(n):
    U = _symbolic_bubble(n)
    phi1 = _r**4 * U / (6 * (n - 4))
    phi2 = sympy.Rational(3 * n - 4, 6 * (n - 4) * (n - 2)) * _r**2 * U
    g = _r**2 * U * (
        sympy.Rational(4 * (n - 2), 3 * (n - 4)) / (1 + _r**2)
        + sympy.Rational(2 * n, 3 * (n - 4)) * _r**2 / (1 + _r**2) ** 2
    )
    K = sympy.Rational(2 * (3 * n - 4), 3 * (n - 4))
    phi2_rhs = K * U * (_r**2 / (1 + _r**2) - sympy.Rational(n, n - 2) * _r**2 / (1 + _r**2) ** 2)
    remainder = U * _r**2 * sympy.Rational(4 * n * (n - 1), 3 * (n - 4) * (n - 2)) / (1 + _r**2) ** 2
    return {
        "phi1": phi1,
        "phi2": phi2,
        "g": g,
        "phi2_rhs": phi2_rhs,
        "remainder": remainder,
        "T_phi1": symbolic_operator(phi1, n, 2 * n),
        "T_phi2": symbolic_operator(phi2, n, 2 * n),
        "U": U,
    }


def _numeric(expr):
    function = sympy.lambdify(_r, expr, "numpy")
    return lambda r: np.asarray(function(np.asarray(r, dtype=float)), dtype=float) * np.ones_like(r)


def check_supersolutions(n, r_window=(1e-3, 1e3), points_per_decade=64):
    """
    T phi_1 + r^2 U = g > 0 and g > phi_2-RHS node by node, where
    T phi_2 = -phi_2-RHS. Identities are checked exactly and on the grid.
    """
    _require(n >= 10, f"Supersolutions need n ≥ 10, got n={n}", "n >= 10")
    expressions = supersolution_expressions(n)
    U = expressions["U"]
    r = log_grid(r_window[0], r_window[1], points_per_decade)

    phi1_residual = _numeric(expressions["T_phi1"] + _r**2 * U)(r)
    g = _numeric(expressions["g"])(r)
    phi2_rhs = _numeric(expressions["phi2_rhs"])(r)
    gap = g - phi2_rhs

    identities = {
        "T_phi1_plus_r2U_equals_g": _vanishes(
            expressions["T_phi1"] + _r**2 * U - expressions["g"], n
        ),
        "T_phi2_equals_minus_rhs": _vanishes(
            expressions["T_phi2"] + expressions["phi2_rhs"], n
        ),
        "g_minus_rhs_remainder": _vanishes(
            expressions["g"] - expressions["phi2_rhs"] - expressions["remainder"], n
        ),
    }
    scale = float(np.max(np.abs(g)))
    phi1_ok = bool(np.all(phi1_residual > 0))
    phi2_ok = bool(np.all(gap > 0))
    return {
        "tag": "supersolution",
        "n": n,
        "phi1": {
            "min": float(np.min(phi1_residual)),
            "identity_residual": float(np.max(np.abs(phi1_residual - g)) / scale),
            "ok": phi1_ok,
        },
        "phi2": {
            "min_gap": float(np.min(gap)),
            "ratio_at_r_max": float(g[-1] / phi2_rhs[-1]) if phi2_rhs[-1] else None,
            "ok": phi2_ok,
        },
        "identities": identities,
        "ok": phi1_ok and phi2_ok and all(identities.values()),
    }


def comparison_functions(n, lam, r):
    """phi_3 = phi_1 - phi_1^lambda and phi_4 = phi_2 - phi_2^lambda (Kelvin pairs)."""
    r = np.asarray(r, dtype=float)
    U = eval_bubble(n, r)
    U_lam = kelvin_bubble(n, lam, r)
    phi3 = r**4 * (U_lam * (1 - (lam / r) ** 8) + (U - U_lam)) / (6 * (n - 4))
    phi4 = (
        (3 * n - 4)
        / (6 * (n - 4) * (n - 2))
        * r**2
        * (U_lam * (1 - (lam / r) ** 4) + (U - U_lam))
    )
    return phi3, phi4


def check_comparison_functions(f, n, lam, epsilon=0.1, r_window=(0.0, 1e3)):
    """f2_lambda >= (1 - 2 eps)(phi_3 + phi_4) on (lambda, r_window[1]]."""
    mask = _window_mask(f, r_window, exclude_lo=True)

    def envelope(r):
        phi3, phi4 = comparison_functions(n, lam, r)
        return (1 - 2 * epsilon) * (phi3 + phi4)

    report = {"tag": "mar11e1", "n": n, "lambda": lam, "epsilon": epsilon}
    report.update(_lower_bound_report(f, envelope, mask))
    report["ok"] = report["lower_bound_ok"]
    return report


# Manufactured solutions

@cache
def manufactured_expressions(n):
    exact = _r**2 * (1 + _r) ** (-n)
    return exact, -symbolic_operator(exact, n, 2 * n)


def manufactured_problem(n, points_per_decade=16384):
    exact, rhs = manufactured_expressions(n)
    return (
        SturmLiouvilleProblem(
            n=n,
            delta0=2 * n,
            rhs=_numeric(rhs),
            bound_params=BoundParams(beta=1, alpha=n),
            points_per_decade=points_per_decade,
            allow_signed_rhs=True,
            name="manufactured",
        ),
        _numeric(exact),
    )


def solve_manufactured(n, points_per_decade=16384, r_window=(1e-2, 1e2), closure="default"):
    """Solve T a = T a* for a* = r^2 (1+r)^(-n) and measure the relative error."""
    problem, exact = manufactured_problem(n, points_per_decade)
    solution = solve_bvp(problem, closure=closure)
    mask = _window_mask(solution, r_window)
    expected = exact(solution.grid[mask])
    error = float(np.max(np.abs(solution.values[mask] - expected) / expected))
    return {
        "n": n,
        "points_per_decade": points_per_decade,
        "max_relative_error": error,
        "solution": solution,
    }


def convergence_order(n, coarse=4096, fine=8192, r_window=(1e-2, 1e2)):
    coarse_error = solve_manufactured(n, coarse, r_window)["max_relative_error"]
    fine_error = solve_manufactured(n, fine, r_window)["max_relative_error"]
    ratio = coarse_error / fine_error
    return {
        "n": n,
        "errors": {str(coarse): coarse_error, str(fine): fine_error},
        "ratio": ratio,
        "order": math.log(ratio) / math.log(fine / coarse),
    }


def compare_closures(problem, r_window=(1e-2, 1e2), closures=("default", "dirichlet")):
    """Relative node-wise disagreement between two closure strategies."""
    first, second = (solve_bvp(problem, closure=name) for name in closures)
    mask = _window_mask(first, r_window)
    difference = np.abs(first.values[mask] - second.values[mask])
    scale = np.abs(first.values[mask])
    return {
        "closures": [first.closure, second.closure],
        "max_relative_difference": float(np.max(difference / scale)),
    }
