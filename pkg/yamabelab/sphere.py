"""
Exact moment calculus on the unit sphere S^(n-1) and harmonic decomposition
of homogeneous polynomials.
"""

import itertools
import json
import logging
import math
import string

from dataclasses import dataclass
from fractions import Fraction
from functools import cache, cached_property

import numpy as np
import sympy

from yamabelab.conf import get_lab_settings
from yamabelab.exceptions import ConsistencyError, UnsupportedDegreeError


logger = logging.getLogger("yamabelab.sphere")


@cache
def _moment(n, exponents):
    # ``exponents`` holds the non-zero entries sorted, so permutations of a
    # multi-index share one cache entry; zero entries each contribute Gamma(1/2)
    half = sympy.Rational(1, 2)
    numerator = sympy.Mul(*[sympy.gamma(a * half + half) for a in exponents])
    numerator *= sympy.sqrt(sympy.pi) ** (n - len(exponents))
    total = sum(exponents)
    ratio = (
        numerator
        * sympy.gamma(sympy.Rational(n, 2))
        / (sympy.gamma(sympy.Rational(total + n, 2)) * sympy.pi ** sympy.Rational(n, 2))
    )
    ratio = sympy.nsimplify(sympy.simplify(ratio))
    if not ratio.is_Rational:  # pragma: no cover
        raise ConsistencyError(f"Sphere moment {exponents} did not reduce to a rational")
    return Fraction(int(ratio.p), int(ratio.q))


def sphere_monomial_moment(n, alpha):
    """
    Normalised sphere average of theta^alpha, as an exact Fraction.

    Uses the Gamma-product rule
    int_S theta^alpha = 2 prod Gamma((a_i+1)/2) / Gamma((|a|+n)/2)
    divided by |S^(n-1)| = 2 pi^(n/2) / Gamma(n/2). Odd exponents give 0.

    >>> sphere_monomial_moment(10, (2, 2, 0, 0, 0, 0, 0, 0, 0, 0))
    Fraction(1, 120)
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) > n:
        raise ValueError(f"Multi-index {alpha} has more than n={n} entries")
    if any(a < 0 for a in alpha):
        raise ValueError(f"Negative exponent in {alpha}")
    if any(a % 2 for a in alpha):
        return Fraction(0)
    return _moment(n, tuple(sorted(a for a in alpha if a)))


def sphere_area(n, exact=False):
    area = 2 * sympy.pi ** sympy.Rational(n, 2) / sympy.gamma(sympy.Rational(n, 2))
    return area if exact else float(area)


def ladder_denominator(n, k):
    """2^k k! prod_{i<k} (n + 2i): Delta^k of a degree-2k block over this is its average."""
    return 2**k * math.factorial(k) * math.prod(n + 2 * i for i in range(k))


def _as_number(value):
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, (np.floating, np.integer)):
        return float(value)
    return value


class SphericalPolynomial:
    """
    A homogeneous polynomial of degree ``degree`` in n variables, read on the
    unit sphere. Coefficients live in a dict keyed by multi-index tuples and
    are Fractions (exact) or floats.
    """

    def __init__(self, n, degree, terms=None):
        self.n = int(n)
        self.degree = int(degree)
        self.terms = {}
        for alpha, coefficient in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or sum(alpha) != self.degree:
                raise ValueError(
                    f"Multi-index {alpha} does not have length {self.n} and order {self.degree}"
                )
            coefficient = _as_number(coefficient)
            if coefficient != 0:
                self.terms[alpha] = self.terms.get(alpha, 0) + coefficient
        self.terms = {alpha: c for alpha, c in self.terms.items() if c != 0}

    @classmethod
    def zero(cls, n, degree=0):
        return cls(n, degree)

    @classmethod
    def constant(cls, n, value):
        return cls(n, 0, {(0,) * n: value})

    @classmethod
    def monomial(cls, n, alpha, coefficient=1):
        alpha = tuple(alpha) + (0,) * (n - len(alpha))
        return cls(n, sum(alpha), {alpha: coefficient})

    @classmethod
    def coordinate(cls, n, i):
        alpha = [0] * n
        alpha[i] = 1
        return cls(n, 1, {tuple(alpha): 1})

    @classmethod
    def r_power(cls, n, degree):
        """|x|^degree for even degree, as a polynomial."""
        if degree % 2:
            raise ValueError("|x|^l is a polynomial only for even l")
        result = cls.constant(n, 1)
        for _ in range(degree // 2):
            result = result.times_r2()
        return result

    @classmethod
    def from_symmetric_tensor(cls, tensor, exact=False):
        tensor = np.asarray(tensor, dtype=float)
        degree = tensor.ndim
        n = tensor.shape[0] if degree else 1
        terms = {}
        for index in np.ndindex(*tensor.shape):
            value = tensor[index]
            if value == 0:
                continue
            alpha = [0] * n
            for i in index:
                alpha[i] += 1
            alpha = tuple(alpha)
            value = Fraction(float(value)) if exact else float(value)
            terms[alpha] = terms.get(alpha, 0) + value
        return cls(n, degree, terms)

    def __repr__(self):
        return f"<SphericalPolynomial n={self.n} degree={self.degree} terms={len(self.terms)}>"

    def __len__(self):
        return len(self.terms)

    def is_zero(self):
        return not self.terms

    @property
    def is_exact(self):
        return all(isinstance(c, (Fraction, int)) for c in self.terms.values())

    def copy(self):
        return SphericalPolynomial(self.n, self.degree, dict(self.terms))

    def _check_compatible(self, other):
        if self.n != other.n:
            raise ValueError(f"Polynomials in {self.n} and {other.n} variables")
        if self.degree != other.degree and not (self.is_zero() or other.is_zero()):
            raise ValueError(
                f"Cannot add homogeneous polynomials of degree {self.degree} and {other.degree}"
            )

    def __add__(self, other):
        if not isinstance(other, SphericalPolynomial):
            return NotImplemented
        self._check_compatible(other)
        degree = other.degree if self.is_zero() else self.degree
        terms = dict(self.terms)
        for alpha, coefficient in other.terms.items():
            terms[alpha] = terms.get(alpha, 0) + coefficient
        return SphericalPolynomial(self.n, degree, terms)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        if not isinstance(other, SphericalPolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SphericalPolynomial):
            if self.n != other.n:
                raise ValueError(f"Polynomials in {self.n} and {other.n} variables")
            terms = {}
            for alpha, a in self.terms.items():
                for beta, b in other.terms.items():
                    key = tuple(x + y for x, y in zip(alpha, beta, strict=True))
                    terms[key] = terms.get(key, 0) + a * b
            return SphericalPolynomial(self.n, self.degree + other.degree, terms)

        factor = _as_number(other)
        return SphericalPolynomial(
            self.n, self.degree, {alpha: c * factor for alpha, c in self.terms.items()}
        )

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SphericalPolynomial):
            return NotImplemented
        if self.n != other.n:
            return False
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        return self.degree == other.degree and self.terms == other.terms

    __hash__ = None

    def partial(self, i):
        terms = {}
        for alpha, coefficient in self.terms.items():
            if alpha[i]:
                beta = list(alpha)
                beta[i] -= 1
                terms[tuple(beta)] = coefficient * alpha[i]
        return SphericalPolynomial(self.n, max(self.degree - 1, 0), terms)

    def laplacian(self):
        result = SphericalPolynomial(self.n, max(self.degree - 2, 0))
        for alpha, coefficient in self.terms.items():
            for i, a in enumerate(alpha):
                if a >= 2:
                    beta = list(alpha)
                    beta[i] -= 2
                    beta = tuple(beta)
                    result.terms[beta] = result.terms.get(beta, 0) + coefficient * a * (a - 1)
        result.terms = {alpha: c for alpha, c in result.terms.items() if c != 0}
        return result

    def laplacian_power(self, k):
        result = self
        for _ in range(k):
            result = result.laplacian()
        return result

    def times_r2(self):
        terms = {}
        for alpha, coefficient in self.terms.items():
            for i in range(self.n):
                beta = list(alpha)
                beta[i] += 2
                beta = tuple(beta)
                terms[beta] = terms.get(beta, 0) + coefficient
        return SphericalPolynomial(self.n, self.degree + 2, terms)

    def mean(self):
        """Average over S^(n-1); exact when every coefficient is rational."""
        exact = self.is_exact
        total = Fraction(0) if exact else 0.0
        for alpha, coefficient in self.terms.items():
            moment = sphere_monomial_moment(self.n, alpha)
            total += coefficient * (moment if exact else float(moment))
        return total

    def inner(self, other):
        """Sphere average of the product, the L2 pairing used for orthogonality."""
        return (self * other).mean()

    def max_abs_coefficient(self):
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    def to_float(self):
        return SphericalPolynomial(
            self.n, self.degree, {alpha: float(c) for alpha, c in self.terms.items()}
        )

    @cached_property
    def _arrays(self):
        exponents = np.array(list(self.terms), dtype=int).reshape(-1, self.n)
        coefficients = np.array([float(c) for c in self.terms.values()], dtype=float)
        return exponents, coefficients

    def evaluate(self, points):
        """Evaluate at an array of points with shape (..., n)."""
        points = np.asarray(points, dtype=float)
        exponents, coefficients = self._arrays
        if not len(coefficients):
            result = np.zeros(points.shape[:-1])
        else:
            powers = np.prod(points[..., None, :] ** exponents, axis=-1)
            result = powers @ coefficients
        return float(result) if np.ndim(result) == 0 else result

    @cached_property
    def _partials(self):
        return [self.partial(i) for i in range(self.n)]

    def gradient(self, points):
        points = np.asarray(points, dtype=float)
        return np.stack([p.evaluate(points) for p in self._partials], axis=-1)

    def hessian(self, points):
        points = np.asarray(points, dtype=float)
        rows = [
            np.stack([p._partials[j].evaluate(points) for j in range(self.n)], axis=-1)
            for p in self._partials
        ]
        return np.stack(rows, axis=-2)

    def to_symmetric_tensor(self):
        tensor = np.zeros((self.n,) * self.degree)
        for alpha, coefficient in self.terms.items():
            indices = [i for i, a in enumerate(alpha) for _ in range(a)]
            permutations = set(itertools.permutations(indices))
            value = float(coefficient) / len(permutations)
            for index in permutations:
                tensor[index] = value
        return tensor

    def to_json(self):
        terms = []
        for alpha in sorted(self.terms):
            coefficient = self.terms[alpha]
            if isinstance(coefficient, (Fraction, int)):
                coefficient = Fraction(coefficient)
                terms.append(
                    {
                        "alpha": list(alpha),
                        "num": coefficient.numerator,
                        "den": coefficient.denominator,
                    }
                )
            else:
                terms.append({"alpha": list(alpha), "value": float(coefficient)})
        return {"n": self.n, "degree": self.degree, "terms": terms}

    @classmethod
    def from_json(cls, data):
        if isinstance(data, str):
            data = json.loads(data)
        terms = {}
        for term in data["terms"]:
            if "value" in term:
                coefficient = float(term["value"])
            else:
                coefficient = Fraction(int(term["num"]), int(term["den"]))
            terms[tuple(term["alpha"])] = coefficient
        return cls(data["n"], data["degree"], terms)


def _double_factorials(size):
    # (k-1)!! for even k, 0 for odd k: the numerators of the monomial moments
    table = np.zeros(size + 1)
    table[0] = 1.0
    for k in range(2, size + 1, 2):
        table[k] = table[k - 2] * (k - 1)
    return table


def product_mean(p, q, chunk_size=4_000_000):
    """
    Float sphere average of p * q without expanding the product.

    avg theta^gamma = prod_i (gamma_i - 1)!! / (n (n+2) ... (n + |gamma| - 2))
    for even gamma, so the pairwise exponent sums are looked up in one table
    and contracted against both coefficient vectors.
    """
    if p.n != q.n:
        raise ValueError(f"Polynomials in {p.n} and {q.n} variables")
    if p.is_zero() or q.is_zero() or (p.degree + q.degree) % 2:
        return 0.0
    n = p.n
    exponents_p, coefficients_p = p._arrays
    exponents_q, coefficients_q = q._arrays
    total_degree = p.degree + q.degree
    table = _double_factorials(total_degree)

    rows = max(1, chunk_size // max(len(coefficients_q) * n, 1))
    total = 0.0
    for start in range(0, len(coefficients_p), rows):
        gamma = exponents_p[start : start + rows, None, :] + exponents_q[None, :, :]
        moments = np.prod(table[gamma], axis=-1)
        total += float(coefficients_p[start : start + rows] @ moments @ coefficients_q)
    return total / math.prod(n + 2 * i for i in range(total_degree // 2))


def random_polynomial(n, degree, rng, exact=True, low=-5, high=5):
    """Random homogeneous polynomial over every monomial of the given degree."""
    terms = {}
    for combination in itertools.combinations_with_replacement(range(n), degree):
        alpha = [0] * n
        for i in combination:
            alpha[i] += 1
        value = int(rng.integers(low, high + 1)) if exact else float(rng.normal())
        terms[tuple(alpha)] = Fraction(value) if exact else value
    return SphericalPolynomial(n, degree, terms)


def laplacian_power_at_origin(polynomial, k):
    """Delta^k of a degree-2k block: a constant (returned as its coefficient)."""
    if polynomial.degree != 2 * k:
        raise ValueError(f"Expected a degree-{2 * k} block, got degree {polynomial.degree}")
    result = polynomial.laplacian_power(k)
    return result.terms.get((0,) * polynomial.n, 0)


def _block_from(source, degree):
    if isinstance(source, SphericalPolynomial):
        return source
    return source.scalar_block(degree)


def _relative_gap(a, b):
    scale = max(abs(float(a)), abs(float(b)), 1.0)
    return abs(float(a) - float(b)) / scale


def ladder_paths(block, k):
    """
    (moment path, ladder path, relative gap) for the sphere average of a
    degree-2k block.
    """
    by_moments = block.mean()
    by_ladder = laplacian_power_at_origin(block, k) / ladder_denominator(block.n, k)
    return by_moments, by_ladder, _relative_gap(by_moments, by_ladder)


def taylor_block_average(n, k, source, tolerance=None):
    """
    Sphere average R-bar^(2k) of a degree-2k Taylor block, computed by the
    exact moment contraction and by the ladder formula
    Delta^k R(0) / (2^k k! prod_{i<k}(n+2i)). ``source`` is the block itself or
    a jet exposing ``scalar_block``.
    """
    if tolerance is None:
        tolerance = get_lab_settings()["CONSISTENCY_TOLERANCE"]
    block = _block_from(source, 2 * k)
    if block.n != n:
        raise ValueError(f"Block lives in {block.n} variables, expected {n}")
    if block.is_zero():
        return Fraction(0) if block.is_exact else 0.0

    by_moments, by_ladder, gap = ladder_paths(block, k)
    if gap > tolerance:
        raise ConsistencyError(
            f"Moment path {float(by_moments)!r} and ladder path {float(by_ladder)!r}"
            f" disagree for k={k}",
            lhs=by_moments,
            rhs=by_ladder,
        )
    return by_moments


def odd_moment_constant(n, k):
    """
    C(n,k) / |S^(n-1)| = (2k+1)! / ((2k+n) 2^k k! prod_{i<k}(n+2i)), exact.

    Multiply by ``sphere_area(n)`` for the value itself.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    return Fraction(math.factorial(2 * k + 1), (2 * k + n) * ladder_denominator(n, k))


def verify_odd_moment(block, k, tolerance=None):
    """
    Check (2k+1)! int_S block(theta) theta_j = C(n,k) d_j Delta^k R(0) for every
    direction j, both sides in units of |S^(n-1)|.
    """
    if tolerance is None:
        tolerance = get_lab_settings()["CONSISTENCY_TOLERANCE"]
    n = block.n
    if block.degree != 2 * k + 1:
        raise ValueError(f"Expected a degree-{2 * k + 1} block, got {block.degree}")

    constant = odd_moment_constant(n, k)
    reduced = block.laplacian_power(k)
    entries = []
    for j in range(n):
        lhs = math.factorial(2 * k + 1) * (block * SphericalPolynomial.coordinate(n, j)).mean()
        rhs = constant * reduced.partial(j).terms.get((0,) * n, 0)
        entries.append(
            {"j": j, "lhs": lhs, "rhs": rhs, "ok": _relative_gap(lhs, rhs) <= tolerance}
        )
    return {
        "k": k,
        "n": n,
        "constant": constant,
        "entries": entries,
        "ok": all(entry["ok"] for entry in entries),
    }


@dataclass(frozen=True)
class HarmonicComponent:
    degree: int
    polynomial: SphericalPolynomial
    eigenvalue: int

    def __post_init__(self):
        n = self.polynomial.n
        if self.eigenvalue != self.degree * (self.degree + n - 2):
            raise ConsistencyError(
                f"Eigenvalue {self.eigenvalue} does not match degree {self.degree}"
            )
        residual = self.polynomial.laplacian()
        if self.polynomial.is_exact:
            harmonic = residual.is_zero()
        else:
            scale = max(self.polynomial.max_abs_coefficient(), 1.0)
            harmonic = residual.max_abs_coefficient() <= 1e-9 * scale
        if not harmonic:
            raise ConsistencyError(f"Degree-{self.degree} component is not harmonic")


def harmonic_projection(polynomial):
    """
    Harmonic part of a homogeneous polynomial p of degree m:
    sum_j (-1)^j |x|^(2j) Delta^j p / (2^j j! prod_{i<j}(2m+n-4-2i)).
    """
    n, m = polynomial.n, polynomial.degree
    result = polynomial.copy()
    term = polynomial
    for j in range(1, m // 2 + 1):
        term = term.laplacian()
        if term.is_zero():
            break
        denominator = 2**j * math.factorial(j) * math.prod(
            2 * m + n - 4 - 2 * i for i in range(j)
        )
        scaled = term
        for _ in range(j):
            scaled = scaled.times_r2()
        factor = Fraction((-1) ** j, denominator)
        result = result + scaled * (factor if polynomial.is_exact else float(factor))
    return result


def decompose_harmonic(polynomial, max_degree=None):
    """
    Split P into harmonic pieces h_m, h_(m-2), ... with P = sum_k |x|^(2k) h_(m-2k).

    Components are recovered one at a time as
    h_(m-2k) = H[Delta^k P] / prod_{s=1..k} 2s(2s + 2(m-2k) + n - 2),
    with H the harmonic projection, and the reconstruction is checked exactly
    (or to rounding for float coefficients).
    """
    if max_degree is None:
        max_degree = get_lab_settings()["MAX_HARMONIC_DEGREE"]
    n, m = polynomial.n, polynomial.degree
    if m > max_degree:
        raise UnsupportedDegreeError(
            f"Harmonic decomposition is limited to degree {max_degree}, got {m}",
            degree=m,
        )

    exact = polynomial.is_exact
    components = []
    reduced = polynomial
    for k in range(m // 2 + 1):
        d = m - 2 * k
        if k:
            reduced = reduced.laplacian()
        if reduced.is_zero():
            break
        denominator = math.prod(2 * s * (2 * s + 2 * d + n - 2) for s in range(1, k + 1))
        factor = Fraction(1, denominator)
        harmonic = harmonic_projection(reduced) * (factor if exact else float(factor))
        if not harmonic.is_zero():
            components.append(
                HarmonicComponent(
                    degree=d, polynomial=harmonic, eigenvalue=d * (d + n - 2)
                )
            )

    rebuilt = reconstruct(components, n, m)
    difference = rebuilt - polynomial
    if exact and not difference.is_zero():
        raise ConsistencyError("Harmonic reconstruction is not exact")
    if not exact and difference.max_abs_coefficient() > 1e-9 * max(
        polynomial.max_abs_coefficient(), 1.0
    ):
        raise ConsistencyError("Harmonic reconstruction drifted beyond rounding")
    return components


def reconstruct(components, n, degree):
    """Re-sum |x|^(degree-d) h_d over the components."""
    result = SphericalPolynomial.zero(n, degree)
    for component in components:
        term = component.polynomial
        for _ in range((degree - component.degree) // 2):
            term = term.times_r2()
        result = result + term
    return result


def build_R_bar_tilde(jet, l):
    """
    Split the degree-l Taylor block of the scalar curvature into its sphere
    average R-bar^(l) and the mean-zero oscillation R-tilde^(l) = block - R-bar |x|^l.
    """
    block = jet.scalar_block(l)
    if l % 2:
        return (Fraction(0) if block.is_exact else 0.0), block

    average = block.mean()
    tilde = block - SphericalPolynomial.r_power(block.n, l) * average
    remainder = tilde.mean()
    if remainder != 0 and abs(float(remainder)) > 1e-12 * max(abs(float(average)), 1.0):
        raise ConsistencyError(f"R-tilde^({l}) has non-zero mean {float(remainder)!r}")
    return average, tilde


def hessian_block(hessian):
    """The degree-2 Taylor block sum_{i<j} H_ij x_i x_j + 1/2 sum_i H_ii x_i^2."""
    hessian = np.asarray(hessian, dtype=float)
    n = hessian.shape[0]
    terms = {}
    for i in range(n):
        for j in range(i, n):
            alpha = [0] * n
            alpha[i] += 1
            alpha[j] += 1
            value = hessian[i, j] if i != j else 0.5 * hessian[i, i]
            terms[tuple(alpha)] = float(value)
    return SphericalPolynomial(n, 2, terms)


def expand_square_R2(source, tolerance=1e-12):
    """
    Sphere average of the squared degree-2 block, by direct moment contraction
    and by the grouped closed form

        1/(2n(n+2)) [sum_{i<j} 2 H_ij^2 + sum_i H_ii^2] + (tr H)^2 / (4n(n+2)).

    The trace part vanishes to leading order in conformal normal coordinates.
    ``source`` is a jet (anything with ``scalar_hessian()``) or the Hessian.
    """
    hessian = source.scalar_hessian() if hasattr(source, "scalar_hessian") else source
    hessian = np.asarray(hessian, dtype=float)
    n = hessian.shape[0]
    block = hessian_block(hessian)
    direct = float((block * block).mean())

    diagonal = np.diag(hessian)
    off_diagonal = float(np.sum(np.triu(hessian, 1) ** 2))
    traceless = (2 * off_diagonal + float(np.sum(diagonal**2))) / (2 * n * (n + 2))
    trace = float(np.sum(diagonal)) ** 2 / (4 * n * (n + 2))
    grouped = (
        off_diagonal / (n * (n + 2))
        + 3 * float(np.sum(diagonal**2)) / (4 * n * (n + 2))
        + (float(np.sum(diagonal)) ** 2 - float(np.sum(diagonal**2))) / (4 * n * (n + 2))
    )

    closed_form = traceless + trace
    scale = max(abs(direct), abs(closed_form), np.finfo(float).tiny)
    for label, value in (("closed form", closed_form), ("grouped form", grouped)):
        if abs(direct - value) > tolerance * scale and abs(direct - value) > 1e-300:
            raise ConsistencyError(
                f"Squared R^(2) average: moment contraction {direct!r} vs {label} {value!r}",
                lhs=direct,
                rhs=value,
            )
    return {
        "average": direct,
        "traceless_part": traceless,
        "trace_part": trace,
        "grouped": grouped,
    }


def _pairings(slots):
    if not slots:
        yield []
        return
    first, rest = slots[0], slots[1:]
    for i, partner in enumerate(rest):
        for tail in _pairings(rest[:i] + rest[i + 1 :]):
            yield [(first, partner), *tail]


def sphere_average_contraction(operands, subscripts):
    """
    Exact sphere average of a fully contracted tensor network in which every
    ``*`` in ``subscripts`` stands for a factor of theta.

    avg theta_i1 ... theta_i2m is the sum over pairings of products of
    Kronecker deltas divided by n(n+2)...(n+2m-2), so each pairing becomes one
    einsum with the paired slots sharing an index:

    >>> W = np.random.default_rng(0).normal(size=(10, 10))
    >>> sphere_average_contraction([W], ["**"])  # == trace(W) / 10
    """
    operands = [np.asarray(operand, dtype=float) for operand in operands]
    subscripts = list(subscripts)
    if len(operands) != len(subscripts):
        raise ValueError("Each operand needs a subscript string")

    slots = [
        (position, index)
        for position, subscript in enumerate(subscripts)
        for index, character in enumerate(subscript)
        if character == "*"
    ]
    if len(slots) % 2:
        return 0.0
    if slots:
        position, index = slots[0]
        n = operands[position].shape[index]

    used = set("".join(subscripts)) - {"*"}
    pool = [c for c in string.ascii_letters if c not in used]
    m = len(slots) // 2
    if m > len(pool):
        raise ValueError("Too many theta slots for einsum labels")

    total = 0.0
    for pairing in _pairings(slots):
        labelled = [list(subscript) for subscript in subscripts]
        for letter, (a, b) in zip(pool, pairing, strict=False):
            labelled[a[0]][a[1]] = letter
            labelled[b[0]][b[1]] = letter
        expression = ",".join("".join(s) for s in labelled) + "->"
        total += float(np.einsum(expression, *operands, optimize="greedy"))

    if m == 0:
        return total
    return total / math.prod(n + 2 * i for i in range(m))
