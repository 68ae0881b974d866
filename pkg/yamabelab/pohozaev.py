"""
The Pohozaev-type balance I1 + I2 + I3 + I4 = I5 on the ball |y| <= R' for a
separable field v, and the Weyl vanishing-rate combinations.

Angular integrals are exact sphere moments of the polynomial factors; radial
integrals use Simpson's rule in s = log r with a built-in refinement check.
"""

import logging
import math

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from scipy.integrate import simpson

from yamabelab.bubble import conformal_constant, eval_bubble
from yamabelab.conf import get_lab_settings
from yamabelab.curvature import weyl_norms
from yamabelab.exceptions import (
    DependencyError,
    OutOfDomainError,
    PreconditionError,
    RefinementError,
)
from yamabelab.profile import SampledSolution, SeparableField
from yamabelab.sphere import product_mean, sphere_area, sphere_average_contraction
from yamabelab.sturm_liouville import BvpSolution


logger = logging.getLogger("yamabelab.pohozaev")

TAG = "pohozaev"

# Degrees of the scalar-curvature Taylor blocks entering I2 and I3
BLOCK_DEGREES = range(2, 7)

# Entries whose combination exceeds the median by this factor are flagged
RATE_FLAG_MARGIN = 2.0


def _node_count(nodes):
    # Simpson on the full, half and quarter grids needs 4k + 1 nodes
    return 4 * max(math.ceil((nodes - 1) / 4), 2) + 1


def radial_nodes(r_lo, r_hi, nodes=None):
    if nodes is None:
        nodes = get_lab_settings()["POHOZAEV"]["RADIAL_NODES"]
    s = np.linspace(math.log(r_lo), math.log(r_hi), _node_count(nodes))
    r = np.exp(s)
    r[0], r[-1] = r_lo, r_hi
    return s, r


def radial_quadrature(values, r, s, stride=1):
    """Simpson's rule for the integral of ``values`` dr, taken in s = log r."""
    return float(simpson(values[::stride] * r[::stride], x=s[::stride]))


def _refined(values, r, s):
    full = radial_quadrature(values, r, s)
    half = radial_quadrature(values, r, s, stride=2)
    quarter = radial_quadrature(values, r, s, stride=4)
    return full, half, quarter


def _observed_order(full, half, quarter):
    coarse, fine = abs(quarter - half), abs(half - full)
    if coarse == 0 or fine == 0:
        return None
    return math.log2(coarse / fine)


@dataclass(frozen=True, eq=False)
class PohozaevInput:
    v: object
    jet: object
    M: float
    R_prime: float
    n: int

    def __post_init__(self):
        if not self.M >= 1:
            raise PreconditionError(f"Blow-up height M={self.M!r} is below 1", inequality="M >= 1")
        if self.jet.n != self.n:
            raise PreconditionError(
                f"Jet has n={self.jet.n}, input declares n={self.n}", inequality="jet.n == n"
            )
        if self.field.n != self.n:
            raise PreconditionError(
                f"Field has n={self.field.n}, input declares n={self.n}", inequality="v.n == n"
            )
        r_lo, r_hi = self.field.domain
        if not r_lo < self.R_prime <= r_hi:
            raise PreconditionError(
                f"R'={self.R_prime!r} is outside the grid of v [{r_lo!r}, {r_hi!r}]",
                inequality="R_prime within v's grid",
            )

    @cached_property
    def field(self):
        if isinstance(self.v, SeparableField):
            return self.v
        if isinstance(self.v, SampledSolution) and self.v.source_field is not None:
            return self.v.source_field
        raise DependencyError(
            "Pohozaev integrals need the separable description of v", missing=["v.source_field"]
        )

    @property
    def r_lo(self):
        return max(self.field.domain[0], get_lab_settings()["GRID"]["R_MIN"])

    @property
    def scale(self):
        """M^(-2/(n-2)), the coordinate factor between y and x."""
        return self.M ** (-2 / (self.n - 2))


class AngularMoments:
    """Sphere averages of products of the angular factors of a separable field."""

    def __init__(self, field, jet):
        self.field = field
        self.jet = jet
        self.polynomials = [term.angular for term in field.terms]
        self._blocks = {}
        self._triples = {}

    def __len__(self):
        return len(self.polynomials)

    @cached_property
    def pair(self):
        """avg P_k P_l."""
        count = len(self)
        table = np.zeros((count, count))
        for k in range(count):
            for l in range(k, count):
                table[k, l] = table[l, k] = product_mean(self.polynomials[k], self.polynomials[l])
        return table

    @cached_property
    def tangential(self):
        """avg grad_S P_k . grad_S P_l = avg grad P_k . grad P_l - d_k d_l avg P_k P_l."""
        count = len(self)
        n = self.field.n
        table = np.zeros((count, count))
        for k in range(count):
            for l in range(k, count):
                p, q = self.polynomials[k], self.polynomials[l]
                if p.degree == 0 or q.degree == 0:
                    continue
                gradients = sum(product_mean(p.partial(i), q.partial(i)) for i in range(n))
                value = gradients - p.degree * q.degree * self.pair[k, l]
                table[k, l] = table[l, k] = value
        return table

    def block(self, degree, k, l):
        """avg block_degree P_k P_l."""
        key = (degree, min(k, l), max(k, l))
        if key not in self._blocks:
            block = self.jet.scalar_block(degree)
            p, q = self.polynomials[k], self.polynomials[l]
            if block.is_zero() or p.is_zero() or q.is_zero() or (degree + p.degree + q.degree) % 2:
                self._blocks[key] = 0.0
            else:
                self._blocks[key] = product_mean(block, p * q)
        return self._blocks[key]

    def triple(self, k, l, m):
        key = tuple(sorted((k, l, m)))
        if key not in self._triples:
            a, b, c = (self.polynomials[i] for i in key)
            self._triples[key] = product_mean(a * b, c)
        return self._triples[key]

    @cached_property
    def operator(self):
        """
        avg grad P_k(theta) . d_m(theta) grad P_l(theta) for every pair of
        non-radial terms and each degree m of d.
        """
        _, d_tensors = self.jet._operator_tensors
        tensors = [
            p.to_symmetric_tensor() if p.degree > 0 and not p.is_zero() else None
            for p in self.polynomials
        ]
        table = {}
        for k, tensor_k in enumerate(tensors):
            for l in range(k, len(tensors)):
                tensor_l = tensors[l]
                if tensor_k is None or tensor_l is None:
                    continue
                d_k, d_l = self.polynomials[k].degree, self.polynomials[l].degree
                for m, d_tensor in d_tensors.items():
                    if not np.any(d_tensor):
                        continue
                    value = d_k * d_l * sphere_average_contraction(
                        [tensor_k, d_tensor, tensor_l],
                        ["i" + "*" * (d_k - 1), "ij" + "*" * m, "j" + "*" * (d_l - 1)],
                    )
                    table[k, l, m] = table[l, k, m] = value
        return table


def _profiles(field, r):
    values, slopes = [], []
    for term in field.terms:
        f, f1, _ = term.radial_jet(r)
        values.append(np.asarray(f, dtype=float) * np.ones_like(r))
        slopes.append(np.asarray(f1, dtype=float) * np.ones_like(r))
    return np.array(values), np.array(slopes)


def _base_coefficient(field):
    base = field.terms[0].angular
    return float(base.terms.get((0,) * field.n, 0.0))


class PohozaevEvaluation:
    """The five integrals of one PohozaevInput, sharing radial nodes and moments."""

    def __init__(self, data, nodes=None):
        self.data = data
        self.n = data.n
        self.field = data.field
        self.moments = AngularMoments(self.field, data.jet)
        self.area = sphere_area(self.n)
        self.c = conformal_constant(self.n)
        self.s, self.r = radial_nodes(data.r_lo, data.R_prime, nodes)
        self.F, self.dF = _profiles(self.field, self.r)
        boundary = np.array([data.R_prime])
        F_b, dF_b = _profiles(self.field, boundary)
        self.F_boundary, self.dF_boundary = F_b[:, 0], dF_b[:, 0]

    def block_weight(self, degree):
        return self.data.M ** (-(4 + 2 * degree) / (self.n - 2))

    def i1_integrand(self):
        """|S| r^(n-1) avg d-bar_ij d_j v d_i w with w = y . grad v + (n-2)/2 v."""
        n, r = self.n, self.r
        w = r * self.dF + (n - 2) / 2 * self.F
        total = np.zeros_like(r)
        for (k, l, m), value in self.moments.operator.items():
            total += self.F[k] * w[l] / r**2 * (self.data.scale * r) ** m * value
        return self.area * r ** (n - 1) * total

    def i2_pair_integrand(self, degree, k, l):
        """Contribution of block ``degree`` and the ordered pair (k, l) to I2."""
        average = self.moments.block(degree, k, l)
        if average == 0:
            return np.zeros_like(self.r)
        prefactor = -(self.c / 2) * (degree + 2) * self.block_weight(degree)
        return prefactor * average * self.area * self.r ** (self.n - 1 + degree) * self.F[k] * self.F[l]

    def i2_integrand(self):
        count = len(self.moments)
        total = np.zeros_like(self.r)
        for degree in BLOCK_DEGREES:
            for k in range(count):
                for l in range(count):
                    total += self.i2_pair_integrand(degree, k, l)
        return total

    def energy_integrand(self):
        base = self.F[0] * _base_coefficient(self.field)
        q = 2 * self.n / (self.n - 2)
        return self.area * self.r ** (self.n - 1) * np.abs(base) ** q

    def i3(self):
        n, R = self.n, self.data.R_prime
        count = len(self.moments)
        total = 0.0
        for degree in BLOCK_DEGREES:
            weight = self.block_weight(degree) * R**degree
            for k in range(count):
                for l in range(count):
                    average = self.moments.block(degree, k, l)
                    total += weight * average * self.F_boundary[k] * self.F_boundary[l]
        return (self.c / 2) * self.area * R**n * total

    def i4(self):
        """
        -((n-2)^2/2) R' |S| R'^(n-1) avg v^(2n/(n-2)), expanding v = U (1 + eps)
        to third order in eps; returns (I4, truncation bound).
        """
        n, R = self.n, self.data.R_prime
        q = 2 * n / (n - 2)
        base = self.F_boundary[0] * _base_coefficient(self.field)
        if base <= 0:
            raise PreconditionError(
                f"The base profile is not positive at R'={R!r}", inequality="U(R') > 0"
            )
        count = len(self.moments)
        a = np.zeros(count)
        a[1:] = self.F_boundary[1:] / base
        corrections = range(1, count)

        first = sum(a[k] * self.moments.pair[0, k] for k in corrections) / _base_coefficient(self.field)
        second = sum(a[k] * a[l] * self.moments.pair[k, l] for k in corrections for l in corrections)
        third = sum(
            a[k] * a[l] * a[m] * self.moments.triple(k, l, m)
            for k in corrections
            for l in corrections
            for m in corrections
        )
        average = base**q * (
            1 + q * first + q * (q - 1) / 2 * second + q * (q - 1) * (q - 2) / 6 * third
        )

        size = sum(
            abs(a[k]) * sum(abs(float(c)) for c in self.moments.polynomials[k].terms.values())
            for k in corrections
        )
        if size < 1:
            fourth = abs(q * (q - 1) * (q - 2) * (q - 3) / 24)
            truncation = fourth * size**4 / (1 - size) * base**q
        else:
            truncation = math.inf
            logger.warning(
                "Angular corrections are not small against U at R'=%g; the I4 expansion is unreliable",
                R,
            )
        factor = -((n - 2) ** 2 / 2) * self.area * R**n
        return factor * average, abs(factor) * truncation

    def i5(self):
        n, R = self.n, self.data.R_prime
        F, dF = self.F_boundary, self.dF_boundary
        pair, tangential = self.moments.pair, self.moments.tangential
        normal_sq = float(dF @ pair @ dF)
        tangential_sq = float(F @ tangential @ F) / R**2
        mixed = float(F @ pair @ dF)
        return self.area * R ** (n - 1) * (
            R * (0.5 * normal_sq - 0.5 * tangential_sq) + (n - 2) / 2 * mixed
        )


def _refinement_check(label_values, scale):
    tolerance = get_lab_settings()["POHOZAEV"]["REFINEMENT_TOLERANCE"]
    report = {}
    for label, (full, half, quarter) in label_values.items():
        error = abs(full - half) / 15
        order = _observed_order(full, half, quarter)
        report[label] = {"error_estimate": error, "order": order}
        if error > tolerance * scale:
            raise RefinementError(
                f"Radial quadrature of {label} did not converge: estimated error {error:.3e}"
                f" against {tolerance:.1e} x {scale:.3e}",
                order=order,
                label=label,
            )
    return report


def eval_pohozaev(data, nodes=None):
    """
    (I1, I2, I3, I4, I5) and defect = I1 + I2 + I3 + I4 - I5, with I1 in
    divergence form (d-bar . y = 0 and b-bar = div d-bar remove its boundary
    term), the defect also normalised by the U-energy of the ball.
    """
    evaluation = PohozaevEvaluation(data, nodes)
    r, s = evaluation.r, evaluation.s

    volume = {
        "I1": _refined(evaluation.i1_integrand(), r, s),
        "I2": _refined(evaluation.i2_integrand(), r, s),
        "energy": _refined(evaluation.energy_integrand(), r, s),
    }
    energy = volume["energy"][0]
    quadrature = _refinement_check(volume, max(energy, abs(volume["I1"][0]), abs(volume["I2"][0])))

    I1, I2 = volume["I1"][0], volume["I2"][0]
    I3 = evaluation.i3()
    I4, truncation = evaluation.i4()
    I5 = evaluation.i5()
    defect = I1 + I2 + I3 + I4 - I5
    logger.debug("Pohozaev balance at R'=%g: defect %.3e, energy %.3e", data.R_prime, defect, energy)
    return {
        "tag": TAG,
        "n": data.n,
        "M": data.M,
        "R_prime": data.R_prime,
        "I1": I1,
        "I2": I2,
        "I3": I3,
        "I4": I4,
        "I5": I5,
        "defect": defect,
        "energy": energy,
        "defect_normalized": abs(defect) / energy if energy > 0 else None,
        "i4_truncation": truncation,
        "quadrature": {"nodes": len(r), **quadrature},
    }


def _pair_tag(field, degree, k, l):
    labels = {field.terms[k].label, field.terms[l].label}
    if k == 0 and l == 0:
        return "dec17e2"
    if degree == 2 and labels == {field.terms[0].label, "v2"}:
        return "dec17e3"
    return "i2"


def i2_breakdown(data, nodes=None):
    """
    I2 split per Taylor block and pair of terms, plus the U-weighted radial
    moments and, when v carries a v2 term, the key integral of r^2 U f2.
    """
    evaluation = PohozaevEvaluation(data, nodes)
    field = data.field
    r, s = evaluation.r, evaluation.s
    count = len(evaluation.moments)

    terms = []
    for degree in BLOCK_DEGREES:
        for k in range(count):
            for l in range(k, count):
                integrand = evaluation.i2_pair_integrand(degree, k, l)
                if k != l:
                    integrand = integrand + evaluation.i2_pair_integrand(degree, l, k)
                terms.append(
                    {
                        "label": f"l={degree}:{field.terms[k].label}*{field.terms[l].label}",
                        "block": degree,
                        "tag": _pair_tag(field, degree, k, l),
                        "value": radial_quadrature(integrand, r, s),
                    }
                )

    n = data.n
    base = evaluation.F[0] * _base_coefficient(field)
    moments = []
    for degree in (2, 4, 6):
        integral = radial_quadrature(
            evaluation.area * r ** (n - 1 + degree) * base**2, r, s
        )
        average = float(data.jet.scalar_block(degree).mean())
        prefactor = -(evaluation.c / 2) * (degree + 2) * evaluation.block_weight(degree) * average
        moments.append(
            {
                "label": f"r^{degree} U^2",
                "s": (degree - 2) // 2,
                "integral": integral,
                "prefactor": prefactor,
                "value": prefactor * integral,
            }
        )

    report = {
        "tag": "dec17e2",
        "terms": terms,
        "total": sum(term["value"] for term in terms),
        "moments": moments,
    }

    labels = [term.label for term in field.terms]
    if "v2" in labels:
        term = field.terms[labels.index("v2")]
        f2 = evaluation.F[labels.index("v2")] / term.weight
        key = radial_quadrature(evaluation.area * r ** (n + 1) * base * f2, r, s)
        report["key_integral"] = {"tag": "dec17e3", "value": key}
        if n == 10 and data.M > 1:
            report["key_integral"]["per_log_M"] = key / ((2 / (n - 2)) * math.log(data.M))
    return report


def _radial_profile(f2):
    return f2.profile if isinstance(f2, BvpSolution) else f2


def key_integral(n, R, f2, nodes=None):
    """|S| int_0^R r^2 U f2 r^(n-1) dr, the integral behind the log M factor for n = 10."""
    profile = _radial_profile(f2)
    if R > profile.r_max * (1 + 1e-12):
        raise OutOfDomainError(
            f"R={R!r} is beyond the grid of {profile.name or 'f2'} ({profile.r_max!r})", radius=R
        )
    s, r = radial_nodes(profile.r_min, R, nodes)
    integrand = sphere_area(n) * r ** (n + 1) * eval_bubble(n, r) * profile(r)
    return radial_quadrature(integrand, r, s)


def log_growth(n, f2, radii=(1e2, 1e3, 1e4), nodes=None):
    """
    Key integral I at three radii R1 < R2 < R3 a decade apart.

    ``increment_ratio`` is (I(R3) - I(R1)) / (I(R2) - I(R1)), the growth over two
    decades against the growth over the first one. The bare ratio I(R3) / I(R1)
    depends on the bounded part of I, so it is not reported. A log-divergent
    integral gains the same amount per decade and gives 2; a convergent one
    gives a ratio near 1 and a small ``drift``.
    """
    values = [key_integral(n, R, f2, nodes) for R in radii]
    increments = [b - a for a, b in zip(values, values[1:], strict=False)]
    first = values[1] - values[0]
    return {
        "tag": "dec17e3",
        "n": n,
        "radii": list(radii),
        "values": values,
        "increments": increments,
        "increment_ratio": (values[2] - values[0]) / first if first else None,
        "drift": abs(values[2] - values[1]) / abs(values[2]) if values[2] else 0.0,
    }


@dataclass(frozen=True, eq=False)
class RateSequence:
    """Entries (M_k, |W|^2, |grad Rm|^2, |grad^2 Rm|^2) ordered by M_k."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(tuple(float(x) for x in entry) for entry in self.entries)
        for entry in entries:
            if len(entry) != 4:
                raise PreconditionError(
                    "Rate entries are (M, |W|^2, |grad Rm|^2, |grad^2 Rm|^2)",
                    inequality="len(entry) == 4",
                )
            if min(entry[1:]) < 0:
                raise PreconditionError(
                    f"Negative squared norm in entry {entry}", inequality="norms >= 0"
                )
        Ms = [entry[0] for entry in entries]
        if any(b <= a for a, b in zip(Ms, Ms[1:], strict=False)):
            raise PreconditionError("M_k must be strictly increasing", inequality="M_k increasing")
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_jets(cls, heights, jets):
        return cls(tuple((M, *weyl_norms(jet)) for M, jet in zip(heights, jets, strict=True)))


def rate_combination(n, M, weyl_sq, gradient_sq, hessian_sq):
    """M^2 (|W|^2 M^(-8/(n-2)) + |grad Rm|^2 M^(-12/(n-2)) + |grad^2 Rm|^2 M^(-16/(n-2)) [log M])."""
    last = hessian_sq * M ** (-16 / (n - 2))
    if n == 10:
        last *= math.log(M)
    return M**2 * (weyl_sq * M ** (-8 / (n - 2)) + gradient_sq * M ** (-12 / (n - 2)) + last)


def weyl_rate_check(seq, n):
    """
    Fit the smallest C with the rate combination <= C M^-2 over the
    sequence; margins are each entry's combination against the median.
    """
    if len(seq) < 3:
        raise PreconditionError(
            f"A rate check needs at least 3 entries, got {len(seq)}", inequality="len(seq) >= 3"
        )
    combinations = np.array([rate_combination(n, *entry) for entry in seq.entries])
    reference = float(np.median(combinations))
    margins = combinations / reference if reference > 0 else np.zeros_like(combinations)
    entries = []
    for entry, combination, margin in zip(seq.entries, combinations, margins, strict=True):
        entries.append(
            {
                "M": entry[0],
                "combination": float(combination),
                "margin": float(margin),
                "flagged": bool(margin > RATE_FLAG_MARGIN),
            }
        )
    flagged = [entry["M"] for entry in entries if entry["flagged"]]
    if flagged:
        logger.warning("Weyl rate check flags M = %s", ", ".join(f"{M:g}" for M in flagged))
    return {
        "tag": "W1" if n == 10 else "W2",
        "n": n,
        "fitted_constant": float(np.max(combinations)),
        "entries": entries,
        "flagged": flagged,
    }
