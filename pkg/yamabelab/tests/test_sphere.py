import math

from fractions import Fraction

import numpy as np

from django.test import SimpleTestCase

from yamabelab.exceptions import UnsupportedDegreeError
from yamabelab.sphere import (
    SphericalPolynomial,
    decompose_harmonic,
    expand_square_R2,
    harmonic_projection,
    ladder_denominator,
    ladder_paths,
    laplacian_power_at_origin,
    odd_moment_constant,
    product_mean,
    random_polynomial,
    reconstruct,
    sphere_area,
    sphere_average_contraction,
    sphere_monomial_moment,
    taylor_block_average,
    verify_odd_moment,
)


class TestMoments(SimpleTestCase):
    def test_low_order_moments(self):
        for n in range(3, 16):
            with self.subTest(n=n):
                self.assertEqual(sphere_monomial_moment(n, (2,)), Fraction(1, n))
                self.assertEqual(sphere_monomial_moment(n, (4,)), Fraction(3, n * (n + 2)))
                self.assertEqual(sphere_monomial_moment(n, (2, 2)), Fraction(1, n * (n + 2)))
                self.assertEqual(
                    sphere_monomial_moment(n, (2, 2, 2)), Fraction(1, n * (n + 2) * (n + 4))
                )

    def test_odd_exponents_vanish(self):
        self.assertEqual(sphere_monomial_moment(10, (3, 1)), 0)
        self.assertEqual(sphere_monomial_moment(10, (1,)), 0)

    def test_permutations_agree(self):
        self.assertEqual(
            sphere_monomial_moment(11, (4, 0, 2)), sphere_monomial_moment(11, (0, 2, 4))
        )

    def test_r_power_averages_to_one(self):
        for n in (3, 10, 15):
            self.assertEqual(SphericalPolynomial.r_power(n, 4).mean(), 1)

    def test_invalid_multi_index(self):
        with self.assertRaises(ValueError):
            sphere_monomial_moment(2, (2, 2, 2))
        with self.assertRaises(ValueError):
            sphere_monomial_moment(3, (-2,))

    def test_sphere_area(self):
        self.assertAlmostEqual(sphere_area(2), 2 * math.pi)
        self.assertAlmostEqual(sphere_area(3), 4 * math.pi)


class TestLadder(SimpleTestCase):
    def test_denominator(self):
        self.assertEqual(ladder_denominator(10, 1), 20)
        self.assertEqual(ladder_denominator(10, 2), 960)

    def test_block_average_paths_agree(self):
        rng = np.random.default_rng(3)
        for n, k in ((10, 1), (10, 2), (11, 2), (5, 3)):
            with self.subTest(n=n, k=k):
                block = random_polynomial(n, 2 * k, rng)
                self.assertEqual(taylor_block_average(n, k, block), block.mean())

    def test_ladder_paths(self):
        rng = np.random.default_rng(4)
        exact = random_polynomial(10, 4, rng)
        by_moments, by_ladder, gap = ladder_paths(exact, 2)
        self.assertEqual(by_moments, by_ladder)
        self.assertEqual(gap, 0.0)

        _, _, gap = ladder_paths(random_polynomial(11, 6, rng, exact=False), 3)
        self.assertLessEqual(gap, 1e-10)

        # Delta |x|^2 = 2n, which is also the k = 1 denominator
        _, by_ladder, _ = ladder_paths(SphericalPolynomial.r_power(10, 2), 1)
        self.assertEqual(by_ladder, 1)

    def test_zero_block(self):
        self.assertEqual(taylor_block_average(10, 2, SphericalPolynomial.zero(10, 4)), 0)

    def test_dimension_mismatch(self):
        with self.assertRaises(ValueError):
            taylor_block_average(10, 1, SphericalPolynomial.r_power(11, 2))


class TestOddMoment(SimpleTestCase):
    def test_constant(self):
        # 3! / ((n + 2) 2 n)
        self.assertEqual(odd_moment_constant(10, 1), Fraction(6, 12 * 20))
        with self.assertRaises(ValueError):
            odd_moment_constant(10, 0)

    def test_random_blocks(self):
        rng = np.random.default_rng(0)
        for n, k in ((10, 1), (11, 1), (6, 2)):
            with self.subTest(n=n, k=k):
                block = random_polynomial(n, 2 * k + 1, rng)
                report = verify_odd_moment(block, k)
                self.assertTrue(report["ok"])
                self.assertEqual(len(report["entries"]), n)

    def test_wrong_degree(self):
        with self.assertRaises(ValueError):
            verify_odd_moment(SphericalPolynomial.r_power(10, 2), 1)


class TestHarmonicDecomposition(SimpleTestCase):
    def test_x1_squared(self):
        n = 10
        x1 = SphericalPolynomial.coordinate(n, 0)
        components = decompose_harmonic(x1 * x1)
        self.assertEqual([c.degree for c in components], [2, 0])
        self.assertEqual([c.eigenvalue for c in components], [2 * n, 0])

        harmonic = components[0].polynomial
        self.assertEqual(harmonic.terms[(2,) + (0,) * (n - 1)], Fraction(n - 1, n))
        self.assertEqual(harmonic.terms[(0, 2) + (0,) * (n - 2)], Fraction(-1, n))
        self.assertEqual(components[1].polynomial.terms[(0,) * n], Fraction(1, n))

    def test_reconstruction_is_exact(self):
        rng = np.random.default_rng(1)
        block = random_polynomial(5, 4, rng)
        components = decompose_harmonic(block)
        self.assertEqual(reconstruct(components, 5, 4), block)

    def test_components_are_orthogonal(self):
        rng = np.random.default_rng(2)
        components = decompose_harmonic(random_polynomial(4, 4, rng))
        for a in components:
            for b in components:
                if a.degree != b.degree:
                    self.assertEqual(a.polynomial.inner(b.polynomial), 0)

    def test_degree_limit(self):
        rng = np.random.default_rng(0)
        with self.assertRaises(UnsupportedDegreeError) as cm:
            decompose_harmonic(random_polynomial(3, 9, rng))
        self.assertEqual(cm.exception.degree, 9)


class TestPolynomials(SimpleTestCase):
    def test_product_mean(self):
        rng = np.random.default_rng(4)
        p = random_polynomial(4, 2, rng, exact=False)
        q = random_polynomial(4, 4, rng, exact=False)
        self.assertAlmostEqual(product_mean(p, q), float((p * q).mean()), places=10)
        self.assertEqual(product_mean(p, random_polynomial(4, 3, rng, exact=False)), 0.0)

    def test_json_round_trip(self):
        p = SphericalPolynomial(3, 2, {(2, 0, 0): Fraction(1, 3), (0, 1, 1): -2})
        self.assertEqual(SphericalPolynomial.from_json(p.to_json()), p)

    def test_bad_multi_index(self):
        with self.assertRaises(ValueError):
            SphericalPolynomial(3, 2, {(1, 0, 0): 1})

    def test_odd_r_power(self):
        with self.assertRaises(ValueError):
            SphericalPolynomial.r_power(3, 3)


class TestTensorAverages(SimpleTestCase):
    def test_two_slots(self):
        W = np.random.default_rng(0).normal(size=(10, 10))
        self.assertAlmostEqual(sphere_average_contraction([W], ["**"]), np.trace(W) / 10)

    def test_four_slots(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(6, 6))
        A = A + A.T
        B = rng.normal(size=(6, 6))
        B = B + B.T
        expected = (np.trace(A) * np.trace(B) + 2 * np.trace(A @ B)) / (6 * 8)
        self.assertAlmostEqual(
            sphere_average_contraction([A, B], ["**", "**"]), expected, places=10
        )

    def test_odd_slots_vanish(self):
        self.assertEqual(sphere_average_contraction([np.ones(5)], ["*"]), 0.0)

    def test_squared_hessian_block(self):
        rng = np.random.default_rng(5)
        H = rng.normal(size=(10, 10))
        H = H + H.T
        report = expand_square_R2(H)
        self.assertAlmostEqual(
            report["average"], report["traceless_part"] + report["trace_part"], places=10
        )
        self.assertAlmostEqual(report["average"], report["grouped"], places=10)


class TestHarmonicProjection(SimpleTestCase):
    def test_x1_squared(self):
        n = 7
        x1 = SphericalPolynomial.coordinate(n, 0)
        projected = harmonic_projection(x1 * x1)
        self.assertTrue(projected.laplacian().is_zero())
        self.assertEqual(projected.terms[(2,) + (0,) * (n - 1)], Fraction(n - 1, n))

    def test_harmonic_input_is_unchanged(self):
        x1 = SphericalPolynomial.coordinate(5, 0)
        x2 = SphericalPolynomial.coordinate(5, 1)
        self.assertEqual(harmonic_projection(x1 * x2), x1 * x2)

    def test_random_quartic(self):
        rng = np.random.default_rng(4)
        projected = harmonic_projection(random_polynomial(6, 4, rng))
        self.assertTrue(projected.laplacian().is_zero())

    def test_laplacian_power_at_origin(self):
        for n in (3, 10):
            with self.subTest(n=n):
                self.assertEqual(
                    laplacian_power_at_origin(SphericalPolynomial.r_power(n, 2), 1), 2 * n
                )
                # Delta^2 |x|^4 = 8n(n+2)
                self.assertEqual(
                    laplacian_power_at_origin(SphericalPolynomial.r_power(n, 4), 2),
                    8 * n * (n + 2),
                )

    def test_laplacian_power_needs_matching_degree(self):
        with self.assertRaises(ValueError):
            laplacian_power_at_origin(SphericalPolynomial.r_power(4, 4), 1)
