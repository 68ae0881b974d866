import numpy as np

from django.test import SimpleTestCase

from yamabelab.bubble import (
    Dimension,
    bubble_derivatives,
    conformal_constant,
    eval_bubble,
    eval_V_lambda,
    eval_xi,
    eval_xi_tilde,
    kelvin_bubble,
    kelvin_transform,
    potential_bounds,
    scaled_bubble,
)
from yamabelab.curvature import CurvatureJet, generate_jet
from yamabelab.exceptions import PreconditionError
from yamabelab.sphere import build_R_bar_tilde


class TestBubble(SimpleTestCase):
    def test_values(self):
        self.assertEqual(eval_bubble(10, 0.0), 1.0)
        self.assertAlmostEqual(eval_bubble(10, 1.0), 2.0**-4)
        self.assertAlmostEqual(eval_bubble(11, 1.0), 2.0**-4.5)

    def test_array_input_keeps_shape(self):
        r = np.array([0.5, 1.0, 2.0])
        self.assertEqual(eval_bubble(10, r).shape, (3,))

    def test_negative_radius(self):
        with self.assertRaises(PreconditionError):
            eval_bubble(10, -1.0)

    def test_dimension_must_be_at_least_three(self):
        with self.assertRaises(PreconditionError):
            Dimension(2)

    def test_conformal_constant(self):
        self.assertAlmostEqual(conformal_constant(10), 2 / 9)
        self.assertEqual(Dimension(10).exact_c.denominator, 9)

    def test_derivatives_match_finite_differences(self):
        r = np.array([0.3, 1.0, 4.0])
        h = 1e-5
        u, du, d2u = bubble_derivatives(10, r)
        np.testing.assert_allclose(
            du, (eval_bubble(10, r + h) - eval_bubble(10, r - h)) / (2 * h), rtol=1e-6
        )
        np.testing.assert_allclose(
            d2u,
            (eval_bubble(10, r + h) - 2 * u + eval_bubble(10, r - h)) / h**2,
            rtol=1e-4,
        )

    def test_bubble_solves_yamabe_equation(self):
        n = 11
        r = np.geomspace(1e-2, 1e2, 50)
        u, du, d2u = bubble_derivatives(n, r)
        laplacian = d2u + (n - 1) * du / r
        np.testing.assert_allclose(
            laplacian, -n * (n - 2) * u ** ((n + 2) / (n - 2)), rtol=1e-10
        )

    def test_scaled_bubble(self):
        g = scaled_bubble(10, 1.0)
        r = np.array([0.5, 2.0])
        np.testing.assert_allclose(g(r), eval_bubble(10, r))
        np.testing.assert_allclose(g(r, 1), bubble_derivatives(10, r)[1])

        mu = 3.0
        np.testing.assert_allclose(
            scaled_bubble(10, mu)(r), mu**4 * eval_bubble(10, mu * r)
        )


class TestKelvin(SimpleTestCase):
    def test_bubble_is_kelvin_invariant(self):
        r = np.geomspace(1e-2, 1e2, 20)
        np.testing.assert_allclose(kelvin_bubble(10, 1.0, r), eval_bubble(10, r))

    def test_closed_form_matches_transform(self):
        r = np.geomspace(1e-1, 1e1, 20)
        lam = 1.03
        np.testing.assert_allclose(
            kelvin_bubble(10, lam, r),
            kelvin_transform(lambda s: eval_bubble(10, s), lam, r, 10),
            rtol=1e-12,
        )

    def test_transform_needs_positive_radius(self):
        with self.assertRaises(PreconditionError):
            kelvin_transform(lambda s: s, 1.0, 0.0, 10)
        with self.assertRaises(PreconditionError):
            kelvin_bubble(10, -1.0, 1.0)


class TestPotential(SimpleTestCase):
    def test_potential_at_lambda_one(self):
        n = 10
        r = np.geomspace(1e-2, 1e2, 30)
        np.testing.assert_allclose(
            eval_V_lambda(n, 1.0, r), n * (n + 2) / (1 + r**2) ** 2, rtol=1e-10
        )

    def test_potential_between_bounds(self):
        r = np.geomspace(1e-2, 1e2, 30)
        lower, upper = potential_bounds(10, 1.02, r)
        values = eval_V_lambda(10, 1.02, r)
        self.assertTrue(np.all(lower <= values * (1 + 1e-12)))
        self.assertTrue(np.all(values <= upper * (1 + 1e-12)))

    def test_swapped_integrand_agrees(self):
        r = np.geomspace(1e-1, 1e1, 10)
        np.testing.assert_allclose(
            eval_V_lambda(10, 0.98, r),
            eval_V_lambda(10, 0.98, r, swap=True),
            rtol=1e-10,
        )

    def test_scalar_input(self):
        self.assertIsInstance(eval_V_lambda(10, 1.0, 1.0), float)


class TestXi(SimpleTestCase):
    def test_peak_at_concentration_point(self):
        self.assertAlmostEqual(eval_xi(10, [0, 0], 2.0, [0, 0]), 2.0**4)

    def test_decays_away(self):
        near = eval_xi(10, [0, 0], 2.0, [0.1, 0])
        far = eval_xi(10, [0, 0], 2.0, [1.0, 0])
        self.assertGreater(near, far)

    def test_mu_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            eval_xi(10, [0], 0.0, [1])

    def test_tilde_on_flat_jet(self):
        n = 10
        Q, P = np.zeros(n), np.full(n, 0.05)
        value = eval_xi_tilde(n, Q, 5.0, P, CurvatureJet.zero(n), lambda r: 1.0, lambda r: 1.0)
        self.assertAlmostEqual(value, eval_xi(n, Q, 5.0, P))

    def test_tilde_at_concentration_point(self):
        n = 10
        jet = generate_jet(n, 0)
        Q = np.zeros(n)
        value = eval_xi_tilde(n, Q, 3.0, Q, jet, lambda r: 1.0, lambda r: 1.0)
        self.assertEqual(value, eval_xi(n, Q, 3.0, Q))

    def test_tilde_second_order_correction(self):
        n = 10
        jet = generate_jet(n, 0)
        Q = np.zeros(n)
        P = np.zeros(n)
        P[:2] = [0.3, 0.4]
        mu = 4.0
        theta = P / 0.5
        _, r2_tilde = build_R_bar_tilde(jet, 2)
        # mu^((n-10)/2) = 1 in dimension 10
        expected = eval_xi(n, Q, mu, P) - conformal_constant(n) * float(
            r2_tilde.evaluate(theta)
        ) * 2.0
        value = eval_xi_tilde(n, Q, mu, P, jet, lambda r: 2.0, lambda r: 0.0)
        self.assertAlmostEqual(value, expected, delta=1e-12 * max(abs(expected), 1.0))
