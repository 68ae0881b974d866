import numpy as np

from django.test import SimpleTestCase

from yamabelab.bubble import eval_bubble
from yamabelab.exceptions import OutOfDomainError
from yamabelab.radial import RadialFunction
from yamabelab.utils import log_grid


def bubble_table(n=10, points_per_decade=128):
    grid = log_grid(1e-3, 1e3, points_per_decade)
    return RadialFunction(grid, eval_bubble(n, grid), 0.0, 2.0 - n, name="U")


class TestLogGrid(SimpleTestCase):
    def test_endpoints_are_exact(self):
        grid = log_grid(1e-4, 1e4, 256)
        self.assertEqual(grid[0], 1e-4)
        self.assertEqual(grid[-1], 1e4)
        self.assertEqual(len(grid), 8 * 256 + 1)

    def test_uniform_in_log(self):
        steps = np.diff(np.log(log_grid(1e-2, 1e2, 16)))
        np.testing.assert_allclose(steps, steps[0])

    def test_invalid_bounds(self):
        with self.assertRaises(ValueError):
            log_grid(1.0, 0.5, 16)


class TestRadialFunction(SimpleTestCase):
    def test_interpolates_between_nodes(self):
        f = bubble_table()
        r = np.array([0.37, 1.0, 12.5])
        np.testing.assert_allclose(f(r), eval_bubble(10, r), rtol=1e-5)

    def test_derivatives(self):
        n = 10
        f = bubble_table(n, points_per_decade=512)
        r = np.array([0.5, 2.0])
        expected = -(n - 2) * r * (1 + r**2) ** (-n / 2)
        np.testing.assert_allclose(f.derivative(r), expected, rtol=1e-4)
        with self.assertRaises(ValueError):
            f.derivative(r, order=3)

    def test_out_of_domain(self):
        f = bubble_table()
        with self.assertRaises(OutOfDomainError) as cm:
            f(1e4)
        self.assertEqual(cm.exception.radius, 1e4)

    def test_rejects_bad_grids(self):
        with self.assertRaises(ValueError):
            RadialFunction([1.0, 0.5, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0])
        with self.assertRaises(ValueError):
            RadialFunction([1.0, 2.0, 3.0], [1.0, 1.0, 1.0])
        with self.assertRaises(ValueError):
            RadialFunction([1.0, 2.0, 3.0, 4.0], [1.0, np.nan, 1.0, 1.0])

    def test_values_are_read_only(self):
        f = bubble_table()
        with self.assertRaises(ValueError):
            f.values[0] = 2.0

    def test_slopes_follow_exponents(self):
        f = bubble_table(10)
        report = f.check_exponents(1e-2)
        self.assertTrue(report["ok"])
        self.assertAlmostEqual(report["outer"]["fitted"], -8.0, delta=1e-2)

    def test_kelvin_twice_is_identity(self):
        f = bubble_table()
        twice = f.kelvin(1.3, 10).kelvin(1.3, 10)
        np.testing.assert_allclose(twice.grid, f.grid, rtol=1e-14)
        np.testing.assert_allclose(twice.values, f.values, rtol=1e-12)

    def test_kelvin_swaps_exponents(self):
        image = bubble_table(10).kelvin(1.0, 10)
        self.assertEqual(image.inner_exponent, 0.0)
        self.assertEqual(image.outer_exponent, -8.0)

    def test_kelvin_of_bubble_is_bubble(self):
        f = bubble_table()
        image = f.kelvin(1.0, 10)
        np.testing.assert_allclose(image.values, eval_bubble(10, image.grid), rtol=1e-12)

    def test_arithmetic(self):
        f = bubble_table()
        np.testing.assert_allclose((f + f).values, 2 * f.values)
        np.testing.assert_allclose((f - f).values, 0.0)
        with self.assertRaises(ValueError):
            f + f.restrict(1e-2, 1e2)
