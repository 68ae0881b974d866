import math

import numpy as np

from django.test import SimpleTestCase, override_settings

from yamabelab.bubble import eval_bubble
from yamabelab.closures import InvalidClosureError, get_closure, import_closure
from yamabelab.closures.dirichlet import DirichletClosure
from yamabelab.closures.robin import RobinClosure
from yamabelab.exceptions import PreconditionError, SolverError
from yamabelab.sturm_liouville import (
    BoundParams,
    SturmLiouvilleProblem,
    check_comparison_functions,
    check_f2_bounds,
    check_f2lambda_bounds,
    check_f3_bounds,
    check_fpl_bounds,
    check_supersolutions,
    compare_closures,
    convergence_order,
    delta_of_epsilon,
    f2_lower_envelope,
    f2_problem,
    l_bar,
    manufactured_problem,
    positive_root,
    solve_bvp,
    solve_f2,
    solve_f2_lambda,
    solve_f3,
    solve_f_plambda_l,
    solve_manufactured,
    supersolution_expressions,
)


def r2_bubble(n):
    return lambda r: r**2 * eval_bubble(n, r)


class TestProblemValidation(SimpleTestCase):
    def problem(self, **kwargs):
        params = {
            "n": 10,
            "delta0": 20,
            "rhs": r2_bubble(10),
            "bound_params": BoundParams(beta=2, alpha=6),
        }
        params.update(kwargs)
        return SturmLiouvilleProblem(**params)

    def test_positive_root(self):
        # p^2 + 8p - 20 = (p + 10)(p - 2)
        self.assertAlmostEqual(positive_root(10, 20), 2.0)

    def test_valid_problem(self):
        p = self.problem().validate()
        self.assertGreater(p, 0)
        self.assertLess(p * (p + 8), 20)

    def test_delta0_below_n(self):
        with self.assertRaises(PreconditionError) as cm:
            self.problem(delta0=5).validate()
        self.assertEqual(cm.exception.inequality, "delta0 >= n")

    def test_alpha_must_exceed_two(self):
        with self.assertRaises(PreconditionError) as cm:
            self.problem(bound_params=BoundParams(beta=2, alpha=2)).validate()
        self.assertEqual(cm.exception.inequality, "alpha > 2")

    def test_growth_exponent_too_large(self):
        with self.assertRaises(PreconditionError) as cm:
            self.problem(growth_exponent=2.0).validate()
        self.assertEqual(cm.exception.inequality, "p(p+n-2) < delta0")

    def test_negative_rhs(self):
        problem = self.problem(rhs=lambda r: -r**2 * eval_bubble(10, r))
        with self.assertRaises(PreconditionError) as cm:
            problem.validate(problem.build_grid())
        self.assertEqual(cm.exception.inequality, "H >= 0")

    def test_unknown_potential(self):
        with self.assertRaises(PreconditionError):
            self.problem(potential="coulomb")

    def test_f2_needs_dimension_ten(self):
        with self.assertRaises(PreconditionError) as cm:
            f2_problem(9)
        self.assertEqual(cm.exception.inequality, "n >= 10")
        self.assertIn("n ≥ 10", str(cm.exception))

    def test_fpl_degree_range(self):
        self.assertEqual(l_bar(11), 7)
        with self.assertRaises(PreconditionError):
            solve_f_plambda_l(11, 1.0, 8)

    def test_lambda_window(self):
        with self.assertRaises(PreconditionError):
            solve_f2_lambda(10, 1.2)

    def test_delta_of_epsilon(self):
        self.assertEqual(delta_of_epsilon(0.1), 0.02)
        with self.assertRaises(PreconditionError):
            delta_of_epsilon(0.3)

    @override_settings(YAMABELAB={"DELTA_OF_EPSILON": {"0.3": 0.04}})
    def test_delta_of_epsilon_is_configurable(self):
        self.assertEqual(delta_of_epsilon(0.3), 0.04)


class TestF2(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.solutions = {n: solve_f2(n) for n in (10, 11)}

    def test_lower_envelope_spot_value(self):
        self.assertAlmostEqual(f2_lower_envelope(10, 1.0), 4.25 / 576, places=12)

    def test_bounds(self):
        for n, solution in self.solutions.items():
            with self.subTest(n=n):
                report = check_f2_bounds(solution, n)
                self.assertEqual(report["tag"], "nov19e1")
                self.assertTrue(report["lower_bound_ok"])
                self.assertTrue(math.isfinite(report["upper_constant"]))
                self.assertTrue(report["ok"])

    def test_solution_is_non_negative(self):
        for solution in self.solutions.values():
            scale = np.max(np.abs(solution.values))
            self.assertTrue(np.all(solution.values >= -1e-10 * scale))

    def test_residual_within_tolerance(self):
        for solution in self.solutions.values():
            self.assertLessEqual(solution.residual_norm, 1e-2)
            self.assertIsNotNone(solution.bound_certificate)

    def test_bounds_need_dimension_ten(self):
        with self.assertRaises(PreconditionError):
            check_f2_bounds(self.solutions[10], 9)


class TestOtherProfiles(SimpleTestCase):
    def test_f3_bounds(self):
        report = check_f3_bounds(solve_f3(10), 10)
        self.assertEqual(report["tag"], "aabb")
        self.assertTrue(report["ok"])

    def test_f2_lambda_bounds(self):
        for n in (10, 11):
            for lam in (0.99, 1.0, 1.01):
                with self.subTest(n=n, lam=lam):
                    f = solve_f2_lambda(n, lam)
                    report = check_f2lambda_bounds(f, n, lam, 0.1)
                    self.assertEqual(report["tag"], "mar10e2")
                    self.assertTrue(report["ok"])

    def test_f2_lambda_outside_delta(self):
        f = solve_f2_lambda(10, 1.03)
        with self.assertRaises(PreconditionError):
            check_f2lambda_bounds(f, 10, 1.03, 0.1)

    def test_comparison_functions(self):
        f = solve_f2_lambda(10, 1.0)
        report = check_comparison_functions(f, 10, 1.0, 0.1)
        self.assertEqual(report["tag"], "mar11e1")
        self.assertTrue(report["ok"])

    def test_fpl_outer_slope(self):
        f = solve_f_plambda_l(11, 1.0, 3)
        report = check_fpl_bounds(f, 11, 3)
        self.assertEqual(report["expected_slope"], -4)
        self.assertTrue(report["nonnegative"])
        self.assertTrue(report["ok"])

    def test_f_plambda_l_vanishes_at_ends(self):
        f = solve_f_plambda_l(10, 1.0, 3)
        self.assertEqual(f.values[0], 0.0)
        self.assertEqual(f.values[-1], 0.0)


class TestSupersolutions(SimpleTestCase):
    def test_signs_and_identities(self):
        for n in (10, 11):
            with self.subTest(n=n):
                report = check_supersolutions(n)
                self.assertEqual(report["tag"], "supersolution")
                self.assertTrue(all(report["identities"].values()))
                self.assertTrue(report["phi1"]["ok"])
                self.assertTrue(report["phi2"]["ok"])

    def test_supersolutions_need_dimension_ten(self):
        with self.assertRaises(PreconditionError):
            check_supersolutions(8)

    def test_expressions_are_cached(self):
        self.assertIs(supersolution_expressions(10), supersolution_expressions(10))


class TestManufacturedSolution(SimpleTestCase):
    def test_accuracy(self):
        report = solve_manufactured(10)
        self.assertLessEqual(report["max_relative_error"], 1e-6)

    def test_second_order_convergence(self):
        report = convergence_order(10)
        self.assertGreaterEqual(report["order"], 1.8)
        self.assertLessEqual(report["order"], 2.2)

    def test_closures_agree(self):
        problem, _ = manufactured_problem(10)
        report = compare_closures(problem)
        self.assertEqual(report["closures"], ["robin", "dirichlet"])
        self.assertLessEqual(report["max_relative_difference"], 1e-6)

    def test_unresolvable_tolerance(self):
        problem = f2_problem(10, points_per_decade=16, tolerance=1e-12)
        with self.assertRaises(SolverError):
            solve_bvp(problem)


class TestClosures(SimpleTestCase):
    def test_default_closure(self):
        self.assertIsInstance(get_closure(), RobinClosure)

    def test_dirichlet_closure(self):
        closure = get_closure("dirichlet")
        self.assertIsInstance(closure, DirichletClosure)
        self.assertEqual(closure.extend_decades, 3.0)

    def test_class_path(self):
        closure = get_closure("yamabelab.closures.dirichlet.DirichletClosure", EXTEND_DECADES=1)
        self.assertIsInstance(closure, DirichletClosure)
        self.assertEqual(closure.extend_decades, 1.0)

    def test_module_path(self):
        closure = get_closure("yamabelab.closures.dirichlet", EXTEND_DECADES=2)
        self.assertIsInstance(closure, DirichletClosure)
        self.assertEqual(closure.extend_decades, 2.0)
        self.assertIs(import_closure("yamabelab.closures.robin"), RobinClosure)

    def test_unknown_closure(self):
        with self.assertRaises(InvalidClosureError):
            get_closure("yamabelab.closures.spectral")

    def test_path_without_closure(self):
        with self.assertRaises(InvalidClosureError):
            import_closure("yamabelab.conf")
        with self.assertRaises(InvalidClosureError):
            import_closure("yamabelab.closures.base.TridiagonalSystem")

    @override_settings(
        YAMABELAB_CLOSURES={
            "short": {
                "CLOSURE": "yamabelab.closures.dirichlet.DirichletClosure",
                "EXTEND_DECADES": 2,
            }
        }
    )
    def test_configured_class_path(self):
        self.assertEqual(get_closure("short").extend_decades, 2.0)
        self.assertEqual(get_closure("short", EXTEND_DECADES=4).extend_decades, 4.0)

    @override_settings(
        YAMABELAB_CLOSURES={
            "short": {"CLOSURE": "yamabelab.closures.dirichlet", "EXTEND_DECADES": 2}
        }
    )
    def test_configured_closure(self):
        closure = get_closure("short")
        self.assertEqual(closure.extend_decades, 2.0)
        self.assertIsInstance(get_closure("default"), RobinClosure)

    def test_dirichlet_extends_asymptotic_ends(self):
        problem = f2_problem(10, points_per_decade=32)
        grid = problem.build_grid()
        h = float(np.log(grid[1] / grid[0]))
        extended = get_closure("dirichlet").extend_grid(problem, grid, h)
        self.assertAlmostEqual(extended[0], 1e-7, delta=1e-9)
        self.assertAlmostEqual(extended[-1] / 1e7, 1.0, places=6)
        self.assertEqual(len(extended), len(grid) + 2 * 3 * 32)
