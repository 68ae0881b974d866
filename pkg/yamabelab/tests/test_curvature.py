from fractions import Fraction

import numpy as np

from django.test import SimpleTestCase

from yamabelab.curvature import (
    BLOCK6_COMPLETED,
    BLOCK6_SOURCE,
    CurvatureJet,
    check_hv_inequalities,
    cnc_metric_expansion,
    cnc_operator_coeffs,
    cnc_rescaled_coeffs,
    dimension_gate,
    dimension_gate_table,
    fit_rescaled_envelopes,
    generate_jet,
    laplacian_cubed_target,
    r3_component_split,
    rbar2_weyl,
    rbar4_structure,
    rbar6_formula,
    rescaling_factor,
    ricci_blocks,
    scalar_curvature_rescaled,
    scalar_taylor_block,
    sixth_order_contractions,
    taylor_block_6,
    validate_jet,
)
from yamabelab.exceptions import HypothesisError, PreconditionError, UnsupportedOrderError
from yamabelab.sphere import SphericalPolynomial, laplacian_power_at_origin


def sectional_jet(n):
    """R_0101 = 1 with the algebraic symmetries, which has non-zero Ricci."""
    rm0 = np.zeros((n,) * 4)
    rm0[0, 1, 0, 1] = rm0[1, 0, 1, 0] = 1.0
    rm0[0, 1, 1, 0] = rm0[1, 0, 0, 1] = -1.0
    return CurvatureJet(n, rm0, np.zeros((n,) * 5), np.zeros((n,) * 6))


class TestDimensionGate(SimpleTestCase):
    def test_holds_in_dimension_ten(self):
        gate = dimension_gate(10)
        self.assertTrue(gate["holds"])
        self.assertEqual(gate["rhs"], Fraction(1, 38880))
        self.assertAlmostEqual(float(gate["margin"]), 8.94e-6, delta=1e-8)

    def test_table(self):
        table = dimension_gate_table(10, 25)
        self.assertEqual(len(table), 16)
        self.assertEqual([row["n"] for row in table if row["holds"]], [10, 11])

    def test_below_ten(self):
        with self.assertRaises(PreconditionError) as cm:
            dimension_gate(9)
        self.assertEqual(cm.exception.inequality, "n >= 10")

    def test_epsilon(self):
        self.assertFalse(dimension_gate(10, 1)["holds"])
        self.assertEqual(dimension_gate(10, 0.1)["epsilon"], Fraction(1, 10))
        with self.assertRaises(PreconditionError):
            dimension_gate(10, -1)


class TestGeneratedJet(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.jet = generate_jet(10, seed=0)

    def test_validates(self):
        report = validate_jet(self.jet)
        failing = [c["name"] for c in report["constraints"] if not c["ok"]]
        self.assertEqual(failing, [])
        self.assertTrue(report["ok"])
        self.assertFalse(report["hypothesis_flags"]["W0_zero"])

    def test_reproducible(self):
        again = generate_jet(10, seed=0)
        np.testing.assert_array_equal(self.jet.rm2, again.rm2)

    def test_rbar2(self):
        expected = -self.jet.weyl_norm_sq / 120
        self.assertAlmostEqual(rbar2_weyl(self.jet), expected, delta=1e-12 * abs(expected))

    def test_rbar6_needs_hypothesis(self):
        with self.assertRaises(HypothesisError):
            rbar6_formula(self.jet)
        with self.assertRaises(HypothesisError):
            check_hv_inequalities(self.jet)

    def test_r3_split(self):
        split = r3_component_split(self.jet)
        self.assertLessEqual(set(split["components"]), {1, 3})
        self.assertGreater(split["degree3_norm"], 0)
        self.assertGreaterEqual(split["degree1_norm"], 0)
        self.assertIsNotNone(split["ratio_to_weyl"])

    def test_tensors_are_read_only(self):
        with self.assertRaises(ValueError):
            self.jet.rm0[0, 0, 0, 0] = 1.0

    def test_scaled(self):
        scaled = self.jet.scaled(2.0)
        self.assertAlmostEqual(scaled.weyl_norm_sq, 4 * self.jet.weyl_norm_sq)


class TestHypothesisJets(SimpleTestCase):
    def supplied(self, jet, block=None):
        """The same jet with its degree-6 block passed off as supplied data."""
        blocks = dict(jet.scalar_blocks)
        if block is not None:
            blocks[6] = block
        metadata = {key: value for key, value in jet.metadata.items() if key != BLOCK6_SOURCE}
        return CurvatureJet(jet.n, jet.rm0, jet.rm1, jet.rm2, blocks, metadata)

    def test_completed_blocks_are_assumed(self):
        for n in (10, 11):
            for seed in range(3):
                with self.subTest(n=n, seed=seed):
                    jet = generate_jet(n, seed=seed, hypothesis=True)
                    self.assertEqual(jet.metadata[BLOCK6_SOURCE], BLOCK6_COMPLETED)
                    result = rbar6_formula(jet)
                    self.assertEqual(result["identity_status"], "assumed")

    def test_rbar6_identity(self):
        for n in (10, 11):
            for seed in range(3):
                with self.subTest(n=n, seed=seed):
                    jet = generate_jet(n, seed=seed, hypothesis=True)
                    self.assertTrue(jet.hypothesis.flat_to_second_order)
                    self.assertTrue(validate_jet(jet)["ok"])
                    result = rbar6_formula(self.supplied(jet))
                    self.assertEqual(result["identity_status"], "checked")
                    self.assertTrue(result["identity_ok"])
                    self.assertLessEqual(result["identity_residual"], 1e-10)
                    tolerance = 1e-10 * max(abs(result["value"]), 1.0)
                    self.assertAlmostEqual(
                        result["block_average"], result["value"], delta=tolerance
                    )

    def test_wrong_sixth_order_block(self):
        n = 10
        jet = generate_jet(n, seed=0, hypothesis=True)
        norm, q, s = sixth_order_contractions(jet)
        # Delta^3 |x|^6 = 48 n(n+2)(n+4), so the normalised residual becomes 1
        shift = max(abs(norm), abs(q), abs(s), 1.0) / (48 * n * (n + 2) * (n + 4))
        block = jet.scalar_blocks[6] + SphericalPolynomial.r_power(n, 6) * shift
        with self.assertLogs("yamabelab.curvature", "WARNING"):
            result = rbar6_formula(self.supplied(jet, block))
        self.assertEqual(result["identity_status"], "checked")
        self.assertFalse(result["identity_ok"])
        self.assertAlmostEqual(result["identity_residual"], 1.0, places=6)
        self.assertNotAlmostEqual(result["block_average"], result["value"], places=12)

    def test_scaled_jet_recompletes_block(self):
        jet = self.supplied(generate_jet(10, seed=2, hypothesis=True))
        scaled = jet.scaled(3.0)
        self.assertEqual(scaled.metadata[BLOCK6_SOURCE], BLOCK6_COMPLETED)
        result = rbar6_formula(scaled)
        self.assertEqual(result["identity_status"], "assumed")
        self.assertAlmostEqual(
            result["value"], 9 * rbar6_formula(jet)["value"], delta=1e-9 * abs(result["value"])
        )

    def test_hv_inequalities(self):
        for n in (10, 11):
            inside = []
            for seed in range(8):
                report = check_hv_inequalities(generate_jet(n, seed=seed, hypothesis=True))
                if report["status"] == "ok":
                    inside.append(report)
            with self.subTest(n=n):
                self.assertGreaterEqual(len(inside), 4)
                for report in inside:
                    self.assertGreaterEqual(report["dec7e3"]["margin"], -1e-12)

    def test_hv_inequalities_need_flat_jet(self):
        with self.assertRaises(HypothesisError):
            check_hv_inequalities(generate_jet(10, seed=1))


class TestConstraints(SimpleTestCase):
    def test_ricci_violation(self):
        report = validate_jet(sectional_jet(4))
        constraints = {c["name"]: c for c in report["constraints"]}
        self.assertFalse(report["ok"])
        self.assertFalse(constraints["cnc.ricci"]["ok"])
        self.assertTrue(constraints["rm0.antisymmetry_ab"]["ok"])
        self.assertTrue(constraints["rm0.first_bianchi"]["ok"])

    def test_bad_shape(self):
        with self.assertRaises(PreconditionError):
            CurvatureJet(4, np.zeros((4,) * 3), np.zeros((4,) * 5), np.zeros((4,) * 6))

    def test_zero_jet(self):
        jet = CurvatureJet.zero(5)
        self.assertTrue(validate_jet(jet)["ok"])
        self.assertTrue(jet.hypothesis.flat_to_second_order)
        self.assertTrue(jet.scalar_block(4).is_zero())


class TestExpansions(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.jet = generate_jet(6, seed=2)
        cls.points = np.random.default_rng(0).normal(size=(8, 6)) * 0.05

    def test_flat_metric(self):
        g = cnc_metric_expansion(CurvatureJet.zero(6), self.points)
        np.testing.assert_allclose(g, np.broadcast_to(np.eye(6), g.shape))

    def test_metric_is_symmetric(self):
        g = cnc_metric_expansion(self.jet, self.points)
        np.testing.assert_allclose(g, np.swapaxes(g, -1, -2), atol=1e-12)

    def test_radial_direction_is_preserved(self):
        g = cnc_metric_expansion(self.jet, self.points)
        np.testing.assert_allclose(
            np.einsum("kpq,kq->kp", g, self.points), self.points, atol=1e-12
        )

    def test_order_limit(self):
        with self.assertRaises(UnsupportedOrderError):
            cnc_metric_expansion(self.jet, self.points, order=5)
        with self.assertRaises(UnsupportedOrderError):
            cnc_operator_coeffs(self.jet, self.points, order=5)

    def test_operator_shapes(self):
        b, d = cnc_operator_coeffs(self.jet, self.points)
        self.assertEqual(b.shape, (8, 6))
        self.assertEqual(d.shape, (8, 6, 6))

    def test_flat_scalar_curvature(self):
        value = scalar_curvature_rescaled(CurvatureJet.zero(10), np.ones(10), 100.0)
        self.assertEqual(value, 0.0)

    def test_rbar4_structure(self):
        self.assertTrue(rbar4_structure(10)["nonpositive"])


class TestScalarBlocks(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.jet = generate_jet(8, 2)
        cls.hypothesis_jet = generate_jet(8, 2, hypothesis=True)

    def test_ricci_vanishes_at_origin(self):
        ricci, ricci1, ricci2 = ricci_blocks(self.jet)
        np.testing.assert_allclose(ricci, 0.0, atol=1e-10)
        self.assertEqual(ricci1.shape, (8, 8, 8))
        self.assertEqual(ricci2.shape, (8,) * 4)

    def test_scalar_hessian_is_traced_ricci(self):
        _, _, ricci2 = ricci_blocks(self.jet)
        np.testing.assert_allclose(
            self.jet.scalar_hessian(), np.einsum("bbef->ef", ricci2), atol=1e-12
        )

    def test_attached_and_missing_blocks(self):
        self.assertIs(scalar_taylor_block(self.jet, 4), self.jet.scalar_blocks[4])
        self.assertTrue(scalar_taylor_block(self.jet, 5).is_zero())

    def test_completed_sixth_order_block_hits_target(self):
        block = taylor_block_6(self.hypothesis_jet)
        target = laplacian_cubed_target(self.hypothesis_jet)
        self.assertAlmostEqual(
            float(laplacian_power_at_origin(block, 3)),
            target,
            delta=1e-10 * max(abs(target), 1.0),
        )

    def test_sixth_order_block_needs_hypothesis(self):
        with self.assertRaises(HypothesisError):
            taylor_block_6(self.jet)


class TestRescaledCoefficients(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.jet = generate_jet(6, 1)
        cls.points = np.random.default_rng(5).normal(size=(4, 6))

    def test_rescaling(self):
        M = 1e3
        factor = rescaling_factor(6, M)
        b_bar, d_bar = cnc_rescaled_coeffs(self.jet, self.points, M)
        b, d = cnc_operator_coeffs(self.jet, factor * self.points)
        np.testing.assert_allclose(b_bar, factor * b, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(d_bar, d, rtol=1e-12, atol=1e-15)

    def test_order_limit(self):
        with self.assertRaises(UnsupportedOrderError):
            cnc_rescaled_coeffs(self.jet, self.points, 1e3, order=5)

    def test_fitted_envelopes(self):
        fit = fit_rescaled_envelopes(self.jet, 1e3, [0.5, 1.0, 2.0], np.eye(6))
        self.assertEqual(fit["M"], 1e3)
        self.assertGreater(fit["b_constant"], 0)
        self.assertGreater(fit["d_constant"], 0)

        flat = fit_rescaled_envelopes(CurvatureJet.zero(6), 1e3, [1.0], np.eye(6))
        self.assertEqual(flat["b_constant"], 0.0)
        self.assertEqual(flat["d_constant"], 0.0)
