import csv
import json
import tempfile

from io import StringIO
from pathlib import Path
from unittest import mock

from django.core import management
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from yamabelab.curvature import CurvatureJet, generate_jet
from yamabelab.serializers import write_jet
from yamabelab.sphere import SphericalPolynomial
from yamabelab.sturm_liouville import solve_f2


class CommandTestCase(SimpleTestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self._tmp.cleanup)
        self.output_dir = Path(self._tmp.name)

    def call(self, *args):
        stdout = StringIO()
        management.call_command(
            *args, "--output-dir", str(self.output_dir), stdout=stdout, stderr=StringIO()
        )
        return stdout.getvalue()

    def read_json(self, name):
        return json.loads((self.output_dir / name).read_text())


class TestGateCommand(CommandTestCase):
    def test_table(self):
        output = self.call("gate")
        self.assertIn("holds", output.splitlines()[0])

        with (self.output_dir / "gate.csv").open() as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 16)
        self.assertEqual([row["n"] for row in rows if row["holds"] == "true"], ["10", "11"])
        first = self.read_json("gate.json")["rows"][0]
        self.assertEqual(rows[0]["margin_exact"], first["margin_exact"])

    def test_epsilon_fraction(self):
        self.call("gate", "--to", "11", "--epsilon", "1")
        rows = self.read_json("gate.json")["rows"]
        self.assertEqual([row["holds"] for row in rows], [False, False])

    def test_below_ten(self):
        with self.assertRaises(CommandError) as cm:
            self.call("gate", "--from", "9")
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("requires n >= 10", str(cm.exception))


class TestMomentsCommand(CommandTestCase):
    def test_moments(self):
        self.call("moments", "--to", "6", "--dim", "4", "--samples", "2")
        data = self.read_json("moments.json")
        self.assertEqual([row["n"] for row in data["moments"]], [3, 4, 5, 6])
        self.assertEqual(data["moments"][0]["mixed"], "1/15")
        self.assertTrue(all(row["ladder"] and row["fact1"] for row in data["identities"]))


class TestSolveCommand(CommandTestCase):
    def test_f3(self):
        output = self.call("solve", "--profile", "f3", "--dim", "10")
        self.assertIn("bounds ok (aabb)", output)
        self.assertTrue((self.output_dir / "f3.csv").exists())
        self.assertTrue(self.read_json("f3_bounds.json")["ok"])

    def test_f2_needs_dimension_ten(self):
        with self.assertRaises(CommandError) as cm:
            self.call("solve", "--profile", "f2", "--dim", "9")
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("requires n >= 10", str(cm.exception))

    def test_dimension_required(self):
        with self.assertRaises(CommandError) as cm:
            self.call("solve", "--profile", "f2")
        self.assertEqual(cm.exception.returncode, 2)

    def test_fpl_needs_degree(self):
        with self.assertRaises(CommandError) as cm:
            self.call("solve", "--profile", "fpl", "--dim", "10")
        self.assertEqual(cm.exception.returncode, 2)

    def test_bad_config_file(self):
        config = self.output_dir / "run.conf"
        config.write_text("dim = 10\nshape = round\n")
        with self.assertRaises(CommandError) as cm:
            self.call("solve", "--config", str(config))
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("line 2", str(cm.exception))

    def test_configured_problem(self):
        config = self.output_dir / "run.conf"
        config.write_text("dim = 10\ndelta0 = 20\nrhs = r2U\n")
        self.call("solve", "--config", str(config))
        report = self.read_json("solution_bounds.json")
        self.assertEqual(report["tag"], "bvp")
        self.assertTrue(report["ok"])


class TestJetCommand(CommandTestCase):
    def test_generate_and_validate(self):
        output = self.call("jet", "generate", "--dim", "4", "--seed", "2")
        self.assertIn("n=4", output)
        path = self.output_dir / "jet.json"
        output = self.call("jet", "validate", str(path))
        self.assertIn("valid", output)
        report = self.read_json("jet_validation.json")
        self.assertTrue(report["ok"])
        self.assertIn("r3_split", report)

    def test_hypothesis_jet_reports_inequalities(self):
        self.call("jet", "generate", "--dim", "4", "--hypothesis")
        self.call("jet", "validate", str(self.output_dir / "jet.json"))
        report = self.read_json("jet_validation.json")
        self.assertIn("hv_inequalities", report)
        self.assertEqual(report["rbar6"]["identity_status"], "assumed")

    def test_wrong_sixth_order_block(self):
        jet = generate_jet(4, seed=0, hypothesis=True)
        blocks = dict(jet.scalar_blocks)
        blocks[6] = blocks[6] + SphericalPolynomial.r_power(4, 6)
        supplied = CurvatureJet(4, jet.rm0, jet.rm1, jet.rm2, blocks, {"seed": 0})
        path = write_jet(supplied, self.output_dir / "supplied.json")
        with self.assertRaises(CommandError) as cm:
            self.call("jet", "validate", str(path))
        self.assertEqual(cm.exception.returncode, 1)
        report = self.read_json("jet_validation.json")
        self.assertEqual(report["rbar6"]["identity_status"], "checked")
        self.assertFalse(report["rbar6"]["identity_ok"])
        self.assertTrue(all(c["ok"] for c in report["constraints"]))

    def test_invalid_jet(self):
        path = self.output_dir / "broken.json"
        data = json.loads(write_jet(generate_jet(4, seed=0), path).read_text())
        data["rm0"][0][1][0][1] += 1.0
        path.write_text(json.dumps(data))
        with self.assertRaises(CommandError) as cm:
            self.call("jet", "validate", str(path))
        self.assertEqual(cm.exception.returncode, 1)


class TestPohozaevCommand(CommandTestCase):
    def test_bubble(self):
        output = self.call("pohozaev", "--bubble", "--dim", "10", "--radius", "2")
        self.assertIn("defect / energy", output)
        result = self.read_json("pohozaev.json")
        self.assertLessEqual(result["defect_normalized"], 1e-8)
        self.assertIn("breakdown", result)

    def test_bubble_needs_dimension(self):
        with self.assertRaises(CommandError) as cm:
            self.call("pohozaev", "--bubble", "--radius", "2")
        self.assertEqual(cm.exception.returncode, 2)

    def test_profile_needs_jet(self):
        with self.assertRaises(CommandError) as cm:
            self.call("pohozaev", "--profile", "profile.json", "--radius", "2")
        self.assertEqual(cm.exception.returncode, 2)
        self.assertIn("missing: --jet", str(cm.exception))


class TestReportCommand(CommandTestCase):
    def test_selected_checks(self):
        output = self.call(
            "report", "--check", "moment_identities", "--check", "dimension_gate"
        )
        self.assertIn("All checks pass", output)
        report = self.read_json("report.json")
        self.assertEqual(
            [check["name"] for check in report["checks"]], ["moment_identities", "dimension_gate"]
        )
        self.assertEqual(report["summary"]["pass"], 2)
        self.assertTrue((self.output_dir / "report.md").exists())

    def test_gate_is_expected_to_fail_above_eleven(self):
        self.call("report", "--dim", "12", "--check", "dimension_gate")
        report = self.read_json("report.json")
        self.assertEqual(report["checks"][0]["status"], "expected-fail")
        self.assertTrue(report["ok"])

    def test_corrupt_jet(self):
        path = self.output_dir / "corrupt.json"
        path.write_text("{")
        with self.assertRaises(CommandError) as cm:
            self.call(
                "report", "--jet", str(path), "--check", "rbar2_weyl", "--check", "jet_load"
            )
        self.assertEqual(cm.exception.returncode, 1)
        statuses = {
            check["name"]: check["status"] for check in self.read_json("report.json")["checks"]
        }
        self.assertEqual(statuses, {"jet_load": "fail", "rbar2_weyl": "skipped"})

    def test_environment(self):
        self.call("report", "--check", "moment_identities", "--environment")
        self.assertIn("numpy", (self.output_dir / "environment.txt").read_text())

    def test_checks_share_solved_profiles(self):
        with mock.patch("yamabelab.report.solve_f2", wraps=solve_f2) as solve:
            self.call("report", "--check", "f2_bounds", "--check", "log_growth")
        self.assertEqual(solve.call_count, 1)
        statuses = [check["status"] for check in self.read_json("report.json")["checks"]]
        self.assertEqual(statuses, ["pass", "pass"])
