from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json
from yamabelab.sturm_liouville import (
    check_comparison_functions,
    check_f2_bounds,
    check_f2lambda_bounds,
    check_f3_bounds,
    check_supersolutions,
    scan_lambda_window,
    solve_f2,
    solve_f2_lambda,
    solve_f3,
)


class Command(LabCommand):
    help = (
        "Run the envelope checks (nov19e1, aabb, mar10e2, mar11e1) and the "
        "supersolution signs for one dimension; writes bounds.json."
    )

    def add_arguments(self, parser):
        parser.add_argument("--dim", type=int, default=10, help="Dimension n (default 10).")
        parser.add_argument(
            "--lambda",
            dest="lambdas",
            type=float,
            action="append",
            help="Kelvin parameters for mar10e2; repeat for several (default 0.99, 1.0, 1.01).",
        )
        parser.add_argument(
            "--epsilon", type=float, default=0.1, help="epsilon of the f2lambda envelope (default 0.1)."
        )
        parser.add_argument(
            "--scan",
            action="store_true",
            help="Also report the largest |lambda-1| for which the f2lambda envelope holds.",
        )
        self.add_output_argument(parser)

    def handle(self, **options):
        n = options["dim"]
        epsilon = options["epsilon"]
        lambdas = options["lambdas"] or [0.99, 1.0, 1.01]
        output_dir = self.get_output_dir(options)

        checks = {
            "f2": check_f2_bounds(solve_f2(n), n),
            "f3": check_f3_bounds(solve_f3(n), n),
            "supersolutions": check_supersolutions(n),
        }
        for lam in lambdas:
            f = solve_f2_lambda(n, lam)
            checks[f"f2lambda({lam:g})"] = check_f2lambda_bounds(f, n, lam, epsilon)
            checks[f"comparison({lam:g})"] = check_comparison_functions(f, n, lam, epsilon)
        if options["scan"]:
            checks["lambda_scan"] = scan_lambda_window(n, epsilon)

        for name, report in checks.items():
            if "ok" in report:
                self.write(f"{name} [{report.get('tag', '')}]: {'ok' if report['ok'] else 'FAILED'}")
            else:
                self.write(f"{name}: largest admissible |lambda-1| = {report['largest_offset']:g}")

        dump_json({"n": n, "epsilon": epsilon, "checks": checks}, output_dir / "bounds.json")
        failed = [name for name, report in checks.items() if report.get("ok") is False]
        if failed:
            self.fail(f"Bound checks failed: {', '.join(failed)}")
