from yamabelab.config import problem_from_config
from yamabelab.exceptions import ConfigError
from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json, write_radial_csv
from yamabelab.sturm_liouville import (
    check_comparison_functions,
    check_f2_bounds,
    check_f2lambda_bounds,
    check_f3_bounds,
    check_fpl_bounds,
    solve_bvp,
    solve_f2,
    solve_f2_lambda,
    solve_f3,
    solve_f_plambda_l,
)


PROFILES = ("f2", "f3", "f2lambda", "fpl")


class Command(LabCommand):
    help = (
        "Solve a radial Sturm-Liouville problem and write <name>.csv together with "
        "<name>_bounds.json. Without --profile the problem is read from --config "
        "(keys dim, delta0, rhs, ...)."
    )

    config_overrides = (
        ("dim", "dim"),
        ("lam", "lambda"),
        ("l", "l"),
        ("epsilon", "epsilon"),
        ("points_per_decade", "points_per_decade"),
        ("tol", "tol"),
        ("closure", "closure"),
    )

    def add_arguments(self, parser):
        parser.add_argument(
            "--profile",
            action="append",
            choices=PROFILES,
            help="Preset problem to solve; repeat for several. f2 and f2lambda need n >= 10.",
        )
        parser.add_argument("--dim", type=int, help="Dimension n.")
        parser.add_argument(
            "--lambda", dest="lam", type=float, help="Kelvin parameter (default 1.0)."
        )
        parser.add_argument("--l", type=int, help="Harmonic degree for fpl, 3 <= l <= n-4.")
        parser.add_argument(
            "--epsilon", type=float, help="epsilon of the f2lambda envelope (default 0.1)."
        )
        parser.add_argument(
            "--points-per-decade",
            type=int,
            help="Grid density (default YAMABELAB['GRID']['POINTS_PER_DECADE'], 256).",
        )
        parser.add_argument(
            "--tol", type=float, help="Residual tolerance (default YAMABELAB['SOLVER']['TOLERANCE'])."
        )
        parser.add_argument(
            "--closure", help="Boundary closure from YAMABELAB_CLOSURES (default 'default')."
        )
        self.add_config_argument(parser)
        self.add_output_argument(parser)

    def solve_profile(self, profile, config):
        n = config["dim"]
        lam = config.get("lambda", 1.0)
        closure = config.get("closure", "default")
        kwargs = {}
        if "points_per_decade" in config:
            kwargs["points_per_decade"] = config["points_per_decade"]
        if "tol" in config:
            kwargs["tolerance"] = config["tol"]

        if profile == "f2":
            solution = solve_f2(n, closure=closure, **kwargs)
            return solution, check_f2_bounds(solution, n)
        if profile == "f3":
            solution = solve_f3(n, closure=closure, **kwargs)
            return solution, check_f3_bounds(solution, n)
        if profile == "f2lambda":
            epsilon = config.get("epsilon", 0.1)
            solution = solve_f2_lambda(n, lam, closure=closure, **kwargs)
            report = check_f2lambda_bounds(solution, n, lam, epsilon)
            report["comparison"] = check_comparison_functions(solution, n, lam, epsilon)
            report["ok"] = report["ok"] and report["comparison"]["ok"]
            return solution, report

        if "l" not in config:
            raise ConfigError("--profile fpl needs --l (or the key l)", key="l")
        l = config["l"]
        solution = solve_f_plambda_l(n, lam, l, closure=closure, **kwargs)
        return solution, check_fpl_bounds(solution, n, l)

    def solve_configured(self, config):
        problem = problem_from_config(config)
        solution = solve_bvp(problem, closure=config.get("closure", "default"))
        report = {
            "tag": "bvp",
            "n": problem.n,
            "delta0": problem.delta0,
            "residual_norm": solution.residual_norm,
            "bound_certificate": solution.bound_certificate,
            "rhs_constant": solution.rhs_constant,
            "closure": solution.closure,
            "exponents": solution.profile.check_exponents(1e-2),
        }
        report["ok"] = solution.bound_certificate is not None
        return solution, report

    def handle(self, **options):
        config = self.get_config(options)
        if "dim" not in config:
            raise ConfigError("Missing required key 'dim' (use --dim or the config file)", key="dim")
        output_dir = self.get_output_dir(options, config)

        jobs = options["profile"] or (["solution"] if "delta0" in config else ["f2"])
        failed = []
        for name in jobs:
            if name == "solution":
                solution, report = self.solve_configured(config)
            else:
                solution, report = self.solve_profile(name, config)
            report["residual_norm"] = solution.residual_norm
            csv_path = write_radial_csv(solution.profile, output_dir / f"{name}.csv")
            json_path = dump_json(report, output_dir / f"{name}_bounds.json")
            self.write(
                f"{name}: {len(solution.grid)} nodes, residual {solution.residual_norm:.3e},"
                f" bounds {'ok' if report['ok'] else 'FAILED'} ({report.get('tag', '')})"
            )
            if self.verbosity > 1:
                self.write(f"  wrote {csv_path} and {json_path}")
            if not report["ok"]:
                failed.append(name)

        if failed:
            self.fail(f"Bound checks failed for {', '.join(failed)}")
