from yamabelab.curvature import (
    check_hv_inequalities,
    generate_jet,
    r3_component_split,
    rbar6_formula,
    validate_jet,
    weyl_norms,
)
from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json, read_jet, write_jet


class Command(LabCommand):
    help = "Generate a reproducible random curvature jet, or validate a jet file."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="action", required=True)

        generate = subparsers.add_parser("generate", help="Draw and project a random jet.")
        generate.add_argument("--dim", type=int, default=10, help="Dimension n (default 10).")
        generate.add_argument("--seed", type=int, default=0, help="Random seed (default 0).")
        generate.add_argument(
            "--hypothesis",
            action="store_true",
            help="Project into the class W(0) = grad W(0) = 0 with the contraction identity.",
        )
        generate.add_argument(
            "--scale", type=float, default=1.0, help="Scale of the raw tensors (default 1.0)."
        )
        generate.add_argument(
            "--height",
            type=float,
            help="Blow-up height M; rescales the tensors to the decay pattern of height M.",
        )
        generate.add_argument(
            "--output", help="Jet file to write (default <output-dir>/jet.json)."
        )
        self.add_output_argument(generate)

        validate = subparsers.add_parser("validate", help="Check the CNC constraints of a jet file.")
        validate.add_argument("path", help="Jet JSON file.")
        self.add_output_argument(validate)

    def handle(self, **options):
        if options["action"] == "generate":
            self.generate(options)
        else:
            self.validate(options)

    def generate(self, options):
        jet = generate_jet(
            options["dim"],
            options["seed"],
            hypothesis=options["hypothesis"],
            scale=options["scale"],
            height=options["height"],
        )
        path = options["output"] or self.get_output_dir(options) / "jet.json"
        write_jet(jet, path)
        weyl, gradient, hessian = weyl_norms(jet)
        self.write(
            f"Wrote {path}: n={jet.n}, |W|^2={weyl:.6e}, |grad Rm|^2={gradient:.6e},"
            f" |grad^2 Rm|^2={hessian:.6e}"
        )

    def validate(self, options):
        jet = read_jet(options["path"])
        report = validate_jet(jet)
        split = r3_component_split(jet) if 3 in jet.scalar_blocks else None
        if split is not None:
            report["r3_split"] = {
                key: value for key, value in split.items() if key != "components"
            }
        identity = None
        if jet.hypothesis.flat_to_second_order:
            report["hv_inequalities"] = check_hv_inequalities(jet)
            report["rbar6"] = rbar6_formula(jet)
            if "identity_status" in report["rbar6"]:
                identity = report["rbar6"]
                report["ok"] = report["ok"] and identity["identity_ok"]

        for constraint in report["constraints"]:
            if self.verbosity > 1 or not constraint["ok"]:
                self.write(
                    f"{constraint['name']}: max violation {constraint['max_violation']:.3e}"
                    f"{'' if constraint['ok'] else '  FAILED'}"
                )
        if identity is not None and (self.verbosity > 1 or not identity["identity_ok"]):
            self.write(
                f"rbar6 identity ({identity['identity_status']}):"
                f" residual {identity['identity_residual']:.3e}"
                f"{'' if identity['identity_ok'] else '  FAILED'}"
            )
        self.write(f"Jet {options['path']}: {'valid' if report['ok'] else 'INVALID'}")
        dump_json(report, self.get_output_dir(options) / "jet_validation.json")
        if not report["ok"]:
            self.fail(f"Jet {options['path']} fails validation")
