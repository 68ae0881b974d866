from yamabelab.curvature import CurvatureJet
from yamabelab.exceptions import DependencyError, PreconditionError
from yamabelab.management.base import LabCommand
from yamabelab.pohozaev import PohozaevInput, eval_pohozaev, i2_breakdown
from yamabelab.profile import V3_VARIANTS, SeparableField
from yamabelab.serializers import dump_json, read_jet, read_profile


class Command(LabCommand):
    help = (
        "Evaluate the Pohozaev balance I1 + I2 + I3 + I4 = I5 on the ball of radius R' "
        "for the bubble or a saved profile; writes pohozaev.json with the I2 breakdown."
    )

    def add_arguments(self, parser):
        source = parser.add_mutually_exclusive_group(required=True)
        source.add_argument("--profile", help="Profile JSON written by the 'profile' command.")
        source.add_argument("--bubble", action="store_true", help="Use v = U.")
        parser.add_argument(
            "--jet", help="Jet JSON file (default for --bubble: the flat jet)."
        )
        parser.add_argument("--radius", type=float, required=True, help="Ball radius R'.")
        parser.add_argument("--dim", type=int, help="Dimension n (default: the profile's or jet's).")
        parser.add_argument(
            "--height",
            type=float,
            help="Blow-up height M (default: the profile's, 1 for --bubble).",
        )
        parser.add_argument(
            "--v3", choices=V3_VARIANTS, default="full", help="v3 variant of a profile (default full)."
        )
        parser.add_argument(
            "--nodes",
            type=int,
            help="Radial quadrature nodes (default YAMABELAB['POHOZAEV']['RADIAL_NODES'], 4097).",
        )
        self.add_output_argument(parser)

    def get_input(self, options):
        jet = read_jet(options["jet"]) if options["jet"] else None
        if options["profile"]:
            if jet is None:
                raise DependencyError("--profile needs the jet it was built from", missing=["--jet"])
            profile = read_profile(options["profile"])
            n = options["dim"] or profile.n
            M = options["height"] or profile.M
            v = profile.as_field(options["v3"])
        else:
            n = options["dim"] or (jet.n if jet is not None else None)
            if n is None:
                raise PreconditionError("--bubble needs --dim or --jet", inequality="n given")
            M = options["height"] or 1.0
            v = SeparableField.bubble(n)
            jet = jet if jet is not None else CurvatureJet.zero(n)
        return PohozaevInput(v, jet, M, options["radius"], n)

    def handle(self, **options):
        data = self.get_input(options)
        result = eval_pohozaev(data, options["nodes"])
        result["breakdown"] = i2_breakdown(data, options["nodes"])
        dump_json(result, self.get_output_dir(options) / "pohozaev.json")

        for key in ("I1", "I2", "I3", "I4", "I5", "defect"):
            self.write(f"{key:>7} = {result[key]: .10e}")
        if result["defect_normalized"] is not None:
            self.write(f"defect / energy = {result['defect_normalized']:.3e} [{result['tag']}]")
