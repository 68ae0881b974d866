import numpy as np

from yamabelab.exceptions import ConfigError, PreconditionError
from yamabelab.management.base import LabCommand
from yamabelab.profile import (
    V3_VARIANTS,
    SampledSolution,
    build_profile,
    pde_residual,
    sample_directions,
    zone_radius,
)
from yamabelab.serializers import dump_json, read_jet, write_profile, write_sampled_csv
from yamabelab.sturm_liouville import solve_f2, solve_f3
from yamabelab.utils import log_grid


class Command(LabCommand):
    help = (
        "Build the composite blow-up profile of a jet at height M: solves f2 and f3, "
        "writes profile.json (with f2.csv, f3.csv), samples.csv and the dec8e1 "
        "residual report residual.json."
    )

    config_overrides = (
        ("dim", "dim"),
        ("height", "height"),
        ("epsilon", "epsilon"),
        ("seed", "seed"),
        ("points_per_decade", "points_per_decade"),
    )

    def add_arguments(self, parser):
        parser.add_argument("--jet", required=True, help="Jet JSON file (see 'jet generate').")
        parser.add_argument("--dim", type=int, help="Dimension n (default: the jet's).")
        parser.add_argument("--height", type=float, help="Blow-up height M (default 1000).")
        parser.add_argument(
            "--epsilon",
            type=float,
            help="epsilon of the residual zone M^((16-eps)/(n-2)^2) (default YAMABELAB['PROFILE']['EPSILON']).",
        )
        parser.add_argument(
            "--v3",
            choices=V3_VARIANTS,
            default="eigen",
            help="Angular part of v3 used in the residual (default eigen).",
        )
        parser.add_argument(
            "--seed", type=int, help="Seed of the sphere sample directions (default YAMABELAB['PROFILE']['SEED'])."
        )
        parser.add_argument(
            "--points-per-decade", type=int, help="Grid density of the f2/f3 solves (default 256)."
        )
        self.add_config_argument(parser)
        self.add_output_argument(parser)

    def handle(self, **options):
        config = self.get_config(options)
        jet = read_jet(options["jet"])
        n = config.get("dim", jet.n)
        if n != jet.n:
            raise PreconditionError(f"Jet has n={jet.n}, --dim is {n}", inequality="jet.n == n")
        M = config.get("height", 1e3)
        if M < 1:
            raise ConfigError(f"height must be at least 1, got {M!r}", key="height")
        output_dir = self.get_output_dir(options, config)

        kwargs = {}
        if "points_per_decade" in config:
            kwargs["points_per_decade"] = config["points_per_decade"]
        f2 = solve_f2(n, **kwargs)
        f3 = solve_f3(n, **kwargs)
        profile = build_profile(jet, n, M, f2, f3)
        write_profile(profile, output_dir / "profile.json")

        epsilon = config.get("epsilon")
        zone = zone_radius(n, M, epsilon)
        directions = sample_directions(n, seed=config.get("seed"))
        radii = log_grid(1e-2, zone, 16)
        samples = SampledSolution.from_profile(profile, radii, directions, v3=options["v3"])
        write_sampled_csv(samples, output_dir / "samples.csv")

        residual = pde_residual(
            profile, jet, radii=radii, directions=directions, v3=options["v3"], epsilon=epsilon
        )
        residual["max_abs_residual"] = float(np.max(np.abs(residual.pop("residual"))))
        residual["v3_difference_norm"] = profile.v3_difference_norm
        dump_json(residual, output_dir / "residual.json")

        self.write(
            f"Profile n={n} M={M:g}: zone radius {zone:.3f}, fitted residual constant"
            f" {residual['fitted_constant']:.4e} [{residual['tag']}]"
        )
        if self.verbosity > 1:
            self.write(f"  v3 full/eigen angular difference {profile.v3_difference_norm:.3e}")
