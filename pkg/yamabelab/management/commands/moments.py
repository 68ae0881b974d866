from fractions import Fraction

import numpy as np

from yamabelab.exceptions import ConsistencyError
from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json
from yamabelab.sphere import (
    random_polynomial,
    sphere_area,
    sphere_monomial_moment,
    taylor_block_average,
    verify_odd_moment,
)


class Command(LabCommand):
    help = (
        "Exact sphere moments avg theta_i^2 theta_j^2 and avg theta_i^4 for a range "
        "of n, plus the ladder and odd-moment (fact1) identities on random "
        "polynomials; writes moments.json."
    )

    def add_arguments(self, parser):
        parser.add_argument("--from", dest="n_from", type=int, default=3, help="First n (default 3).")
        parser.add_argument("--to", dest="n_to", type=int, default=15, help="Last n (default 15).")
        parser.add_argument(
            "--dim",
            type=int,
            action="append",
            help="Dimensions for the random identity checks; repeat for several (default 10, 11).",
        )
        parser.add_argument(
            "--samples", type=int, default=20, help="Random polynomials per (n, k) (default 20)."
        )
        parser.add_argument("--seed", type=int, default=0, help="Random seed (default 0).")
        self.add_output_argument(parser)

    def handle(self, **options):
        output_dir = self.get_output_dir(options)
        rows = []
        for n in range(options["n_from"], options["n_to"] + 1):
            mixed = sphere_monomial_moment(n, (2, 2) + (0,) * (n - 2))
            quartic = sphere_monomial_moment(n, (4,) + (0,) * (n - 1))
            ok = mixed == Fraction(1, n * (n + 2)) and quartic == Fraction(3, n * (n + 2))
            rows.append(
                {
                    "n": n,
                    "area": sphere_area(n),
                    "mixed": str(mixed),
                    "quartic": str(quartic),
                    "ok": ok,
                }
            )
            self.write(f"n={n:>3}: avg θ1²θ2² = {mixed}, avg θ1⁴ = {quartic}")

        rng = np.random.default_rng(options["seed"])
        identities = []
        for n in options["dim"] or [10, 11]:
            for k in (1, 2):
                ladder_ok = True
                try:
                    for _ in range(options["samples"]):
                        taylor_block_average(n, k, random_polynomial(n, 2 * k, rng))
                except ConsistencyError as e:
                    ladder_ok = False
                    self.stderr.write(f"ladder n={n} k={k}: {e}")
                odd_ok = all(
                    verify_odd_moment(random_polynomial(n, 2 * k + 1, rng), k)["ok"]
                    for _ in range(options["samples"])
                )
                identities.append({"n": n, "k": k, "ladder": ladder_ok, "fact1": odd_ok})
                self.write(
                    f"n={n} k={k}: ladder {'ok' if ladder_ok else 'FAILED'},"
                    f" fact1 {'ok' if odd_ok else 'FAILED'}"
                )

        dump_json(
            {"moments": rows, "identities": identities, "seed": options["seed"]},
            output_dir / "moments.json",
        )
        failed = [row["n"] for row in rows if not row["ok"]] + [
            f"{row['n']}/{row['k']}" for row in identities if not (row["ladder"] and row["fact1"])
        ]
        if failed:
            self.fail(f"Moment identities failed for {', '.join(map(str, failed))}")
