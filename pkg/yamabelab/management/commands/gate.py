import csv

from fractions import Fraction

from yamabelab.curvature import dimension_gate_table
from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json


class Command(LabCommand):
    help = (
        "Print the dimension-gate table (n, lhs, rhs, margin, holds) in exact "
        "arithmetic and write gate.csv and gate.json."
    )

    def add_arguments(self, parser):
        parser.add_argument("--from", dest="n_from", type=int, default=10, help="First n (default 10).")
        parser.add_argument("--to", dest="n_to", type=int, default=25, help="Last n (default 25).")
        parser.add_argument(
            "--epsilon",
            type=Fraction,
            default=Fraction(0),
            help="Non-negative epsilon, as a decimal or a fraction such as 1/100 (default 0).",
        )
        self.add_output_argument(parser)

    def handle(self, **options):
        epsilon = options["epsilon"]
        rows = dimension_gate_table(options["n_from"], options["n_to"], epsilon)
        output_dir = self.get_output_dir(options)

        self.write(f"{'n':>4} {'lhs':>14} {'rhs':>14} {'margin':>14} holds")
        for row in rows:
            self.write(
                f"{row['n']:>4} {float(row['lhs']):>14.6e} {float(row['rhs']):>14.6e}"
                f" {float(row['margin']):>14.6e} {'yes' if row['holds'] else 'no'}"
            )

        with (output_dir / "gate.csv").open("w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["n", "lhs", "rhs", "margin", "margin_exact", "holds"])
            for row in rows:
                writer.writerow(
                    [
                        row["n"],
                        repr(float(row["lhs"])),
                        repr(float(row["rhs"])),
                        repr(float(row["margin"])),
                        str(row["margin"]),
                        str(row["holds"]).lower(),
                    ]
                )
        dump_json(
            {
                "epsilon": str(epsilon),
                "rows": [dict(row, margin_exact=str(row["margin"])) for row in rows],
            },
            output_dir / "gate.json",
        )
