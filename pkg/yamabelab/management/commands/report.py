from yamabelab import report as lab_report
from yamabelab.management.base import LabCommand
from yamabelab.serializers import dump_json
from yamabelab.tasks import run_check_task


class Command(LabCommand):
    help = (
        "Run every registered check as a task and write report.json and report.md. "
        "Exits with 1 when a check fails or errors; expected failures do not count."
    )

    config_overrides = (("dim", "dim"), ("seed", "seed"))

    def add_arguments(self, parser):
        parser.add_argument("--dim", type=int, help="Dimension n (default 10).")
        parser.add_argument("--seed", type=int, help="Random seed for jets and samples (default 0).")
        parser.add_argument(
            "--jet", help="Jet JSON file for the jet checks (default: a generated hypothesis jet)."
        )
        parser.add_argument(
            "--check",
            dest="checks",
            action="append",
            choices=list(lab_report.CHECKS),
            help="Run only this check; repeat for several (default: all).",
        )
        parser.add_argument(
            "--environment",
            action="store_true",
            help="Also write environment.txt with package versions (kept out of report.json).",
        )
        self.add_config_argument(parser)
        self.add_output_argument(parser)

    def run_task(self, name, n, seed, jet_path):
        self.write(f"Running {name}...", ending=" ")
        result = run_check_task.enqueue(name, n, seed, jet_path).return_value
        self.write(result["status"])
        return result

    def handle(self, **options):
        config = self.get_config(options)
        n = config.get("dim", 10)
        seed = config.get("seed", 0)
        output_dir = self.get_output_dir(options, config)

        # Tasks run by the immediate backend pick up this context in run_check
        with lab_report.shared_context(n, seed, options["jet"]):
            result = lab_report.build_report(
                n, seed, options["jet"], names=options["checks"], runner=self.run_task
            )
        dump_json(result, output_dir / "report.json")
        markdown = lab_report.report_markdown(result)
        (output_dir / "report.md").write_text(markdown)
        if options["environment"]:
            (output_dir / "environment.txt").write_text(
                str(lab_report.environment_report()) + "\n"
            )

        self.write("")
        self.write(markdown)
        if not result["ok"]:
            failed = [
                check["name"]
                for check in result["checks"]
                if check["status"] in lab_report.FAILING_STATUSES
            ]
            self.fail(f"Report checks failed: {', '.join(failed)}")
