import argparse
import os

import django

from django.core.management import call_command


def main():
    parser = argparse.ArgumentParser(description="Run the yamabelab test suite.")
    parser.add_argument(
        "labels",
        nargs="*",
        help="Test labels to run, e.g. yamabelab.tests.test_gate (default: all).",
    )
    parser.add_argument(
        "--parallel",
        type=int,
        default=1,
        help="Number of test processes (default 1).",
    )

    args = parser.parse_args()

    os.environ["DJANGO_SETTINGS_MODULE"] = "yamabelab.test.settings"

    django.setup()

    call_command("test", *args.labels, parallel=args.parallel)


if __name__ == "__main__":
    main()
