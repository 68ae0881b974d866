import os
import sys

import django

from django.core.management import ManagementUtility


COMMANDS = ("solve", "bounds", "gate", "moments", "jet", "profile", "pohozaev", "report")


def main(argv=None):
    """``yamabelab <command> [options]``: the lab's management commands."""
    argv = list(sys.argv[1:] if argv is None else argv)
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "yamabelab.settings")
    django.setup()

    if not argv or argv[0] in ("-h", "--help", "help"):
        sys.stdout.write("usage: yamabelab {%s} [options]\n" % ",".join(COMMANDS))
        return 0
    if argv[0] not in COMMANDS:
        sys.stderr.write(f"yamabelab: unknown command {argv[0]!r}\n")
        return 2

    utility = ManagementUtility(["yamabelab", *argv])
    try:
        utility.execute()
    except SystemExit as e:
        return e.code or 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
