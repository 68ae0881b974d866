import logging

from pathlib import Path

from django.core.exceptions import ImproperlyConfigured
from django.core.management.base import BaseCommand, CommandError

from yamabelab.conf import get_lab_settings
from yamabelab.config import RunConfig, load_config
from yamabelab.exceptions import (
    ConfigError,
    DependencyError,
    PreconditionError,
    YamabeLabError,
)


logger = logging.getLogger("yamabelab.management")

# Exit status for failed checks; precondition and configuration problems use 2
CHECK_FAILED = 1
BAD_INPUT = 2


class LabCommand(BaseCommand):
    """
    Base for the lab's commands: verbosity-aware output, run-config loading
    and the translation of lab errors into exit codes.
    """

    # Flags shared with the run-config file, as (flag dest, config key)
    config_overrides = ()

    def write(self, *args, **kwargs):
        """Helper function that respects verbosity when printing."""
        if self.verbosity > 0:
            self.stdout.write(*args, **kwargs)

    def add_output_argument(self, parser):
        parser.add_argument(
            "--output-dir",
            help="Directory for CSV/JSON output (default: YAMABELAB['OUTPUT_DIR'], "
            "or output_dir from --config).",
        )

    def add_config_argument(self, parser):
        parser.add_argument(
            "--config",
            help="Plain-text run configuration (key = value lines); flags override it.",
        )

    def get_config(self, options):
        if options.get("config"):
            config = load_config(options["config"])
        else:
            config = RunConfig()
        overrides = {
            key: options.get(dest)
            for dest, key in self.config_overrides
            if options.get(dest) is not None
        }
        return config.with_overrides(**overrides)

    def get_output_dir(self, options, config=None):
        output_dir = options.get("output_dir")
        if output_dir is None and config is not None:
            output_dir = config.get("output_dir")
        if output_dir is None:
            output_dir = get_lab_settings()["OUTPUT_DIR"]
        path = Path(output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def execute(self, *args, **options):
        self.verbosity = options.get("verbosity", 1)
        try:
            return super().execute(*args, **options)
        except (PreconditionError, ConfigError, DependencyError, ImproperlyConfigured) as e:
            message = str(e)
            inequality = getattr(e, "inequality", None)
            if inequality:
                message = f"{message} (requires {inequality})"
            missing = getattr(e, "missing", None)
            if missing:
                message = f"{message} (missing: {', '.join(missing)})"
            raise CommandError(message, returncode=BAD_INPUT) from e
        except YamabeLabError as e:
            logger.debug("Command failed with %s", type(e).__name__, exc_info=True)
            raise CommandError(f"{type(e).__name__}: {e}", returncode=CHECK_FAILED) from e

    def fail(self, message):
        raise CommandError(message, returncode=CHECK_FAILED)
