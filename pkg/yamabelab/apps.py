import copy

from django.apps import AppConfig
from django.conf import settings
from django.core.checks import Error, Tags, Warning, register

from yamabelab.utils import deep_update


DEFAULT_LAB_SETTINGS = {
    "GRID": {
        "R_MIN": 1e-4,
        "R_MAX": 1e4,
        "POINTS_PER_DECADE": 256,
    },
    "SOLVER": {
        "TOLERANCE": 1e-2,
        "NONNEGATIVITY_TOLERANCE": 1e-10,
        "VIOLATION_FACTOR": 10,
        "SLOPE_TOLERANCE": 1e-2,
    },
    "QUADRATURE": {
        "EPSREL": 1e-12,
        "NODE_CAP": 2**16,
    },
    "LAMBDA_WINDOW": 0.05,
    "DELTA_OF_EPSILON": {"0.1": 0.02},
    "MAX_HARMONIC_DEGREE": 8,
    "CONSTRAINT_TOLERANCE": 1e-12,
    "CONSISTENCY_TOLERANCE": 1e-10,
    "PROFILE": {
        "EPSILON": 1.0,
        "DIRECTIONS": 12,
        "SEED": 0,
        "REFINEMENT_TOLERANCE": 1e-3,
    },
    "POHOZAEV": {
        "RADIAL_NODES": 4097,
        "REFINEMENT_TOLERANCE": 1e-8,
    },
    "REPORT": {
        "DIMENSIONS": [10, 11],
        "HYPOTHESIS_JETS": 200,
        "LADDER_SAMPLES": 100,
        "ODD_MOMENT_SAMPLES": 100,
        "LAMBDAS": [0.99, 1.0, 1.01],
        "PROFILE_HEIGHTS": [1e3, 1e4],
        "PROFILE_POINTS_PER_DECADE": [128, 256],
        "PROFILE_SPREAD_LIMIT": 1.3,
    },
    "OUTPUT_DIR": "yamabelab-output",
}


class YamabeLabAppConfig(AppConfig):
    name = "yamabelab"
    label = "yamabelab"
    verbose_name = "Yamabe blow-up laboratory"
    setting_name = "YAMABELAB"
    closure_setting_name = "YAMABELAB_CLOSURES"

    def get_lab_settings(self):
        lab_settings = copy.deepcopy(DEFAULT_LAB_SETTINGS)
        return deep_update(
            lab_settings, copy.deepcopy(getattr(settings, self.setting_name, {}))
        )

    def get_closure_config(self):
        closures = copy.deepcopy(getattr(settings, self.closure_setting_name, {}))

        # Make sure the default closure is always defined
        closures.setdefault(
            "default",
            {
                "CLOSURE": "yamabelab.closures.robin",
            },
        )
        closures.setdefault(
            "dirichlet",
            {
                "CLOSURE": "yamabelab.closures.dirichlet",
                "EXTEND_DECADES": 3,
            },
        )

        return closures

    @register(Tags.compatibility)
    def check_lab_settings(app_configs, **kwargs):
        from yamabelab.conf import get_app_config

        lab_settings = get_app_config().get_lab_settings()
        errors = []

        if lab_settings["GRID"]["POINTS_PER_DECADE"] < 64:
            errors.append(
                Warning(
                    "YAMABELAB['GRID']['POINTS_PER_DECADE'] is below 64; shipped tolerances assume a finer grid.",
                    hint="Use at least 64 points per decade, 256 is the default.",
                    id="yamabelab.W001",
                    obj=YamabeLabAppConfig,
                )
            )

        if lab_settings["MAX_HARMONIC_DEGREE"] > 8:
            errors.append(
                Warning(
                    "YAMABELAB['MAX_HARMONIC_DEGREE'] is above 8; exact decompositions get expensive quickly.",
                    hint="Degree 8 covers every block squared up to degree 4.",
                    id="yamabelab.W002",
                    obj=YamabeLabAppConfig,
                )
            )

        tolerances = {
            "SOLVER.TOLERANCE": lab_settings["SOLVER"]["TOLERANCE"],
            "SOLVER.NONNEGATIVITY_TOLERANCE": lab_settings["SOLVER"][
                "NONNEGATIVITY_TOLERANCE"
            ],
            "QUADRATURE.EPSREL": lab_settings["QUADRATURE"]["EPSREL"],
            "CONSTRAINT_TOLERANCE": lab_settings["CONSTRAINT_TOLERANCE"],
            "CONSISTENCY_TOLERANCE": lab_settings["CONSISTENCY_TOLERANCE"],
        }
        for name, value in tolerances.items():
            if not value > 0:
                errors.append(
                    Error(
                        f"YAMABELAB tolerance {name} must be positive (got {value!r}).",
                        id="yamabelab.E001",
                        obj=YamabeLabAppConfig,
                    )
                )

        for name in ("HYPOTHESIS_JETS", "LADDER_SAMPLES", "ODD_MOMENT_SAMPLES"):
            value = lab_settings["REPORT"][name]
            if not isinstance(value, int) or value < 0:
                errors.append(
                    Error(
                        f"YAMABELAB['REPORT']['{name}'] must be a non-negative integer (got {value!r}).",
                        id="yamabelab.E002",
                        obj=YamabeLabAppConfig,
                    )
                )

        return errors
