"""
File formats: radial profiles as CSV, product-grid fields as CSV plus a JSON
sidecar, jets and profiles as JSON. Floats are written with ``repr`` so
identical inputs give byte-identical files.
"""

import csv
import json

from pathlib import Path

import numpy as np

from yamabelab.curvature import CurvatureJet
from yamabelab.exceptions import ConfigError
from yamabelab.profile import ProfileApprox, SampledSolution
from yamabelab.radial import RadialFunction
from yamabelab.sphere import SphericalPolynomial
from yamabelab.utils import to_builtin


RADIAL_HEADER = ["r", "value", "inner_exponent", "outer_exponent"]
GRID_HEADER = ["r", "theta_index", "value"]


def _optional(value):
    return "" if value is None else repr(float(value))


def _sidecar_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".json")


def dump_json(data, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        json.dump(to_builtin(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_radial_csv(radial, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    inner, outer = _optional(radial.inner_exponent), _optional(radial.outer_exponent)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RADIAL_HEADER)
        for r, value in zip(radial.grid, radial.values, strict=True):
            writer.writerow([repr(float(r)), repr(float(value)), inner, outer])
    return path


def read_radial_csv(path, name=None):
    """Read a radial CSV; the exponent columns are optional (plain ``r,value`` works)."""
    path = Path(path)
    grid, values = [], []
    inner = outer = None
    with path.open(newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"r", "value"} <= set(reader.fieldnames):
            raise ConfigError(f"{path} needs at least the columns r,value", key="rhs")
        for line, row in enumerate(reader, start=2):
            try:
                grid.append(float(row["r"]))
                values.append(float(row["value"]))
            except (TypeError, ValueError) as e:
                raise ConfigError(f"{path}: unparsable row ({e})", line=line) from e
            if line == 2:
                inner = float(row["inner_exponent"]) if row.get("inner_exponent") else None
                outer = float(row["outer_exponent"]) if row.get("outer_exponent") else None
    return RadialFunction(
        np.array(grid), np.array(values), inner, outer, name=name or path.stem
    )


def write_sampled_csv(sampled, path):
    """CSV ``r,theta_index,value`` with the directions and description in a sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(GRID_HEADER)
        for i, r in enumerate(sampled.radii):
            for j in range(len(sampled.directions)):
                writer.writerow([repr(float(r)), j, repr(float(sampled.values[i, j]))])
    dump_json(
        {
            "description": sampled.description,
            "M": sampled.M,
            "directions": sampled.directions,
        },
        _sidecar_path(path),
    )
    return path


def read_sampled_csv(path):
    path = Path(path)
    sidecar = json.loads(_sidecar_path(path).read_text())
    directions = np.array(sidecar["directions"], dtype=float)
    rows = {}
    with path.open(newline="") as f:
        for line, row in enumerate(csv.DictReader(f), start=2):
            try:
                rows[(float(row["r"]), int(row["theta_index"]))] = float(row["value"])
            except (KeyError, TypeError, ValueError) as e:
                raise ConfigError(f"{path}: unparsable row ({e})", line=line) from e
    radii = np.array(sorted({r for r, _ in rows}))
    values = np.array([[rows[r, j] for j in range(len(directions))] for r in radii])
    return SampledSolution(
        radii, directions, values, description="loaded", M=sidecar.get("M")
    )


def jet_to_json(jet):
    return {
        "n": jet.n,
        "metadata": jet.metadata,
        "rm0": jet.rm0.tolist(),
        "rm1": jet.rm1.tolist(),
        "rm2": jet.rm2.tolist(),
        "scalar_blocks": {
            str(degree): block.to_json() for degree, block in sorted(jet.scalar_blocks.items())
        },
    }


def jet_from_json(data):
    if isinstance(data, str):
        data = json.loads(data)
    blocks = {
        int(degree): SphericalPolynomial.from_json(block)
        for degree, block in data.get("scalar_blocks", {}).items()
    }
    return CurvatureJet(
        int(data["n"]),
        np.array(data["rm0"], dtype=float),
        np.array(data["rm1"], dtype=float),
        np.array(data["rm2"], dtype=float),
        blocks,
        dict(data.get("metadata", {})),
    )


def write_jet(jet, path):
    return dump_json(jet_to_json(jet), path)


def read_jet(path):
    path = Path(path)
    try:
        return jet_from_json(path.read_text())
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"Cannot read jet file {path}: {e}", key="jet") from e


def write_profile(profile, path):
    """Profile JSON next to f2.csv and f3.csv, which it references by name."""
    path = Path(path)
    f2_path = write_radial_csv(profile.v2_radial, path.with_name("f2.csv"))
    f3_path = write_radial_csv(profile.v3_radial, path.with_name("f3.csv"))
    return dump_json(
        {
            "n": profile.n,
            "M": profile.M,
            "v2_angular": profile.v2_angular.to_json(),
            "v3_angular": profile.v3_angular.to_json(),
            "v3_eigen_angular": profile.v3_eigen_angular.to_json(),
            "f2": f2_path.name,
            "f3": f3_path.name,
        },
        path,
    )


def read_profile(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text())
        return ProfileApprox(
            n=int(data["n"]),
            M=float(data["M"]),
            v2_angular=SphericalPolynomial.from_json(data["v2_angular"]),
            v2_radial=read_radial_csv(path.with_name(data["f2"]), name="f2"),
            v3_angular=SphericalPolynomial.from_json(data["v3_angular"]),
            v3_radial=read_radial_csv(path.with_name(data["f3"]), name="f3"),
            v3_eigen_angular=SphericalPolynomial.from_json(data["v3_eigen_angular"]),
        )
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise ConfigError(f"Cannot read profile file {path}: {e}", key="profile") from e
