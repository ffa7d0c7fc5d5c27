"""Configuration parsing and artifact serialization.

Config files are flat INI-style text: ``[section]`` headers and
``key = value`` lines, with ``#`` or ``;`` comments.  The schema below is
closed -- unknown sections or keys are rejected -- and serialization is
canonical (schema order, 17-significant-digit floats), so parse ->
serialize round-trips are byte-identical.

Outputs are deliberately plain: CSV for series and tables, legacy ASCII
structured-points VTK for fields, and a JSON metadata file per run
recording grid topology, the closed-box corner flag, solver tolerances
and a version string.
"""

from __future__ import annotations

import json
import os
import subprocess
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ParseError, ValidationError
from .grid import Grid, Topology

FLOAT_FMT = "%.17g"

_REQUIRED = object()

# value kinds: int, float, bool, str, ints, floats
SCHEMA = {
    "grid": {
        "topology": ("str", "channel"),
        "nx": ("int", 64),
        "ny": ("int", 64),
        "lx": ("float", 1.0),
        "ly": ("float", 1.0),
    },
    "physics": {
        "nu": ("float", _REQUIRED),
    },
    "time": {
        "dt": ("float", _REQUIRED),
        "t_end": ("float", _REQUIRED),
        "smooth_init": ("bool", False),
    },
    "forcing": {
        "kind": ("str", "none"),
        "fx": ("float", 0.0),
        "fy": ("float", 0.0),
        "amplitude": ("float", 1.0),
    },
    "experiment": {
        "seed": ("int", 0),
        "initial": ("str", "zero"),
        "amplitude": ("float", 1.0),
        "normalize_grad": ("float", 0.0),
        "include_advection": ("bool", True),
        "h_amplitude": ("float", 0.0),
        "div_amplitude": ("float", 0.0),
        "c_list": ("floats", (0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0)),
        "resolutions": ("ints", (16, 24, 32)),
        "dts": ("floats", (0.025, 0.0125, 0.00625, 0.003125)),
        "quantity": ("str", "div_norm_sq"),
        "n_fields": ("int", 100),
    },
}

_CHOICES = {
    "grid.topology": ("channel", "box", "periodic"),
    "forcing.kind": ("none", "constant", "manufactured"),
    "experiment.initial": ("zero", "manufactured", "divergence_mode",
                           "random_smooth", "random_divfree", "stream_bump"),
}


def parse_config(text: str) -> dict:
    """Parse and validate config text into a fully defaulted nested dict.

    Raises ParseError for malformed lines and ValidationError for unknown
    or ill-typed entries.  Keys whose schema default is "required" are
    left absent when not given; command drivers check for them.
    """
    raw: dict = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped[0] in "#;":
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError(lineno, "unterminated section header")
            section = stripped[1:-1].strip()
            if not section:
                raise ParseError(lineno, "empty section name")
            raw.setdefault(section, {})
            continue
        if "=" not in stripped:
            raise ParseError(lineno, f"expected key = value, got {stripped!r}")
        if section is None:
            raise ParseError(lineno, "key outside any [section]")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(lineno, "empty key")
        if key in raw[section]:
            raise ParseError(lineno, f"duplicate key {key!r} in [{section}]")
        raw[section][key] = value
    return validate_config(raw)


def _convert(dotted: str, kind: str, value):
    if not isinstance(value, str):
        return value
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            lowered = value.lower()
            if lowered in ("true", "yes", "1", "on"):
                return True
            if lowered in ("false", "no", "0", "off"):
                return False
            raise ValueError
        if kind == "ints":
            return tuple(int(v) for v in value.split(",") if v.strip())
        if kind == "floats":
            return tuple(float(v) for v in value.split(",") if v.strip())
        return value
    except ValueError:
        raise ValidationError(dotted, f"cannot parse {value!r} as {kind}") from None


def validate_config(raw: dict) -> dict:
    cfg: dict = {}
    for section, entries in raw.items():
        if section not in SCHEMA:
            raise ValidationError(section, "unknown section")
        for key in entries:
            if key not in SCHEMA[section]:
                raise ValidationError(f"{section}.{key}", "unknown key")
    for section, keys in SCHEMA.items():
        cfg[section] = {}
        for key, (kind, default) in keys.items():
            dotted = f"{section}.{key}"
            if section in raw and key in raw[section]:
                value = _convert(dotted, kind, raw[section][key])
            elif default is _REQUIRED:
                continue
            else:
                value = default
            if dotted in _CHOICES and value not in _CHOICES[dotted]:
                raise ValidationError(dotted,
                                      f"must be one of {_CHOICES[dotted]}")
            cfg[section][key] = value
    _check_invariants(cfg)
    return cfg


def _check_invariants(cfg: dict):
    g = cfg["grid"]
    if g["nx"] < 4 or g["ny"] < 4:
        raise ValidationError("grid.nx", "nx and ny must be at least 4")
    if g["lx"] <= 0 or g["ly"] <= 0:
        raise ValidationError("grid.lx", "lx and ly must be positive")
    if "nu" in cfg["physics"] and cfg["physics"]["nu"] <= 0:
        raise ValidationError("physics.nu", "nu must be positive")
    t = cfg["time"]
    if "dt" in t and t["dt"] <= 0:
        raise ValidationError("time.dt", "dt must be positive")
    if "t_end" in t and t["t_end"] <= 0:
        raise ValidationError("time.t_end", "t_end must be positive")
    if "dt" in t and "t_end" in t and t["dt"] > t["t_end"]:
        raise ValidationError("time.dt", "dt must not exceed t_end")


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings on top of a validated config."""
    raw = {s: {k: v for k, v in entries.items()} for s, entries in cfg.items()}
    for item in overrides:
        if "=" not in item:
            raise ValidationError(item, "override must look like section.key=value")
        dotted, _, value = item.partition("=")
        if "." not in dotted:
            raise ValidationError(dotted, "override key must be section.key")
        section, _, key = dotted.strip().partition(".")
        raw.setdefault(section, {})[key.strip()] = value.strip()
    return validate_config(raw)


def _format_value(kind: str, value) -> str:
    if kind == "float":
        return FLOAT_FMT % value
    if kind == "bool":
        return "true" if value else "false"
    if kind == "ints":
        return ",".join(str(v) for v in value)
    if kind == "floats":
        return ",".join(FLOAT_FMT % v for v in value)
    return str(value)


def serialize_config(cfg: dict) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg byte-for-byte."""
    lines = []
    for section, keys in SCHEMA.items():
        present = {k: v for k, v in cfg.get(section, {}).items()}
        if not present:
            continue
        lines.append(f"[{section}]")
        for key, (kind, _) in keys.items():
            if key in present:
                lines.append(f"{key} = {_format_value(kind, present[key])}")
        lines.append("")
    return "\n".join(lines)


def grid_from_config(cfg: dict) -> Grid:
    g = cfg["grid"]
    return Grid(Topology.parse(g["topology"]), g["nx"], g["ny"], g["lx"], g["ly"])


def require(cfg: dict, *dotted_keys):
    for dotted in dotted_keys:
        section, _, key = dotted.partition(".")
        if key not in cfg.get(section, {}):
            raise ValidationError(dotted, "required key missing")


# ---------------------------------------------------------------------------
# writers

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return FLOAT_FMT % float(x)


def write_table_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_series_csv(path, records):
    """Per-step diagnostics as CSV (header row always present)."""
    from .timestepper import CSV_COLUMNS
    rows = [[getattr(r, c) for c in CSV_COLUMNS] for r in records]
    write_table_csv(path, CSV_COLUMNS, rows)


def write_field_csv(path, grid: Grid, named_values: dict):
    names = list(named_values)
    header = ["i", "j", "x", "y"] + names
    xs, ys = grid.x_centers, grid.y_centers
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(grid.nx):
            for j in range(grid.ny):
                row = [str(i), str(j), _fmt(xs[i]), _fmt(ys[j])]
                row += [_fmt(named_values[n][i, j]) for n in names]
                fh.write(",".join(row) + "\n")


def read_field_csv(path) -> dict:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = [line.strip().split(",") for line in fh if line.strip()]
    cols = {name: np.array([row[k] for row in data], dtype=float)
            for k, name in enumerate(header)}
    ni = int(cols["i"].max()) + 1
    nj = int(cols["j"].max()) + 1
    out = {}
    for name in header[4:]:
        arr = np.empty((ni, nj))
        arr[cols["i"].astype(int), cols["j"].astype(int)] = cols[name]
        out[name] = arr
    return out


def write_field_vtk(path, grid: Grid, named_values: dict, title="field dump"):
    """Legacy ASCII structured-points VTK; one SCALARS block per field."""
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {grid.nx} {grid.ny} 1\n")
        fh.write(f"ORIGIN {_fmt(grid.dx / 2)} {_fmt(grid.dy / 2)} 0\n")
        fh.write(f"SPACING {_fmt(grid.dx)} {_fmt(grid.dy)} 1\n")
        fh.write(f"POINT_DATA {grid.size}\n")
        for name, values in named_values.items():
            fh.write(f"SCALARS {name} double 1\n")
            fh.write("LOOKUP_TABLE default\n")
            for j in range(grid.ny):          # x varies fastest in VTK order
                fh.write("\n".join(_fmt(values[i, j]) for i in range(grid.nx)))
                fh.write("\n")


def version_string() -> str:
    here = os.path.dirname(os.path.abspath(__file__))
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                             cwd=here, capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"stokespressure-{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return f"stokespressure-{__version__}"


def write_metadata(outdir, command: str, grid: Grid, seed: int,
                   config_text: str = "", extra: dict | None = None):
    from .elliptic import DEFAULT_TOL, iteration_cap
    meta = {
        "command": command,
        "topology": grid.topology.value,
        "nx": grid.nx, "ny": grid.ny, "lx": grid.lx, "ly": grid.ly,
        "corner_flag": grid.corner_flag,
        "solver_tolerance": DEFAULT_TOL,
        "solver_iteration_cap": iteration_cap(grid),
        "seed": seed,
        "version": version_string(),
        "config": config_text,
    }
    if extra:
        meta.update(extra)
    path = os.path.join(outdir, "metadata.json")
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
