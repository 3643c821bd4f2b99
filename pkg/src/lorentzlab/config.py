"""Run configuration: a strict TOML schema validated against the catalog.

Sections are [spacetime], [frame], [diffusion], [experiment], [output].
Unknown keys anywhere are rejected, every numeric field is range-checked,
and all diagnostics name the offending section and key so a bad config
fails loudly before any computation starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .diffusion import DiffusionConfig
from .fiber import FUNCTIONALS
from .frames import (
    Frame,
    FrameError,
    coordinate_frame,
    orthonormality_defect,
    reorthonormalize,
    vertical_flow,
)
from .geometry import DomainError, Spacetime, catalog_ids, get_spacetime

COMMANDS = ("simulate", "estimate", "check", "verify", "tube", "moments")
THEOREMS = ("lemma7", "lemma11", "thm8", "thm12")
PRESETS = ("coordinate", "static-observer", "comoving", "explicit")
IDENTITIES = ("oracle", "lemma9", "eq51", "poisson", "green")

# spacetimes whose coordinate time is the proper time of comoving observers
_COMOVING_IDS = ("minkowski", "de_sitter", "flrw_power")

_SPACETIME_PARAMS = {
    "minkowski": (),
    "schwarzschild": ("M",),
    "de_sitter": ("H",),
    "flrw_power": ("p",),
}


class ConfigError(ValueError):
    """Invalid run configuration; the message names section and key."""


@dataclass(frozen=True)
class RunConfig:
    """One fully validated run: where to start, how to integrate, what
    experiment to perform, and where to write the results."""

    command: str
    spacetime: Spacetime
    frame: Frame
    diffusion: DiffusionConfig
    experiment: dict
    output: dict


def _check_keys(section: str, table: dict, allowed) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise ConfigError(
            f"[{section}] unknown key {unknown[0]!r}; allowed keys: "
            + ", ".join(sorted(allowed))
        )


def _number(section: str, table: dict, key: str, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key} must be a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"[{section}] {key} must be finite, got {value!r}")
    return float(value)


def _integer(section: str, table: dict, key: str, default=None, required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"[{section}] {key} must be an integer, got {value!r}")
    return int(value)


def _string(section: str, table: dict, key: str, default=None, required=False,
            choices=None):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    value = table[key]
    if not isinstance(value, str):
        raise ConfigError(f"[{section}] {key} must be a string, got {value!r}")
    if choices is not None and value not in choices:
        raise ConfigError(
            f"[{section}] {key} must be one of {', '.join(choices)}; got {value!r}"
        )
    return value


def _float_list(section: str, table: dict, key: str, length=None, default=None,
                required=False):
    if key not in table:
        if required:
            raise ConfigError(f"[{section}] missing required key {key!r}")
        return default
    value = table[key]
    if not isinstance(value, list) or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
    ):
        raise ConfigError(f"[{section}] {key} must be a list of numbers")
    out = [float(v) for v in value]
    if any(not math.isfinite(v) for v in out):
        raise ConfigError(f"[{section}] {key} entries must be finite")
    if length is not None and len(out) != length:
        raise ConfigError(
            f"[{section}] {key} must have {length} entries, got {len(out)}"
        )
    return out


def _build_spacetime(table: dict) -> Spacetime:
    sid = _string("spacetime", table, "id", required=True, choices=catalog_ids())
    allowed = ("id",) + _SPACETIME_PARAMS[sid]
    _check_keys("spacetime", table, allowed)
    params = {}
    for key in _SPACETIME_PARAMS[sid]:
        value = _number("spacetime", table, key)
        if value is not None:
            params[key] = value
    try:
        return get_spacetime(sid, **params)
    except ValueError as exc:
        raise ConfigError(f"[spacetime] {exc}") from exc


def _build_frame(spacetime: Spacetime, table: dict) -> Frame:
    _check_keys("frame", table, ("coords", "chart", "preset", "matrix", "boost"))
    coords = _float_list("frame", table, "coords", length=4, required=True)
    chart = _string("frame", table, "chart")
    if chart is not None and chart not in spacetime.charts:
        raise ConfigError(
            f"[frame] chart {chart!r} not in spacetime charts: "
            + ", ".join(spacetime.charts)
        )
    preset = _string("frame", table, "preset", default="coordinate", choices=PRESETS)
    try:
        point = spacetime.point(coords, chart=chart)
    except (DomainError, ValueError) as exc:
        raise ConfigError(f"[frame] coords rejected: {exc}") from exc

    if preset == "explicit":
        matrix = _float_list("frame", table, "matrix", length=16, required=True)
        frame = Frame(point, np.array(matrix, dtype=float).reshape(4, 4))
        defect = orthonormality_defect(frame)
        if not defect < 1e-6:
            raise ConfigError(
                f"[frame] matrix is not an orthonormal frame (defect {defect:.3g})"
            )
        try:
            frame = reorthonormalize(frame)
        except FrameError as exc:
            raise ConfigError(f"[frame] matrix rejected: {exc}") from exc
    else:
        if "matrix" in table:
            raise ConfigError(
                "[frame] matrix is only accepted with preset = 'explicit'"
            )
        if preset == "static-observer":
            g00 = spacetime.chart(point.chart).metric(point.coords)[0, 0]
            if not g00 > 0.0:
                raise ConfigError(
                    "[frame] static-observer preset needs a timelike "
                    f"coordinate-time direction; g00 = {g00:.6g} here"
                )
        if preset == "comoving" and spacetime.id not in _COMOVING_IDS:
            raise ConfigError(
                "[frame] comoving preset applies to "
                + ", ".join(_COMOVING_IDS)
                + f"; got {spacetime.id}"
            )
        try:
            frame = coordinate_frame(point)
        except FrameError as exc:
            raise ConfigError(f"[frame] no orthonormal frame here: {exc}") from exc

    boost = _float_list("frame", table, "boost", length=3)
    if boost is not None:
        frame = vertical_flow(frame, boost)
    return frame


def _build_diffusion(table: dict, seed_override: Optional[int]) -> DiffusionConfig:
    allowed = (
        "sigma", "ds", "s_max", "coord_bound", "curvature_bound", "min_step",
        "defect_tol", "seed", "output_stride", "trajectory_index",
    )
    _check_keys("diffusion", table, allowed)
    kwargs = {
        "sigma": _number("diffusion", table, "sigma", required=True),
        "ds": _number("diffusion", table, "ds", required=True),
        "s_max": _number("diffusion", table, "s_max", required=True),
    }
    for key in ("coord_bound", "curvature_bound", "min_step", "defect_tol"):
        value = _number("diffusion", table, key)
        if value is not None:
            kwargs[key] = value
    for key in ("output_stride", "trajectory_index"):
        value = _integer("diffusion", table, key)
        if value is not None:
            kwargs[key] = value
    seed = _integer("diffusion", table, "seed", default=0)
    if seed_override is not None:
        seed = seed_override
    if not 0 <= seed < 2**64:
        raise ConfigError(f"[diffusion] seed must be a u64, got {seed}")
    kwargs["seed"] = seed
    try:
        return DiffusionConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"[diffusion] {exc}") from exc


def _positive_count(section, table, key, default=None, required=False):
    value = _integer(section, table, key, default=default, required=required)
    if value is not None and value < 1:
        raise ConfigError(f"[{section}] {key} must be >= 1, got {value}")
    return value


def _build_experiment(command: str, table: dict, diffusion: DiffusionConfig,
                      threads_override: Optional[int]) -> dict:
    exp: dict = {}
    if command == "simulate":
        _check_keys("experiment", table, ())
    elif command == "estimate":
        _check_keys("experiment", table, ("n_paths", "workers", "kernel"))
        exp["n_paths"] = _positive_count("experiment", table, "n_paths",
                                         required=True)
        exp["workers"] = _positive_count("experiment", table, "workers", default=1)
        exp["kernel"] = _string("experiment", table, "kernel",
                                choices=("strang", "flat"))
    elif command == "moments":
        _check_keys("experiment", table,
                    ("n_paths", "workers", "kernel", "times", "functional"))
        exp["n_paths"] = _positive_count("experiment", table, "n_paths",
                                         required=True)
        exp["workers"] = _positive_count("experiment", table, "workers", default=1)
        exp["kernel"] = _string("experiment", table, "kernel",
                                choices=("strang", "flat"))
        times = _float_list("experiment", table, "times", required=True)
        if not times:
            raise ConfigError("[experiment] times must be non-empty")
        if any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0.0:
            raise ConfigError(
                "[experiment] times must be non-negative and increasing"
            )
        if times[-1] > diffusion.s_max:
            raise ConfigError(
                f"[experiment] times reach {times[-1]} beyond s_max="
                f"{diffusion.s_max}"
            )
        exp["times"] = times
        exp["functional"] = _string(
            "experiment", table, "functional", required=True,
            choices=tuple(sorted(FUNCTIONALS)),
        )
    elif command == "tube":
        _check_keys("experiment", table, ("n_paths", "workers", "radius", "length"))
        exp["n_paths"] = _positive_count("experiment", table, "n_paths",
                                         required=True)
        exp["workers"] = _positive_count("experiment", table, "workers", default=1)
        radius = _number("experiment", table, "radius", required=True)
        length = _number("experiment", table, "length", required=True)
        if not radius > 0.0:
            raise ConfigError(f"[experiment] radius must be > 0, got {radius}")
        if not length > 0.0:
            raise ConfigError(f"[experiment] length must be > 0, got {length}")
        exp["radius"] = radius
        exp["length"] = length
    elif command == "check":
        _check_keys("experiment", table, (
            "theorem", "C", "c", "c_prime", "alpha", "functional",
            "functional_f", "functional_h", "n_frames", "rho_max",
            "rho_cut", "n_rho", "atol",
        ))
        theorem = _string("experiment", table, "theorem", required=True)
        if theorem not in THEOREMS:
            raise ConfigError(
                f"[experiment] unknown theorem {theorem!r}; expected one of "
                + ", ".join(THEOREMS)
            )
        exp["theorem"] = theorem
        names = tuple(sorted(FUNCTIONALS))
        if theorem == "lemma7":
            exp["C"] = _number("experiment", table, "C", required=True)
            exp["functional"] = _string("experiment", table, "functional",
                                        required=True, choices=names)
        elif theorem == "lemma11":
            exp["c"] = _number("experiment", table, "c", required=True)
            exp["c_prime"] = _number("experiment", table, "c_prime", required=True)
            exp["functional_f"] = _string("experiment", table, "functional_f",
                                          required=True, choices=names)
            exp["functional_h"] = _string("experiment", table, "functional_h",
                                          required=True, choices=names)
        elif theorem == "thm8":
            exp["C"] = _number("experiment", table, "C", required=True)
        else:
            exp["alpha"] = _number("experiment", table, "alpha", required=True)
            exp["c"] = _number("experiment", table, "c", required=True)
            exp["c_prime"] = _number("experiment", table, "c_prime", required=True)
            exp["rho_cut"] = _number("experiment", table, "rho_cut", default=12.0)
            exp["n_rho"] = _positive_count("experiment", table, "n_rho", default=64)
        exp["n_frames"] = _positive_count("experiment", table, "n_frames",
                                          default=12)
        exp["rho_max"] = _number("experiment", table, "rho_max", default=2.0)
        exp["atol"] = _number("experiment", table, "atol", default=1e-10)
        if not exp["rho_max"] > 0.0:
            raise ConfigError(
                f"[experiment] rho_max must be > 0, got {exp['rho_max']}"
            )
    elif command == "verify":
        _check_keys("experiment", table, (
            "spacetimes", "identities", "n_points", "n_frames", "rho_max",
            "tol_oracle", "tol_lemma9", "tol_eq51", "tol_poisson", "tol_green",
        ))
        spacetimes = table.get("spacetimes", catalog_ids())
        if (not isinstance(spacetimes, list) or not spacetimes
                or any(not isinstance(s, str) for s in spacetimes)):
            raise ConfigError(
                "[experiment] spacetimes must be a non-empty list of ids"
            )
        for sid in spacetimes:
            if sid not in catalog_ids():
                raise ConfigError(
                    f"[experiment] unknown spacetime id {sid!r} in sweep"
                )
        identities = table.get("identities", list(IDENTITIES))
        if not isinstance(identities, list) or not identities:
            raise ConfigError("[experiment] identities must be a non-empty list")
        for ident in identities:
            if ident not in IDENTITIES:
                raise ConfigError(
                    f"[experiment] unknown identity {ident!r}; expected subset "
                    "of " + ", ".join(IDENTITIES)
                )
        exp["spacetimes"] = list(spacetimes)
        exp["identities"] = list(identities)
        exp["n_points"] = _positive_count("experiment", table, "n_points",
                                          default=30)
        exp["n_frames"] = _positive_count("experiment", table, "n_frames",
                                          default=12)
        exp["rho_max"] = _number("experiment", table, "rho_max", default=2.0)
        tolerances = {}
        for ident, default in (("oracle", 1e-5), ("lemma9", 1e-4),
                               ("eq51", 1e-4), ("poisson", 1e-5),
                               ("green", 1e-8)):
            tol = _number("experiment", table, f"tol_{ident}", default=default)
            if tol < 0.0:
                raise ConfigError(
                    f"[experiment] tol_{ident} must be >= 0, got {tol}"
                )
            tolerances[ident] = tol
        exp["tolerances"] = tolerances
    else:
        raise ConfigError(f"unknown command {command!r}")

    if threads_override is not None and "workers" in exp:
        if threads_override < 1:
            raise ConfigError(f"--threads must be >= 1, got {threads_override}")
        exp["workers"] = threads_override
    return exp


_OUTPUT_DEFAULTS = {
    "simulate": {"trajectory": "trajectory.csv", "summary": "summary.json"},
    "estimate": {"report": "report.json"},
    "check": {"report": "report.json"},
    "verify": {"report": "report.json"},
    "tube": {"report": "report.json"},
    "moments": {"report": "report.json", "curve": "moments.csv"},
}


def _build_output(command: str, table: dict, out_override: Optional[str]) -> dict:
    defaults = _OUTPUT_DEFAULTS[command]
    _check_keys("output", table, ("directory",) + tuple(defaults))
    out = {"directory": _string("output", table, "directory", default=".")}
    for key, default in defaults.items():
        out[key] = _string("output", table, key, default=default)
    if out_override is not None:
        out["directory"] = out_override
    return out


def parse_config(
    text: str,
    command: str,
    seed_override: Optional[int] = None,
    threads_override: Optional[int] = None,
    out_override: Optional[str] = None,
    theorem_override: Optional[str] = None,
) -> RunConfig:
    """Validate a TOML document for one command and build the run objects."""
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; expected one of " + ", ".join(COMMANDS)
        )
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"not valid TOML: {exc}") from exc

    _check_keys("config", data,
                ("spacetime", "frame", "diffusion", "experiment", "output"))
    for section in ("spacetime", "frame", "diffusion"):
        if section not in data:
            raise ConfigError(f"missing required section [{section}]")
        if not isinstance(data[section], dict):
            raise ConfigError(f"[{section}] must be a table")
    for section in ("experiment", "output"):
        if section in data and not isinstance(data[section], dict):
            raise ConfigError(f"[{section}] must be a table")

    spacetime = _build_spacetime(data["spacetime"])
    frame = _build_frame(spacetime, data["frame"])
    diffusion = _build_diffusion(data["diffusion"], seed_override)
    experiment_table = dict(data.get("experiment", {}))
    if theorem_override is not None:
        if command != "check":
            raise ConfigError("theorem override only applies to 'check'")
        experiment_table["theorem"] = theorem_override
    experiment = _build_experiment(
        command, experiment_table, diffusion, threads_override
    )
    output = _build_output(command, data.get("output", {}), out_override)
    return RunConfig(
        command=command,
        spacetime=spacetime,
        frame=frame,
        diffusion=diffusion,
        experiment=experiment,
        output=output,
    )


def load_config(path: str, command: str, **overrides) -> RunConfig:
    try:
        with open(path, "r") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config(text, command, **overrides)
