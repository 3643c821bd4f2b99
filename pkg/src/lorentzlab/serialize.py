"""Bit-exact serialization helpers: JSON-clean payloads, config echoes,
trajectory CSV, and atomic file writes.

Floats in CSV output carry 17 significant digits, enough to round-trip an
IEEE double, so emitted files are a faithful record of the run.
"""

from __future__ import annotations

import math
import os
import tempfile

import numpy as np

from .diffusion import DiffusionConfig, Trajectory
from .frames import Frame, frame_record

CSV_FLOAT_FORMAT = ".17g"

TRAJECTORY_HEADER = (
    "s,chart,x0,x1,x2,x3,"
    "e00,e01,e02,e03,e10,e11,e12,e13,e20,e21,e22,e23,e30,e31,e32,e33,"
    "defect"
)


def g17(value: float) -> str:
    return format(float(value), CSV_FLOAT_FORMAT)


def to_plain(value):
    """Recursively convert payloads to JSON-clean python types; non-finite
    floats become null so emitted JSON stays strictly parseable."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else None
    return value


def config_echo(cfg: DiffusionConfig, f0: Frame, kernel: str) -> dict:
    """Self-contained record of what a run was configured to do."""
    sp = f0.point.spacetime
    return {
        "spacetime": sp.id,
        "parameters": {k: float(v) for k, v in sp.parameters.items()},
        "kernel": kernel,
        "sigma": cfg.sigma,
        "ds": cfg.ds,
        "s_max": cfg.s_max,
        "coord_bound": cfg.coord_bound,
        "curvature_bound": cfg.curvature_bound,
        "min_step": cfg.resolved_min_step,
        "defect_tol": cfg.defect_tol,
        "seed": cfg.seed,
        "first_trajectory": cfg.trajectory_index,
        "initial_frame": frame_record(f0),
    }


def trajectory_csv(traj: Trajectory) -> str:
    """Render a trajectory in the stable CSV schema: one sample per row,
    a trailing comment line carrying the termination verdict."""
    lines = [TRAJECTORY_HEADER]
    for smp in traj.samples:
        fields = [g17(smp.s), smp.chart]
        fields += [g17(v) for v in smp.coords]
        fields += [g17(v) for v in np.asarray(smp.e).reshape(16)]
        fields.append(g17(smp.defect))
        lines.append(",".join(fields))
    zeta = traj.zeta if traj.zeta is not None else math.nan
    lines.append(f"# termination={traj.termination.label} zeta={g17(zeta)}")
    return "\n".join(lines) + "\n"


def atomic_write_text(path: str, text: str) -> None:
    """Write a file in one shot: temp file in the target directory, fsync,
    rename over the destination."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(
        dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
