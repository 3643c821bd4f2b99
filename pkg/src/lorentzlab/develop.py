"""Development of timelike paths against their boost controls.

A C^2 unit-speed timelike path, together with an initial orthonormal frame
over its starting point, determines unique real-valued controls h^1, h^2, h^3
such that the frame path solves

    dPsi/ds = H0(Psi) + sum_j V_j(Psi) h^j(s),

i.e. geodesic transport plus vertical boosts with no spatial-rotation
component.  `develop` integrates this controlled system for given controls;
`anti_develop` recovers the controls from a sampled path by lifting it,
measuring the connection defect of the lift, and quotienting out the SO(3)
part with an auxiliary rotation ODE.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicSpline

from .frames import (
    BOOST_GENERATORS,
    Frame,
    FrameError,
    horizontal_derivative,
    lorentz_gram_schmidt,
    so13_project,
    so13_split,
)
from .geometry import SpacetimePoint


class Controls:
    """Boost controls h(s) on a proper-time grid, cubically interpolated.

    The grid must be strictly increasing with at least two nodes; values
    between nodes come from a C^1 (indeed C^2) cubic spline, evaluation
    outside the grid clamps to the endpoints.
    """

    def __init__(self, s: np.ndarray, h: np.ndarray):
        s = np.asarray(s, dtype=float)
        h = np.asarray(h, dtype=float)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("controls need a grid of at least two proper times")
        if np.any(np.diff(s) <= 0.0):
            raise ValueError("control grid must be strictly increasing")
        if h.shape != (s.size, 3):
            raise ValueError(f"control values must have shape ({s.size}, 3)")
        self.s = s
        self.h = h
        self._spline = CubicSpline(s, h, axis=0)

    def __call__(self, s) -> np.ndarray:
        return self._spline(np.clip(s, self.s[0], self.s[-1]))

    @classmethod
    def constant(cls, value, s0: float, s1: float, n: int = 9) -> "Controls":
        grid = np.linspace(s0, s1, n)
        return cls(grid, np.tile(np.asarray(value, dtype=float), (n, 1)))


def _controlled_derivative(chart, controls: Controls, s: float, x, e):
    dm, de = horizontal_derivative(chart, x, e)
    k = np.einsum("j,jab->ab", controls(s), BOOST_GENERATORS)
    return dm, de + e @ k


def _controlled_rk4(chart, controls: Controls, s: float, x, e, ds: float):
    with np.errstate(all="ignore"):
        k1m, k1e = _controlled_derivative(chart, controls, s, x, e)
        x2, e2 = x + 0.5 * ds * k1m, e + 0.5 * ds * k1e
        ok = chart.in_domain(x2)
        k2m, k2e = _controlled_derivative(chart, controls, s + 0.5 * ds, x2, e2)
        x3, e3 = x + 0.5 * ds * k2m, e + 0.5 * ds * k2e
        ok = ok & chart.in_domain(x3)
        k3m, k3e = _controlled_derivative(chart, controls, s + 0.5 * ds, x3, e3)
        x4, e4 = x + ds * k3m, e + ds * k3e
        ok = ok & chart.in_domain(x4)
        k4m, k4e = _controlled_derivative(chart, controls, s + ds, x4, e4)
        xn = x + (ds / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        en = e + (ds / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    ok = ok & chart.in_domain(xn) & np.all(np.isfinite(xn)) & np.all(np.isfinite(en))
    if not bool(ok):
        raise FrameError("controlled transport left the chart domain")
    return xn, en


def develop(controls: Controls, f0: Frame, ds: float) -> list[tuple[float, Frame]]:
    """Integrate the controlled transport ODE; one output frame per grid node.

    The combined horizontal-plus-vertical field is integrated by classical
    RK4 with substeps no longer than ds, and the frame is re-orthonormalized
    after every substep.
    """
    if ds <= 0.0:
        raise ValueError("ds must be positive")
    sp = f0.point.spacetime
    chart_id = f0.point.chart
    chart = sp.chart(chart_id)
    x = np.array(f0.point.coords, dtype=float)
    e = np.array(f0.e, dtype=float)
    grid = controls.s
    out = [(float(grid[0]), Frame(SpacetimePoint(sp, chart_id, x.copy()), e.copy()))]
    for i in range(grid.size - 1):
        span = float(grid[i + 1] - grid[i])
        n_sub = max(1, math.ceil(span / ds - 1e-12))
        dt = span / n_sub
        s = float(grid[i])
        for _ in range(n_sub):
            x, e = _controlled_rk4(chart, controls, s, x, e, dt)
            e, ok = lorentz_gram_schmidt(chart.metric(x), e)
            if not bool(ok):
                raise FrameError("controlled transport degenerated the frame")
            s += dt
        out.append(
            (float(grid[i + 1]), Frame(SpacetimePoint(sp, chart_id, x.copy()), e.copy()))
        )
    return out


def _as_path_arrays(path):
    if isinstance(path, tuple) and len(path) == 3:
        s, x, u = (np.asarray(a, dtype=float) for a in path)
    else:
        rows = list(path)
        s = np.array([r[0] for r in rows], dtype=float)
        x = np.array([r[1] for r in rows], dtype=float)
        u = np.array([r[2] for r in rows], dtype=float)
    if s.ndim != 1 or s.size < 4:
        raise ValueError("need at least four path samples")
    if np.any(np.diff(s) <= 0.0):
        raise ValueError("path samples must have strictly increasing proper time")
    if x.shape != (s.size, 4) or u.shape != (s.size, 4):
        raise ValueError("path points and velocities must be (n, 4) arrays")
    return s, x, u


def anti_develop(path, f0: Frame, unit_speed_tol: float = 1e-6) -> Controls:
    """Recover the boost controls of a sampled unit-speed timelike path.

    `path` is either a tuple of arrays (s, points (n,4), velocities (n,4)) or
    an iterable of (s, point, velocity) samples, all in the chart of f0.
    The lift completes each velocity to a frame by Gram-Schmidt against the
    previous frame (continuity), the connection defect of the lift is read
    off in the Lorentz algebra, and the spatial-rotation component is removed
    by integrating dA/ds = -L(s) A in SO(3) and rotating the boost vector.
    """
    s, x, u = _as_path_arrays(path)
    sp = f0.point.spacetime
    chart = sp.chart(f0.point.chart)

    g = chart.metric(x)
    speed = np.einsum("km,kmn,kn->k", u, g, u)
    worst = float(np.max(np.abs(speed - 1.0)))
    if worst > unit_speed_tol:
        raise FrameError(
            f"path is not unit-speed timelike: max |g(u,u) - 1| = {worst:.3e}"
        )
    if not np.allclose(x[0], f0.point.coords, atol=1e-9):
        raise FrameError("initial frame does not sit over the first path point")
    if np.max(np.abs(u[0] - f0.e[:, 0])) > unit_speed_tol:
        raise FrameError("initial frame's timelike leg does not match the velocity")

    n = s.size
    frames = np.empty((n, 4, 4))
    prev = np.array(f0.e)
    for i in range(n):
        basis = np.array(prev)
        basis[:, 0] = u[i]
        lifted, ok = lorentz_gram_schmidt(g[i], basis)
        if not bool(ok):
            raise FrameError(f"path lift degenerated at sample {i}")
        frames[i] = lifted
        prev = lifted

    de_dt = CubicSpline(s, frames, axis=0)(s, nu=1)
    _, de_h = horizontal_derivative(chart, x, frames)
    defect = np.linalg.solve(frames, de_dt - de_h)
    defect = so13_project(defect)
    boost, rot = so13_split(defect)

    # remove the rotation component: A' = -L(s) A, then h = A^T b
    rot_spline = CubicSpline(s, rot, axis=0)
    a = np.empty((n, 3, 3))
    a[0] = np.eye(3)
    for i in range(n - 1):
        dt = s[i + 1] - s[i]
        t0 = s[i]
        k1 = -rot_spline(t0) @ a[i]
        k2 = -rot_spline(t0 + 0.5 * dt) @ (a[i] + 0.5 * dt * k1)
        k3 = -rot_spline(t0 + 0.5 * dt) @ (a[i] + 0.5 * dt * k2)
        k4 = -rot_spline(t0 + dt) @ (a[i] + dt * k3)
        nxt = a[i] + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        w, _, vt = np.linalg.svd(nxt)
        a[i + 1] = w @ vt

    h = np.einsum("kji,kj->ki", a, boost)
    return Controls(s, h)
