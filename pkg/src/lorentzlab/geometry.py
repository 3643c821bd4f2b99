"""Lorentzian spacetime catalog and chart machinery.

Conventions used throughout the package:

* Metric signature (+, -, -, -).  Unit timelike vectors satisfy g(u, u) = +1,
  so the fiber of unit timelike directions at a base point is a copy of
  hyperbolic 3-space.
* Christoffel symbols are stored as ``gamma[..., a, b, c] = Gamma^a_{bc}``,
  symmetric in (b, c).
* Coordinate derivatives of the connection are stored as
  ``dgamma[..., a, b, c, e] = d_e Gamma^a_{bc}``.
* All chart callables broadcast over leading axes: ``coords`` may be any
  shape ``(..., 4)`` and outputs gain the matching batch shape.

Every catalog entry supplies closed-form metric, connection and connection
derivative, so the curvature assembled from them (see ``curvature.py``) is
analytic up to roundoff.  The finite-difference oracle never touches these
closed forms; it differentiates ``metric`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

# Transition away from a spherical polar axis triggers below this value of
# sin(theta); the companion chart places the same event near its equator.
POLAR_TRIGGER_SIN = 0.05


class DomainError(ValueError):
    """Coordinates left the validity region of a chart."""


@dataclass(frozen=True, eq=False)
class Chart:
    """One coordinate chart of a catalog spacetime.

    ``metric``, ``christoffel`` and ``christoffel_derivative`` are closed-form
    callables on ``(..., 4)`` coordinate arrays.  ``in_domain`` returns a
    boolean array; ``interior_box`` is a (low, high) pair of coordinate bounds
    that is strictly interior to the domain, used for quasi-random sweeps.
    """

    name: str
    metric: Callable[[np.ndarray], np.ndarray]
    christoffel: Callable[[np.ndarray], np.ndarray]
    christoffel_derivative: Callable[[np.ndarray], np.ndarray]
    in_domain: Callable[[np.ndarray], np.ndarray]
    domain_text: str
    interior_box: tuple[np.ndarray, np.ndarray]
    # Explosion proxy: chart exit region (e.g. r below a floor near r = 0).
    exit_region: Optional[Callable[[np.ndarray], np.ndarray]] = None


@dataclass(frozen=True, eq=False)
class Spacetime:
    """A catalog spacetime: charts plus the scalars shared between them."""

    id: str
    parameters: dict
    charts: dict[str, Chart] = field(repr=False)
    default_chart: str
    kretschmann: Callable[[str, np.ndarray], np.ndarray] = field(repr=False)
    # Returns the target chart name where a transition should fire, else None
    # entries; vectorised as an object/str array is overkill, so the trigger
    # is a boolean array plus a single companion chart name.
    transition_trigger: Optional[Callable[[str, np.ndarray], np.ndarray]] = field(
        default=None, repr=False
    )
    transition_target: Optional[Callable[[str], str]] = field(default=None, repr=False)
    transition_map: Optional[
        Callable[[str, str, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    ] = field(default=None, repr=False)

    def chart(self, name: Optional[str] = None) -> Chart:
        key = self.default_chart if name is None else name
        try:
            return self.charts[key]
        except KeyError:
            raise KeyError(f"spacetime {self.id!r} has no chart {key!r}") from None

    def point(self, coords, chart: Optional[str] = None) -> "SpacetimePoint":
        """Build a validated point; raises DomainError outside the chart."""
        name = self.default_chart if chart is None else chart
        c = np.asarray(coords, dtype=float)
        if c.shape != (4,):
            raise ValueError(f"coords must have shape (4,), got {c.shape}")
        ch = self.chart(name)
        if not bool(ch.in_domain(c)):
            raise DomainError(
                f"coords {c.tolist()} violate chart {name!r} domain: {ch.domain_text}"
            )
        return SpacetimePoint(self, name, c)


@dataclass(frozen=True, eq=False)
class SpacetimePoint:
    """A base-manifold point tagged with the chart it is expressed in."""

    spacetime: Spacetime
    chart: str
    coords: np.ndarray

    @property
    def spacetime_id(self) -> str:
        return self.spacetime.id


# ---------------------------------------------------------------------------
# Minkowski


def _zeros_like_batch(coords, shape):
    coords = np.asarray(coords, dtype=float)
    return np.zeros(coords.shape[:-1] + shape)


def _minkowski_metric(coords):
    coords = np.asarray(coords, dtype=float)
    g = np.zeros(coords.shape[:-1] + (4, 4))
    g[..., 0, 0] = 1.0
    g[..., 1, 1] = -1.0
    g[..., 2, 2] = -1.0
    g[..., 3, 3] = -1.0
    return g


def minkowski() -> Spacetime:
    """Flat spacetime in global Cartesian coordinates (t, x, y, z)."""
    box = (np.array([-5.0, -5.0, -5.0, -5.0]), np.array([5.0, 5.0, 5.0, 5.0]))
    chart = Chart(
        name="cartesian",
        metric=_minkowski_metric,
        christoffel=lambda c: _zeros_like_batch(c, (4, 4, 4)),
        christoffel_derivative=lambda c: _zeros_like_batch(c, (4, 4, 4, 4)),
        in_domain=lambda c: np.all(np.isfinite(np.asarray(c, dtype=float)), axis=-1),
        domain_text="all finite coordinates",
        interior_box=box,
    )
    return Spacetime(
        id="minkowski",
        parameters={},
        charts={"cartesian": chart},
        default_chart="cartesian",
        kretschmann=lambda name, c: np.zeros(np.asarray(c, dtype=float).shape[:-1]),
    )


# ---------------------------------------------------------------------------
# Schwarzschild, ingoing Eddington-Finkelstein chart (v, r, theta, phi)
#
#   ds^2 = (1 - 2M/r) dv^2 - 2 dv dr - r^2 dtheta^2 - r^2 sin^2(theta) dphi^2
#
# The chart is regular across the horizon; the future direction is the one
# with dv/ds > 0 (the ingoing null congruence -d/dr is future oriented).
# A companion chart with a rotated polar axis covers the sin(theta) -> 0
# neighbourhoods.


def _ef_metric(M):
    def metric(coords):
        coords = np.asarray(coords, dtype=float)
        r = coords[..., 1]
        th = coords[..., 2]
        g = np.zeros(coords.shape[:-1] + (4, 4))
        g[..., 0, 0] = 1.0 - 2.0 * M / r
        g[..., 0, 1] = -1.0
        g[..., 1, 0] = -1.0
        g[..., 2, 2] = -r * r
        g[..., 3, 3] = -((r * np.sin(th)) ** 2)
        return g

    return metric


def _ef_christoffel(M):
    def christoffel(coords):
        coords = np.asarray(coords, dtype=float)
        r = coords[..., 1]
        th = coords[..., 2]
        G = np.zeros(coords.shape[:-1] + (4, 4, 4))
        f = 1.0 - 2.0 * M / r
        sin = np.sin(th)
        cos = np.cos(th)
        m_r2 = M / (r * r)
        G[..., 0, 0, 0] = m_r2
        G[..., 0, 2, 2] = -r
        G[..., 0, 3, 3] = -r * sin * sin
        G[..., 1, 0, 0] = m_r2 * f
        G[..., 1, 0, 1] = -m_r2
        G[..., 1, 1, 0] = -m_r2
        G[..., 1, 2, 2] = -(r - 2.0 * M)
        G[..., 1, 3, 3] = -(r - 2.0 * M) * sin * sin
        G[..., 2, 1, 2] = 1.0 / r
        G[..., 2, 2, 1] = 1.0 / r
        G[..., 2, 3, 3] = -sin * cos
        G[..., 3, 1, 3] = 1.0 / r
        G[..., 3, 3, 1] = 1.0 / r
        G[..., 3, 2, 3] = cos / sin
        G[..., 3, 3, 2] = cos / sin
        return G

    return christoffel


def _ef_christoffel_derivative(M):
    def dchristoffel(coords):
        coords = np.asarray(coords, dtype=float)
        r = coords[..., 1]
        th = coords[..., 2]
        D = np.zeros(coords.shape[:-1] + (4, 4, 4, 4))
        sin = np.sin(th)
        cos = np.cos(th)
        sin2th = 2.0 * sin * cos
        m_r3 = M / (r * r * r)
        D[..., 0, 0, 0, 1] = -2.0 * m_r3
        D[..., 0, 2, 2, 1] = -1.0
        D[..., 0, 3, 3, 1] = -sin * sin
        D[..., 0, 3, 3, 2] = -r * sin2th
        D[..., 1, 0, 0, 1] = 2.0 * m_r3 * (3.0 * M / r - 1.0)
        D[..., 1, 0, 1, 1] = 2.0 * m_r3
        D[..., 1, 1, 0, 1] = 2.0 * m_r3
        D[..., 1, 2, 2, 1] = -1.0
        D[..., 1, 3, 3, 1] = -sin * sin
        D[..., 1, 3, 3, 2] = -(r - 2.0 * M) * sin2th
        D[..., 2, 1, 2, 1] = -1.0 / (r * r)
        D[..., 2, 2, 1, 1] = -1.0 / (r * r)
        D[..., 2, 3, 3, 2] = -(cos * cos - sin * sin)
        D[..., 3, 1, 3, 1] = -1.0 / (r * r)
        D[..., 3, 3, 1, 1] = -1.0 / (r * r)
        D[..., 3, 2, 3, 2] = -1.0 / (sin * sin)
        D[..., 3, 3, 2, 2] = -1.0 / (sin * sin)
        return D

    return dchristoffel


def _sphere_dir(th, ph):
    sin = np.sin(th)
    return np.stack([sin * np.cos(ph), sin * np.sin(ph), np.cos(th)], axis=-1)


# Fixed 90 degree rotation about the y axis and its inverse; the companion
# chart's polar axis is the original x axis.
def _rot_fwd(n):
    return np.stack([-n[..., 2], n[..., 1], n[..., 0]], axis=-1)


def _rot_back(n):
    return np.stack([n[..., 2], n[..., 1], -n[..., 0]], axis=-1)


def _angular_transition(coords, vectors, rot):
    """Map (v, r, theta, phi) coordinates and tangent vectors through a fixed
    rotation of the spherical axis.  ``vectors`` has shape (..., 4, k) with
    coordinate components along axis -2; pass k = 1 columns for velocities."""
    coords = np.asarray(coords, dtype=float)
    th = coords[..., 2]
    ph = coords[..., 3]
    sin = np.sin(th)
    cos = np.cos(th)
    n = _sphere_dir(th, ph)
    dn_dth = np.stack([cos * np.cos(ph), cos * np.sin(ph), -sin], axis=-1)
    dn_dph = np.stack([-sin * np.sin(ph), sin * np.cos(ph), np.zeros_like(th)], axis=-1)

    np_ = rot(n)
    dnp_dth = rot(dn_dth)
    dnp_dph = rot(dn_dph)

    z = np.clip(np_[..., 2], -1.0, 1.0)
    th_new = np.arccos(z)
    ph_new = np.arctan2(np_[..., 1], np_[..., 0])
    sin_new = np.sin(th_new)
    sin2_new = np_[..., 0] ** 2 + np_[..., 1] ** 2

    # dtheta' = -dn'_z / sin(theta'); dphi' = (x dy - y dx) / sin^2(theta')
    j_tt = -dnp_dth[..., 2] / sin_new
    j_tp = -dnp_dph[..., 2] / sin_new
    j_pt = (np_[..., 0] * dnp_dth[..., 1] - np_[..., 1] * dnp_dth[..., 0]) / sin2_new
    j_pp = (np_[..., 0] * dnp_dph[..., 1] - np_[..., 1] * dnp_dph[..., 0]) / sin2_new

    new_coords = np.stack([coords[..., 0], coords[..., 1], th_new, ph_new], axis=-1)
    new_vectors = np.array(vectors, dtype=float, copy=True)
    v_th = vectors[..., 2, :]
    v_ph = vectors[..., 3, :]
    new_vectors[..., 2, :] = j_tt[..., None] * v_th + j_tp[..., None] * v_ph
    new_vectors[..., 3, :] = j_pt[..., None] * v_th + j_pp[..., None] * v_ph
    return new_coords, new_vectors


def schwarzschild(M: float = 1.0) -> Spacetime:
    """Schwarzschild exterior and interior in one ingoing null chart.

    The single chart family covers 0 < r without a horizon pathology, which
    is what lets diffusing paths cross r = 2M and be followed down to the
    exit floor near the curvature singularity.
    """
    if M <= 0:
        raise ValueError(f"mass must be positive, got M={M}")
    r_exit = 1e-3 * M

    def in_domain(coords):
        coords = np.asarray(coords, dtype=float)
        r = coords[..., 1]
        th = coords[..., 2]
        finite = np.all(np.isfinite(coords), axis=-1)
        return finite & (r > 0.0) & (th > 0.0) & (th < np.pi)

    def exit_region(coords):
        coords = np.asarray(coords, dtype=float)
        return coords[..., 1] <= r_exit

    def make_chart(name):
        return Chart(
            name=name,
            metric=_ef_metric(M),
            christoffel=_ef_christoffel(M),
            christoffel_derivative=_ef_christoffel_derivative(M),
            in_domain=in_domain,
            domain_text="r > 0 and 0 < theta < pi",
            interior_box=(
                np.array([-5.0, 0.8 * M, 0.35, 0.0]),
                np.array([5.0, 20.0 * M, np.pi - 0.35, 2.0 * np.pi]),
            ),
            exit_region=exit_region,
        )

    charts = {"ef": make_chart("ef"), "ef_rot": make_chart("ef_rot")}

    def kretschmann(name, coords):
        coords = np.asarray(coords, dtype=float)
        r = coords[..., 1]
        return 48.0 * M * M / r**6

    def trigger(name, coords):
        coords = np.asarray(coords, dtype=float)
        return np.sin(coords[..., 2]) < POLAR_TRIGGER_SIN

    def target(name):
        return "ef_rot" if name == "ef" else "ef"

    def tmap(src, dst, coords, vectors):
        if {src, dst} != {"ef", "ef_rot"}:
            raise ValueError(f"no transition between charts {src!r} and {dst!r}")
        rot = _rot_fwd if src == "ef" else _rot_back
        return _angular_transition(coords, vectors, rot)

    return Spacetime(
        id="schwarzschild",
        parameters={"M": float(M)},
        charts=charts,
        default_chart="ef",
        kretschmann=kretschmann,
        transition_trigger=trigger,
        transition_target=target,
        transition_map=tmap,
    )


# ---------------------------------------------------------------------------
# Spatially flat FLRW in comoving Cartesian coordinates (t, x, y, z)
#
#   ds^2 = dt^2 - a(t)^2 (dx^2 + dy^2 + dz^2)
#
# The catalog carries the power-law family a(t) = t^p (p = 2/3 is the
# matter-dominated case) and the exponential slice a(t) = exp(H t).


def _flrw_spacetime(
    sid, parameters, a_fn, a_adot_fn, d_a_adot_fn, hub_fn, d_hub_fn, acc_fn, t_domain, box
):
    t_min, _ = t_domain

    def metric(coords):
        coords = np.asarray(coords, dtype=float)
        t = coords[..., 0]
        a2 = a_fn(t) ** 2
        g = np.zeros(coords.shape[:-1] + (4, 4))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = -a2
        g[..., 2, 2] = -a2
        g[..., 3, 3] = -a2
        return g

    def christoffel(coords):
        coords = np.asarray(coords, dtype=float)
        t = coords[..., 0]
        G = np.zeros(coords.shape[:-1] + (4, 4, 4))
        aad = a_adot_fn(t)
        hub = hub_fn(t)
        for i in (1, 2, 3):
            G[..., 0, i, i] = aad
            G[..., i, 0, i] = hub
            G[..., i, i, 0] = hub
        return G

    def dchristoffel(coords):
        coords = np.asarray(coords, dtype=float)
        t = coords[..., 0]
        D = np.zeros(coords.shape[:-1] + (4, 4, 4, 4))
        d_aad = d_a_adot_fn(t)
        d_hub = d_hub_fn(t)
        for i in (1, 2, 3):
            D[..., 0, i, i, 0] = d_aad
            D[..., i, 0, i, 0] = d_hub
            D[..., i, i, 0, 0] = d_hub
        return D

    def in_domain(coords):
        coords = np.asarray(coords, dtype=float)
        finite = np.all(np.isfinite(coords), axis=-1)
        if t_min is None:
            return finite
        return finite & (coords[..., 0] > t_min)

    def kretschmann(name, coords):
        coords = np.asarray(coords, dtype=float)
        t = coords[..., 0]
        acc = acc_fn(t)
        hub2 = hub_fn(t) ** 2
        return 12.0 * (acc**2 + hub2**2)

    chart = Chart(
        name="cartesian",
        metric=metric,
        christoffel=christoffel,
        christoffel_derivative=dchristoffel,
        in_domain=in_domain,
        domain_text="t > 0" if t_min is not None else "all finite coordinates",
        interior_box=box,
    )
    return Spacetime(
        id=sid,
        parameters=parameters,
        charts={"cartesian": chart},
        default_chart="cartesian",
        kretschmann=kretschmann,
    )


def flrw_power(p: float = 2.0 / 3.0) -> Spacetime:
    """Flat FLRW with a(t) = t^p; p = 2/3 is the matter-dominated universe."""
    if p <= 0:
        raise ValueError(f"expansion exponent must be positive, got p={p}")
    box = (np.array([0.5, -5.0, -5.0, -5.0]), np.array([5.0, 5.0, 5.0, 5.0]))
    return _flrw_spacetime(
        sid="flrw_power",
        parameters={"p": float(p)},
        a_fn=lambda t: t**p,
        a_adot_fn=lambda t: p * t ** (2.0 * p - 1.0),
        d_a_adot_fn=lambda t: p * (2.0 * p - 1.0) * t ** (2.0 * p - 2.0),
        hub_fn=lambda t: p / t,
        d_hub_fn=lambda t: -p / (t * t),
        acc_fn=lambda t: p * (p - 1.0) / (t * t),
        t_domain=(0.0, None),
        box=box,
    )


def de_sitter(H: float = 1.0) -> Spacetime:
    """Flat slicing of de Sitter space, a(t) = exp(H t)."""
    if H <= 0:
        raise ValueError(f"expansion rate must be positive, got H={H}")
    box = (np.array([-2.0, -3.0, -3.0, -3.0]), np.array([2.0, 3.0, 3.0, 3.0]))
    return _flrw_spacetime(
        sid="de_sitter",
        parameters={"H": float(H)},
        a_fn=lambda t: np.exp(H * t),
        a_adot_fn=lambda t: H * np.exp(2.0 * H * t),
        d_a_adot_fn=lambda t: 2.0 * H * H * np.exp(2.0 * H * t),
        hub_fn=lambda t: np.full_like(np.asarray(t, dtype=float), H),
        d_hub_fn=lambda t: np.zeros_like(np.asarray(t, dtype=float)),
        acc_fn=lambda t: np.full_like(np.asarray(t, dtype=float), H * H),
        t_domain=(None, None),
        box=box,
    )


# ---------------------------------------------------------------------------
# User-supplied metric hook


def function_spacetime(
    sid: str,
    metric_fn: Callable[[np.ndarray], np.ndarray],
    in_domain: Callable[[np.ndarray], np.ndarray],
    domain_text: str,
    interior_box: tuple[np.ndarray, np.ndarray],
) -> Spacetime:
    """Wrap a pure metric function into a single-chart spacetime.

    The connection and its derivative fall back to nested central finite
    differences of ``metric_fn`` (same stencils as the curvature oracle), so
    this path trades accuracy for generality.  Catalog members never use it.
    """
    from . import curvature as _curv

    def christoffel(coords):
        _, gamma = _curv.fd_connection(metric_fn, coords)
        return gamma

    def dchristoffel(coords):
        return _curv.fd_connection_derivative(metric_fn, coords)

    chart = Chart(
        name="user",
        metric=metric_fn,
        christoffel=christoffel,
        christoffel_derivative=dchristoffel,
        in_domain=in_domain,
        domain_text=domain_text,
        interior_box=interior_box,
    )

    def kretschmann(name, coords):
        md = _curv.curvature_from_chart(chart, coords)
        return _curv.kretschmann_scalar(md)

    return Spacetime(
        id=sid,
        parameters={},
        charts={"user": chart},
        default_chart="user",
        kretschmann=kretschmann,
    )


# ---------------------------------------------------------------------------
# Catalog registry and module-level point operations

_CATALOG: dict[str, Callable[..., Spacetime]] = {
    "minkowski": minkowski,
    "schwarzschild": schwarzschild,
    "flrw_power": flrw_power,
    "de_sitter": de_sitter,
}


def get_spacetime(sid: str, **params) -> Spacetime:
    """Instantiate a catalog spacetime by id with keyword parameters."""
    try:
        factory = _CATALOG[sid]
    except KeyError:
        known = ", ".join(sorted(_CATALOG))
        raise KeyError(f"unknown spacetime id {sid!r}; catalog has: {known}") from None
    return factory(**params)


def catalog_ids() -> list[str]:
    return sorted(_CATALOG)


def metric(point: SpacetimePoint) -> np.ndarray:
    return point.spacetime.chart(point.chart).metric(point.coords)


def christoffel(point: SpacetimePoint) -> np.ndarray:
    return point.spacetime.chart(point.chart).christoffel(point.coords)


def in_domain(point: SpacetimePoint) -> bool:
    return bool(point.spacetime.chart(point.chart).in_domain(point.coords))


def kretschmann(point: SpacetimePoint) -> float:
    return float(point.spacetime.kretschmann(point.chart, point.coords))


def sample_points(
    spacetime: Spacetime, n: int, seed: int = 0, chart: Optional[str] = None
) -> list[SpacetimePoint]:
    """Quasi-random (Halton) points in the chart's interior sampling box."""
    from scipy.stats import qmc

    ch = spacetime.chart(chart)
    low, high = ch.interior_box
    sampler = qmc.Halton(d=4, scramble=True, seed=seed)
    unit = sampler.random(n)
    coords = low + unit * (high - low)
    return [spacetime.point(c, chart=ch.name) for c in coords]
