"""Curvature assembly and the finite-difference cross-check oracle.

Curvature convention:

    R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
                + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}

with Ricci the (a, c) contraction, ricci_{bd} = R^a_{bad}.  The sign is fixed
so that a matter-dominated expanding universe has ricci(u, u) >= 0 for unit
timelike u.  The Einstein tensor uses geometric units with the coupling
absorbed, T_{ab} = ricci_{ab} - (scalar/2) g_{ab}.

Two independent routes produce the same data:

* ``curvature`` uses the chart's closed-form connection and connection
  derivative.
* ``curvature_oracle`` differentiates the chart's metric callable twice with
  nested central differences and never touches the closed-form connection.

All helpers broadcast over leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Chart, SpacetimePoint


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """Metric and curvature tensors at one point (or a batch of points)."""

    metric: np.ndarray
    metric_inv: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray  # R^a_{bcd}
    ricci: np.ndarray
    scalar: np.ndarray
    einstein: np.ndarray

    @property
    def energy_momentum(self) -> np.ndarray:
        return self.einstein


def riemann_from_connection(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """Assemble R^a_{bcd} from Gamma^a_{bc} and d_e Gamma^a_{bc}."""
    t1 = np.einsum("...adbc->...abcd", dgamma)
    t2 = np.einsum("...acbd->...abcd", dgamma)
    q1 = np.einsum("...ace,...edb->...abcd", gamma, gamma)
    q2 = np.einsum("...ade,...ecb->...abcd", gamma, gamma)
    return t1 - t2 + q1 - q2


def curvature_from_fields(g: np.ndarray, gamma: np.ndarray, dgamma: np.ndarray) -> CurvatureData:
    ginv = np.linalg.inv(g)
    riem = riemann_from_connection(gamma, dgamma)
    ric = np.einsum("...abad->...bd", riem)
    scal = np.einsum("...bd,...bd->...", ginv, ric)
    einstein = ric - 0.5 * scal[..., None, None] * g
    return CurvatureData(
        metric=g,
        metric_inv=ginv,
        christoffel=gamma,
        riemann=riem,
        ricci=ric,
        scalar=scal,
        einstein=einstein,
    )


def curvature_from_chart(chart: Chart, coords: np.ndarray) -> CurvatureData:
    coords = np.asarray(coords, dtype=float)
    g = chart.metric(coords)
    gamma = chart.christoffel(coords)
    dgamma = chart.christoffel_derivative(coords)
    return curvature_from_fields(g, gamma, dgamma)


def curvature(point: SpacetimePoint) -> CurvatureData:
    """Closed-form curvature data at a validated point."""
    return curvature_from_chart(point.spacetime.chart(point.chart), point.coords)


def kretschmann_scalar(data: CurvatureData) -> np.ndarray:
    """Full contraction R_{abcd} R^{abcd}."""
    g = data.metric
    ginv = data.metric_inv
    r_low = np.einsum("...ae,...ebcd->...abcd", g, data.riemann)
    r_up = np.einsum(
        "...bf,...cg,...dh,...afgh->...abcd", ginv, ginv, ginv, data.riemann
    )
    return np.einsum("...abcd,...abcd->...", r_low, r_up)


# ---------------------------------------------------------------------------
# Finite-difference oracle (uses the metric callable only)

_FD_SCALE = 1e-5


def _fd_steps(coords: np.ndarray) -> np.ndarray:
    return _FD_SCALE * (1.0 + np.abs(coords))


def fd_metric_derivative(metric_fn, coords: np.ndarray) -> np.ndarray:
    """dg[..., i, j, e] = d_e g_{ij} by central differences."""
    coords = np.asarray(coords, dtype=float)
    h = _fd_steps(coords)
    dg = np.zeros(coords.shape[:-1] + (4, 4, 4))
    for e in range(4):
        dx = np.zeros_like(coords)
        dx[..., e] = h[..., e]
        dg[..., e] = (metric_fn(coords + dx) - metric_fn(coords - dx)) / (
            2.0 * h[..., e, None, None]
        )
    return dg


def fd_connection(metric_fn, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Metric and Levi-Civita connection from the metric callable alone."""
    coords = np.asarray(coords, dtype=float)
    g = metric_fn(coords)
    ginv = np.linalg.inv(g)
    dg = fd_metric_derivative(metric_fn, coords)
    a1 = np.einsum("...ad,...dcb->...abc", ginv, dg)
    a2 = np.einsum("...ad,...dbc->...abc", ginv, dg)
    a3 = np.einsum("...ad,...bcd->...abc", ginv, dg)
    return g, 0.5 * (a1 + a2 - a3)


def _fd_connection_difference(metric_fn, coords, step):
    """Central difference of the finite-difference connection, outer step
    ``step[..., e]`` along each coordinate; returns dgamma[..., a, b, c, e]."""
    dgamma = np.zeros(coords.shape[:-1] + (4, 4, 4, 4))
    for e in range(4):
        dx = np.zeros_like(coords)
        dx[..., e] = step[..., e]
        _, gp = fd_connection(metric_fn, coords + dx)
        _, gm = fd_connection(metric_fn, coords - dx)
        dgamma[..., e] = (gp - gm) / (2.0 * step[..., e, None, None, None])
    return dgamma


def fd_connection_derivative(metric_fn, coords: np.ndarray) -> np.ndarray:
    """Outer derivative of the inner-FD connection, Richardson extrapolated.

    The outer step scales like the square root of the inner one, which keeps
    the subtraction noise of the inner stencil from dominating; the two-step
    Richardson combination removes the leading outer truncation term.
    """
    coords = np.asarray(coords, dtype=float)
    big = np.sqrt(_fd_steps(coords))
    d_big = _fd_connection_difference(metric_fn, coords, big)
    d_half = _fd_connection_difference(metric_fn, coords, 0.5 * big)
    return (4.0 * d_half - d_big) / 3.0


def curvature_oracle(point: SpacetimePoint) -> CurvatureData:
    """Curvature data recomputed from the metric callable by differencing.

    Independent of the closed-form connection; used to cross-check every
    catalog entry.
    """
    chart = point.spacetime.chart(point.chart)
    coords = np.asarray(point.coords, dtype=float)
    g, gamma = fd_connection(chart.metric, coords)
    dgamma = fd_connection_derivative(chart.metric, coords)
    return curvature_from_fields(g, gamma, dgamma)


# ---------------------------------------------------------------------------
# Pointwise energy condition probe


@dataclass(frozen=True, eq=False)
class EnergyConditionReport:
    """Sampled extrema of T(u, u) and ricci(u, u) over unit timelike u."""

    weak_min: float
    weak_argmin: np.ndarray
    strong_min: float
    strong_argmin: np.ndarray
    ric_tilde_min: float
    ric_tilde_max: float
    n_samples: int
    rho_max: float

    def to_dict(self) -> dict:
        return {
            "weak_min": self.weak_min,
            "weak_argmin": [float(v) for v in self.weak_argmin],
            "strong_min": self.strong_min,
            "strong_argmin": [float(v) for v in self.strong_argmin],
            "ric_tilde_min": self.ric_tilde_min,
            "ric_tilde_max": self.ric_tilde_max,
            "n_samples": self.n_samples,
            "rho_max": self.rho_max,
        }


def energy_condition_report(
    point: SpacetimePoint, n_samples: int = 256, rho_max: float = 5.0, seed: int = 0
) -> EnergyConditionReport:
    """Scan unit timelike directions at a point for energy condition failures.

    Directions are built from an orthonormal frame as cosh(rho) e0 plus
    sinh(rho) times a uniform spatial unit vector, with rho uniform on
    [0, rho_max].  Extrema over the scan (including rho = 0) are reported;
    the minimising vectors for the two energy conditions are given in chart
    components.  ``strong_min`` and ``ric_tilde_min`` coincide by definition,
    both are kept so reports state the Ricci range explicitly.
    """
    from .frames import coordinate_frame

    data = curvature(point)
    frame = coordinate_frame(point)
    rng = np.random.default_rng(seed)
    rho = rng.uniform(0.0, rho_max, size=n_samples)
    rho[0] = 0.0
    vec = rng.normal(size=(n_samples, 3))
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    u = (
        np.cosh(rho)[:, None] * frame.e[:, 0]
        + np.sinh(rho)[:, None] * (vec @ frame.e[:, 1:4].T)
    )
    weak = np.einsum("mn,km,kn->k", data.einstein, u, u)
    strong = np.einsum("mn,km,kn->k", data.ricci, u, u)
    iw = int(np.argmin(weak))
    ist = int(np.argmin(strong))
    return EnergyConditionReport(
        weak_min=float(weak[iw]),
        weak_argmin=u[iw],
        strong_min=float(strong[ist]),
        strong_argmin=u[ist],
        ric_tilde_min=float(strong[ist]),
        ric_tilde_max=float(strong.max()),
        n_samples=n_samples,
        rho_max=rho_max,
    )
