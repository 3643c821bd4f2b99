"""Scalar functionals on the frame bundle and the fiber Laplacian toolkit.

The fiber over a point, the set of unit timelike directions, carries a
hyperbolic metric; the three boost flows generate it.  This module evaluates
curvature functionals on frames, applies the diffusion generator

    G = H0 + (sigma^2 / 2) * sum_j V_j^2

by finite differences along the geodesic and boost flows, and builds the
Green-function potential

    U(frame) = 2 * integral G(e0, y) Ric(y, y) dvol(y)

over the fiber by product quadrature.  The potential only exists when the
integrand decays; the quadrature refuses (ExpBoundednessError) when the
measured tail keeps growing, rather than returning a truncation-dependent
number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curvature import curvature, curvature_from_chart
from .frames import Frame, FrameError, geodesic_step, vertical_flow
from .geometry import DomainError

TWO_PI = 2.0 * math.pi

# finite-difference steps for generator probes: first derivatives along the
# geodesic flow, second differences along the boost flows, each extrapolated
# once in Richardson fashion
H_GEODESIC = 1e-3
H_VERTICAL = 1e-2


class ExpBoundednessError(RuntimeError):
    """The fiber integrand grows too fast for the Green potential to exist."""


@dataclass(frozen=True)
class FiberFunctional:
    """A named scalar function of a frame.

    Catalog entries depend on the frame only through the base point and the
    e0 column, so they are invariant under rotations of the spatial legs.
    """

    name: str
    fn: Callable[[Frame], float]

    def __call__(self, f: Frame) -> float:
        return float(self.fn(f))


def ric_tilde(f: Frame) -> float:
    """Ricci curvature contracted twice with the frame's time leg."""
    u = f.e[:, 0]
    ric = curvature(f.point).ricci
    return float(np.einsum("ab,a,b->", ric, u, u))


def t_tilde(f: Frame) -> float:
    """Einstein tensor contracted twice with the frame's time leg."""
    u = f.e[:, 0]
    ein = curvature(f.point).einstein
    return float(np.einsum("ab,a,b->", ein, u, u))


def mdot0(f: Frame) -> float:
    """Time component of e0 in the current chart (Lorentz factor in
    Minkowski coordinates)."""
    return float(f.e[0, 0])


RIC_TILDE = FiberFunctional("ric_tilde", ric_tilde)
T_TILDE = FiberFunctional("t_tilde", t_tilde)
MDOT0 = FiberFunctional("mdot0", mdot0)


def user_functional(name: str, fn: Callable[[Frame], float]) -> FiberFunctional:
    return FiberFunctional(name, fn)


# ---------------------------------------------------------------------------
# generator application by flow probes


_BOOST_DIRS = np.eye(3)


def h0_derivative(F, f: Frame, h: float = H_GEODESIC) -> float:
    """Derivative of F along the geodesic flow, central difference with one
    Richardson extrapolation."""

    def diff(t):
        return (F(geodesic_step(f, t)) - F(geodesic_step(f, -t))) / (2.0 * t)

    d_h = diff(h)
    d_h2 = diff(0.5 * h)
    return float((4.0 * d_h2 - d_h) / 3.0)


def vertical_laplacian(F, f: Frame, h: float = H_VERTICAL) -> float:
    """Sum of second derivatives of F along the three boost flows."""
    f0 = F(f)

    def second(j, t):
        b = t * _BOOST_DIRS[j]
        return (F(vertical_flow(f, b)) - 2.0 * f0 + F(vertical_flow(f, -b))) / t**2

    total = 0.0
    for j in range(3):
        s_h = second(j, h)
        s_h2 = second(j, 0.5 * h)
        total += (4.0 * s_h2 - s_h) / 3.0
    return float(total)


def apply_generator(
    F,
    f: Frame,
    sigma: float,
    h: float = H_GEODESIC,
    h_vertical: float = H_VERTICAL,
) -> float:
    """Numerically apply G = H0 + (sigma^2/2) sum_j V_j^2 to F at f."""
    return h0_derivative(F, f, h) + 0.5 * sigma**2 * vertical_laplacian(
        F, f, h_vertical
    )


def _covariant_h0_ric_tilde(f: Frame) -> float:
    """H0 ric_tilde through the covariant derivative of the Ricci tensor,
    a code path independent of the flow probes: along a geodesic,
    d/ds Ric(u,u) = (grad_c Ric_ab) u^c u^a u^b."""
    sp = f.point.spacetime
    chart = sp.chart(f.point.chart)
    x = np.asarray(f.point.coords, dtype=float)
    u = f.e[:, 0]

    gamma = chart.christoffel(x)
    dric = np.zeros((4, 4, 4))
    for c in range(4):
        step = 1e-5 * (1.0 + abs(float(x[c])))
        xp = x.copy()
        xm = x.copy()
        xp[c] += step
        xm[c] -= step
        rp = curvature_from_chart(chart, xp).ricci
        rm = curvature_from_chart(chart, xm).ricci
        dric[c] = (rp - rm) / (2.0 * step)
    ric = curvature_from_chart(chart, x).ricci
    nabla = (
        dric
        - np.einsum("dca,db->cab", gamma, ric)
        - np.einsum("dcb,ad->cab", gamma, ric)
    )
    return float(np.einsum("cab,c,a,b->", nabla, u, u, u))


def lemma9_residual(f: Frame, sigma: float) -> float:
    """Defect of the generator identity for ric_tilde,

        G ric_tilde = H0 ric_tilde + 2 sigma^2 (ric_tilde + t_tilde),

    with the left side from flow probes and the right side's H0 term from
    the covariant-derivative route."""
    lhs = apply_generator(RIC_TILDE, f, sigma)
    rhs = _covariant_h0_ric_tilde(f) + 2.0 * sigma**2 * (ric_tilde(f) + t_tilde(f))
    return abs(lhs - rhs)


def eq51_residual(f: Frame) -> float:
    """Defect of the sigma-free fiber identity

        sum_j V_j^2 ric_tilde = 4 ric_tilde + 4 t_tilde."""
    lhs = vertical_laplacian(RIC_TILDE, f)
    rhs = 4.0 * (ric_tilde(f) + t_tilde(f))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# hyperbolic Green function and the fiber potential


def green_h3(rho):
    """Green function of half the hyperbolic Laplacian on H^3, radial form

        G(rho) = (coth(rho) - 1) / (2 pi) = 1 / (pi * (e^(2 rho) - 1)),

    the solution of G'' + 2 coth(rho) G' = 0 vanishing at infinity with
    2 pi rho G -> 1 at the pole (the Euclidean limit)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("green_h3 requires rho > 0")
    out = 1.0 / (math.pi * np.expm1(2.0 * rho))
    return float(out) if out.ndim == 0 else out


def _icosahedral_nodes() -> np.ndarray:
    """Vertices of a regular icosahedron: a 12-point spherical 5-design, so
    the angular average of any quadratic in the direction is exact."""
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    base = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            base.append((0.0, s1, s2 * phi))
            base.append((s1, s2 * phi, 0.0))
            base.append((s2 * phi, 0.0, s1))
    nodes = np.array(base)
    return nodes / np.linalg.norm(nodes, axis=1, keepdims=True)


_ANG_NODES = _icosahedral_nodes()


def _fiber_integrand(ricci: np.ndarray, f: Frame, rho: np.ndarray) -> np.ndarray:
    """Angular mean of Ric(y, y) over the fiber sphere at each rapidity,
    where y = cosh(rho) e0 + sinh(rho) * direction."""
    e0 = f.e[:, 0]
    spatial = f.e[:, 1:4] @ _ANG_NODES.T  # (4, 12)
    ch, sh = np.cosh(rho), np.sinh(rho)
    y = ch[:, None, None] * e0[None, None, :] + sh[:, None, None] * spatial.T[None, :, :]
    q = np.einsum("ab,rna,rnb->rn", ricci, y, y)
    return q.mean(axis=1)


def _ricci_resolved(f: Frame, ricci: np.ndarray) -> bool:
    """Whether the Ricci tensor at the base point is distinguishable from
    zero given the roundoff of its assembly out of the connection and its
    derivative.  Below that floor the fiber integrand is pure noise that
    the cosh^2 growth of the contraction would masquerade as a tail."""
    sp = f.point.spacetime
    chart = sp.chart(f.point.chart)
    x = np.asarray(f.point.coords, dtype=float)
    gamma = chart.christoffel(x)
    dgamma = chart.christoffel_derivative(x)
    scale = float(np.max(np.abs(dgamma))) + 16.0 * float(np.max(np.abs(gamma))) ** 2
    return float(np.max(np.abs(ricci))) > 64.0 * np.finfo(float).eps * scale


def compute_U(
    f: Frame,
    rho_cut: float = 12.0,
    n_rho: int = 64,
    enforce_tail: bool = True,
) -> float:
    """Green-potential of the Ricci contraction over the fiber,

        U = 2 * integral_0^rho_cut G(rho) [mean_S2 Ric(y,y)] 4 pi sinh^2 rho drho,

    by Gauss-Legendre in rho times the icosahedral angular design.  The
    angular rule is exact for the quadratic integrand, so the value is
    invariant under rotations of the frame's spatial legs.

    A pure-roundoff integrand (Ricci-flat bases) returns exactly 0.  With
    enforce_tail, a tail that fails to decay raises ExpBoundednessError:
    the radial weight G * 4 pi sinh^2 tends to one, so the integral only
    converges when the angular-mean contraction itself dies out."""
    if not (rho_cut > 0.0):
        raise ValueError("rho_cut must be > 0")
    if n_rho < 8:
        raise ValueError("n_rho must be >= 8")
    ricci = curvature(f.point).ricci
    if not _ricci_resolved(f, ricci):
        return 0.0

    nodes, weights = np.polynomial.legendre.leggauss(int(n_rho))
    rho = 0.5 * rho_cut * (nodes + 1.0)
    w = 0.5 * rho_cut * weights

    qbar = _fiber_integrand(ricci, f, rho)
    radial_weight = -np.expm1(-2.0 * rho)  # G * 4 pi sinh^2, exactly
    integrand = radial_weight * qbar

    if enforce_tail:
        tail = rho >= (2.0 / 3.0) * rho_cut
        t_vals = np.abs(integrand[tail])
        t_rho = rho[tail]
        live = t_vals > 1e-300
        if np.any(live):
            coeffs = np.polyfit(t_rho[live], np.log(t_vals[live]), 1)
            slope = float(coeffs[0])
            value_at_cut = math.exp(float(np.polyval(coeffs, rho_cut)))
            if slope >= 0.0:
                raise ExpBoundednessError(
                    f"fiber integrand is not decaying at rho_cut={rho_cut} "
                    f"(fitted tail slope {slope:+.3f}); the Green potential "
                    "diverges"
                )
            tail_estimate = 2.0 * value_at_cut / (-slope)
            if tail_estimate > 1e-8 * max(1.0, float(np.abs(integrand).max())):
                raise ExpBoundednessError(
                    f"truncation tail estimate {tail_estimate:.3e} exceeds "
                    f"tolerance at rho_cut={rho_cut}; raise rho_cut or accept "
                    "divergence"
                )
    return float(2.0 * np.sum(w * integrand))


def u_potential(
    rho_cut: float = 12.0, n_rho: int = 64, enforce_tail: bool = True
) -> FiberFunctional:
    """The Green potential as a catalog functional."""
    return FiberFunctional(
        "u",
        lambda fr: compute_U(fr, rho_cut=rho_cut, n_rho=n_rho, enforce_tail=enforce_tail),
    )


U = u_potential()
RIC_TILDE_PLUS_U = FiberFunctional(
    "ric_tilde_plus_u", lambda fr: ric_tilde(fr) + compute_U(fr)
)

FUNCTIONALS = {
    F.name: F for F in (RIC_TILDE, T_TILDE, U, RIC_TILDE_PLUS_U, MDOT0)
}


def poisson_residual(
    f: Frame,
    h: float = H_VERTICAL,
    rho_cut: float = 12.0,
    n_rho: int = 64,
) -> float:
    """Defect of the fiber Poisson equation

        (1/2) sum_j V_j^2 U = -2 ric_tilde

    with U from compute_U at every vertical probe."""
    F = u_potential(rho_cut=rho_cut, n_rho=n_rho)
    lap = vertical_laplacian(F, f, h)
    return abs(0.5 * lap + 2.0 * ric_tilde(f))
