"""Orthonormal frames over a spacetime and the two flows that move them.

A frame at a point is a 4x4 matrix ``e`` whose columns are tangent vectors in
chart components, satisfying ``e^T g e = eta`` with eta = diag(1, -1, -1, -1).
Column 0 is the future timelike leg; for every catalog chart the future
orientation functional is simply the 0-th chart component of the vector, so
``e[0, 0] > 0``.  Frames are direct, det(e) > 0.

The horizontal flow transports (x, e) along the geodesic spray of column 0.
The vertical flow acts on the fiber alone through boosts, e -> e B(b), and
leaves the base point fixed.

Everything here broadcasts over leading batch axes: ``x`` is (..., 4), ``e``
is (..., 4, 4) with layout e[..., mu, a] (chart index mu, frame label a).
The kernels avoid matmul reductions whose result could depend on batch
composition; einsum with optimize disabled keeps per-element arithmetic
identical whether a state is stepped alone or inside a larger batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ETA, Chart, Spacetime, SpacetimePoint, sample_points


class FrameError(ValueError):
    """Frame construction or repair failed (degenerate input)."""


@dataclass(frozen=True, eq=False)
class Frame:
    point: SpacetimePoint
    e: np.ndarray  # (4, 4), columns are frame vectors in chart components

    @property
    def e0(self) -> np.ndarray:
        return self.e[:, 0]


# ---------------------------------------------------------------------------
# Algebra: generators of boosts and rotations acting on the frame label index

def _build_boost_generators() -> np.ndarray:
    gens = np.zeros((3, 4, 4))
    for j in range(3):
        gens[j, 0, j + 1] = 1.0
        gens[j, j + 1, 0] = 1.0
    return gens


def _build_rotation_generators() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    eps[0, 1, 2] = eps[1, 2, 0] = eps[2, 0, 1] = 1.0
    eps[0, 2, 1] = eps[1, 0, 2] = eps[2, 1, 0] = -1.0
    gens = np.zeros((3, 4, 4))
    gens[:, 1:4, 1:4] = -eps
    return gens


BOOST_GENERATORS = _build_boost_generators()
ROTATION_GENERATORS = _build_rotation_generators()


def so13_project(x: np.ndarray) -> np.ndarray:
    """Project a matrix onto the Lorentz algebra, X with (eta X) antisymmetric."""
    xt = np.swapaxes(x, -1, -2)
    return 0.5 * (x - np.einsum("ab,...bc,cd->...ad", ETA, xt, ETA))


def so13_split(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Boost vector (3,) and spatial rotation block (3, 3) of an algebra element."""
    return x[..., 0, 1:4], x[..., 1:4, 1:4]


def rotation_block(a: np.ndarray) -> np.ndarray:
    """Embed a spatial 3x3 matrix as a fiber rotation acting trivially on e0."""
    a = np.asarray(a, dtype=float)
    out = np.zeros(a.shape[:-2] + (4, 4))
    out[..., 0, 0] = 1.0
    out[..., 1:4, 1:4] = a
    return out


def boost_matrix(b: np.ndarray) -> np.ndarray:
    """Exponential of a pure boost, B = exp(sum_j b_j E_j), in closed form.

    For rapidity chi = |b|:  B00 = cosh(chi), mixed block (sinh(chi)/chi) b,
    spatial block I + ((cosh(chi) - 1)/chi^2) b b^T, with series fallbacks
    below chi = 1e-4 to avoid 0/0.
    """
    b = np.asarray(b, dtype=float)
    chi2 = np.sum(b * b, axis=-1)
    chi = np.sqrt(chi2)
    small = chi < 1e-4
    chi_safe = np.where(small, 1.0, chi)
    chi2_safe = np.where(small, 1.0, chi2)
    s1 = np.where(
        small,
        1.0 + chi2 / 6.0 + chi2 * chi2 / 120.0,
        np.sinh(chi_safe) / chi_safe,
    )
    s2 = np.where(
        small,
        0.5 + chi2 / 24.0 + chi2 * chi2 / 720.0,
        (np.cosh(chi_safe) - 1.0) / chi2_safe,
    )
    out = np.zeros(b.shape[:-1] + (4, 4))
    out[..., 0, 0] = np.cosh(chi)
    out[..., 0, 1:4] = s1[..., None] * b
    out[..., 1:4, 0] = s1[..., None] * b
    out[..., 1:4, 1:4] = s2[..., None, None] * b[..., :, None] * b[..., None, :]
    for j in range(3):
        out[..., j + 1, j + 1] += 1.0
    return out


# ---------------------------------------------------------------------------
# Orthonormality

def minkowski_inner(g: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...m,...mn,...n->...", u, g, v)


def gram(g: np.ndarray, e: np.ndarray) -> np.ndarray:
    return np.einsum("...ma,...mn,...nb->...ab", e, g, e)


def orthonormality_defect_core(g: np.ndarray, e: np.ndarray) -> np.ndarray:
    diff = gram(g, e) - ETA
    return np.max(np.abs(diff), axis=(-1, -2))


def orthonormality_defect(frame: Frame) -> float:
    g = frame.point.spacetime.chart(frame.point.chart).metric(frame.point.coords)
    return float(orthonormality_defect_core(g, frame.e))


def frame_record(frame: Frame) -> dict:
    """Flat serializable record of a frame: spacetime id, chart, the four
    coordinates, the sixteen matrix entries row-major, and the defect."""
    return {
        "spacetime": frame.point.spacetime.id,
        "chart": frame.point.chart,
        "coords": [float(v) for v in frame.point.coords],
        "e": [float(v) for v in np.asarray(frame.e).reshape(16)],
        "defect": orthonormality_defect(frame),
    }


_GS_SIGNS = (1.0, -1.0, -1.0, -1.0)


def lorentz_gram_schmidt(g: np.ndarray, basis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt in the Minkowski inner product, column 0 first.

    Returns the repaired frame and a boolean validity mask; invalid entries
    (wrong causal character or non-finite input) hold unspecified values.
    Column 0 keeps its direction exactly, later columns are orthogonalised
    against earlier ones, so a near-orthonormal input moves only at the order
    of its defect.
    """
    e = np.asarray(basis, dtype=float)
    out = np.zeros_like(e)
    batch = e.shape[:-2]
    ok = np.ones(batch, dtype=bool)
    with np.errstate(all="ignore"):
        v = e[..., :, 0]
        n2 = minkowski_inner(g, v, v)
        ok = ok & (n2 > 0.0) & np.isfinite(n2)
        out[..., :, 0] = v / np.sqrt(np.where(ok, n2, 1.0))[..., None]
        for a in (1, 2, 3):
            v = e[..., :, a]
            for b_idx in range(a):
                w = out[..., :, b_idx]
                coef = _GS_SIGNS[b_idx] * minkowski_inner(g, w, v)
                v = v - coef[..., None] * w
            n2 = minkowski_inner(g, v, v)
            good = (n2 < 0.0) & np.isfinite(n2)
            ok = ok & good
            out[..., :, a] = v / np.sqrt(np.where(good, -n2, 1.0))[..., None]
    ok = ok & np.all(np.isfinite(out), axis=(-1, -2))
    return out, ok


def reorthonormalize(frame: Frame) -> Frame:
    """Repair a slightly off-orthonormal frame; raises FrameError when the
    input is degenerate or has drifted to the wrong causal type."""
    chart = frame.point.spacetime.chart(frame.point.chart)
    g = chart.metric(frame.point.coords)
    e, ok = lorentz_gram_schmidt(g, frame.e)
    if not bool(ok):
        raise FrameError("frame repair failed: degenerate or non-finite columns")
    if not (e[0, 0] > 0.0):
        raise FrameError("frame repair failed: timelike leg is past directed")
    if not (np.linalg.det(e) > 0.0):
        raise FrameError("frame repair failed: orientation flipped")
    return Frame(frame.point, e)


def coordinate_frame(point: SpacetimePoint) -> Frame:
    """Canonical orthonormal frame at a point, built from the chart basis.

    The timelike seed is the first coordinate direction, replaced by a fixed
    infalling combination when that direction is null or spacelike (as
    happens at and inside a horizon).
    """
    chart = point.spacetime.chart(point.chart)
    g = chart.metric(point.coords)
    seed = np.eye(4)
    u0 = np.array([1.0, 0.0, 0.0, 0.0])
    if minkowski_inner(g, u0, u0) <= 1e-12:
        # Inside a horizon the first coordinate direction degenerates; mix in
        # growing amounts of the spatial directions until a timelike (and
        # future, component 0 positive) combination appears.
        u0 = None
        for scale in 2.0 ** np.arange(0, 48):
            for axis in (1, 2, 3):
                for sign in (-1.0, 1.0):
                    cand = np.array([1.0, 0.0, 0.0, 0.0])
                    cand[axis] = sign * scale
                    if minkowski_inner(g, cand, cand) > 1e-12:
                        u0 = cand
                        break
                if u0 is not None:
                    break
            if u0 is not None:
                break
        if u0 is None:
            raise FrameError("no timelike seed found for coordinate frame")
    seed[:, 0] = u0
    e, ok = lorentz_gram_schmidt(g, seed)
    if not bool(ok):
        raise FrameError("coordinate frame construction failed")
    if np.linalg.det(e) < 0.0:
        e = e.copy()
        e[:, 3] = -e[:, 3]
    if not (e[0, 0] > 0.0):
        raise FrameError("coordinate frame is past directed")
    return Frame(point, e)


# ---------------------------------------------------------------------------
# Vertical (fiber) flow

def apply_boost(e: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("...ma,...ab->...mb", e, boost_matrix(b))


def vertical_flow(frame: Frame, b: np.ndarray) -> Frame:
    """Boost the frame by algebra vector b; the base point does not move."""
    return Frame(frame.point, apply_boost(frame.e, np.asarray(b, dtype=float)))


def apply_rotation(e: np.ndarray, a: np.ndarray) -> np.ndarray:
    return np.einsum("...ma,...ab->...mb", e, rotation_block(a))


# ---------------------------------------------------------------------------
# Horizontal (geodesic) flow

def horizontal_derivative(chart: Chart, x: np.ndarray, e: np.ndarray):
    """Right side of the parallel transport system along column 0:
    dx/ds = e0, de_a/ds = -Gamma(x)(e0, e_a)."""
    gamma = chart.christoffel(x)
    dm = e[..., :, 0]
    de = -np.einsum("...mnl,...n,...la->...ma", gamma, dm, e)
    return dm, de


def rk4_geodesic_core(
    chart: Chart, x: np.ndarray, e: np.ndarray, ds
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """One classical RK4 step of the horizontal system; returns the candidate
    state plus a validity mask (all stage points inside the chart domain and
    every intermediate finite)."""
    ds = np.asarray(ds, dtype=float)
    dsv = ds[..., None]
    dsm = ds[..., None, None]
    with np.errstate(all="ignore"):
        k1m, k1e = horizontal_derivative(chart, x, e)
        x2 = x + 0.5 * dsv * k1m
        e2 = e + 0.5 * dsm * k1e
        ok = chart.in_domain(x2)
        k2m, k2e = horizontal_derivative(chart, x2, e2)
        x3 = x + 0.5 * dsv * k2m
        e3 = e + 0.5 * dsm * k2e
        ok = ok & chart.in_domain(x3)
        k3m, k3e = horizontal_derivative(chart, x3, e3)
        x4 = x + dsv * k3m
        e4 = e + dsm * k3e
        ok = ok & chart.in_domain(x4)
        k4m, k4e = horizontal_derivative(chart, x4, e4)
        xn = x + (dsv / 6.0) * (k1m + 2.0 * k2m + 2.0 * k3m + k4m)
        en = e + (dsm / 6.0) * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
    ok = ok & chart.in_domain(xn)
    ok = ok & np.all(np.isfinite(xn), axis=-1) & np.all(np.isfinite(en), axis=(-1, -2))
    return xn, en, ok


def geodesic_step(frame: Frame, ds: float) -> Frame:
    """Advance a frame one RK4 step along its timelike leg and repair it."""
    sp = frame.point.spacetime
    chart = sp.chart(frame.point.chart)
    xn, en, ok = rk4_geodesic_core(chart, frame.point.coords, frame.e, float(ds))
    if not bool(ok):
        raise FrameError(
            f"geodesic step of size {ds} left the chart domain or produced "
            "non-finite values"
        )
    new_point = SpacetimePoint(sp, frame.point.chart, xn)
    return reorthonormalize(Frame(new_point, en))


# ---------------------------------------------------------------------------
# Chart transitions

def apply_transition(spacetime: Spacetime, chart_from: str, x: np.ndarray, e: np.ndarray):
    """Push coordinates and frame columns into the companion chart."""
    target = spacetime.transition_target(chart_from)
    xn, en = spacetime.transition_map(chart_from, target, x, e)
    return target, xn, en


# ---------------------------------------------------------------------------
# Frame sampling for hypothesis checkers and identity sweeps

def random_rotation(rng: np.random.Generator) -> np.ndarray:
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0.0:
        q[:, 2] = -q[:, 2]
    return q


def random_frame(
    point: SpacetimePoint, rng: np.random.Generator, rho_max: float = 2.0
) -> Frame:
    """Haar-rotated, randomly boosted orthonormal frame at a point."""
    base = coordinate_frame(point)
    e = apply_rotation(base.e, random_rotation(rng))
    rho = rng.uniform(0.0, rho_max)
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    e = apply_boost(e, rho * n)
    g = point.spacetime.chart(point.chart).metric(point.coords)
    e, ok = lorentz_gram_schmidt(g, e)
    if not bool(ok):
        raise FrameError("random frame sampling produced a degenerate frame")
    return Frame(point, e)


def sample_frames(
    spacetime: Spacetime,
    n: int,
    seed: int = 0,
    rho_max: float = 2.0,
    chart: str | None = None,
) -> list[Frame]:
    """Quasi-random base points, each carrying one random frame."""
    points = sample_points(spacetime, n, seed=seed, chart=chart)
    rng = np.random.default_rng(seed + 0x5EED)
    return [random_frame(p, rng, rho_max=rho_max) for p in points]
