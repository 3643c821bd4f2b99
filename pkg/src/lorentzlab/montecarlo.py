"""Ensemble experiments on the frame-bundle diffusion.

Four drivers share one batching harness: explosion-probability estimation,
exponential moment curves, first-hitting statistics, and the tube-exit
experiment. Every driver inherits the addressed-noise contract of the
integrator, so each report is a pure function of (seed, config, n_paths)
and comes out byte-identical no matter how the trajectory range is split
across workers: chunks are contiguous index ranges and all reductions run
in trajectory-index order.

Explosion probabilities are always the finite-horizon quantity
P(zeta <= s_max), a lower bound on P(zeta < infinity); since explosion mass
can concentrate at arbitrarily small times, reports keep the individual
explosion times so the horizon can be swept after the fact instead of
re-running the ensemble.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .diffusion import DiffusionConfig, Observer, SnapshotObserver, run_ensemble
from .fiber import FiberFunctional
from .frames import Frame
from .geometry import SpacetimePoint
from .serialize import config_echo as _config_echo
from .serialize import to_plain as _plain

# two-sided 95% standard normal quantile
Z95 = 1.959963984540054

# grid resolution for sampling the tube's core path and frame field
_TUBE_GRID = 257

_ETA_DIAG = np.array([1.0, -1.0, -1.0, -1.0])


class TubeWidthError(ValueError):
    """The requested tube radius exceeds the sampled injectivity scale of
    the exponential-map chart around the core path."""


def wilson_interval(n_success: int, n_total: int, z: float = Z95) -> tuple:
    """Wilson score interval for a binomial proportion.

    Unlike the normal approximation it stays inside [0, 1] and gives a
    nonzero upper limit at zero successes, which is what a no-explosions
    ensemble needs to report.
    """
    k = int(n_success)
    n = int(n_total)
    if n < 1:
        raise ValueError(f"n_total must be >= 1, got {n_total}")
    if not 0 <= k <= n:
        raise ValueError(f"n_success must lie in [0, {n}], got {n_success}")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
    # the boundary cases are exact and must not be left to roundoff
    low = 0.0 if k == 0 else max(0.0, center - half)
    high = 1.0 if k == n else min(1.0, center + half)
    return (low, high)


def _pick_kernel(f0: Frame, kernel: Optional[str]) -> str:
    if kernel is not None:
        return kernel
    return "flat" if f0.point.spacetime.id == "minkowski" else "strang"


def _chunks(n: int, workers: int) -> list:
    w = max(1, min(int(workers), int(n)))
    base, extra = divmod(int(n), w)
    out, start = [], 0
    for i in range(w):
        count = base + (1 if i < extra else 0)
        out.append((start, count))
        start += count
    return out


def _run_batches(cfg, f0, n_paths, workers, kernel, observer_factory):
    """Run contiguous trajectory chunks, one observer set per chunk, and
    return (EnsembleResult, observers) pairs in chunk order."""
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")

    def run(span):
        start, count = span
        obs = observer_factory()
        res = run_ensemble(
            cfg,
            f0,
            count,
            observers=obs,
            first_index=cfg.trajectory_index + start,
            kernel=kernel,
        )
        return res, obs

    spans = _chunks(n_paths, workers)
    if len(spans) == 1:
        return [run(spans[0])]
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        return list(pool.map(run, spans))


# ---------------------------------------------------------------------------
# explosion probability


@dataclass(frozen=True)
class ExplosionReport:
    """Finite-horizon explosion statistics for one ensemble."""

    n_paths: int
    n_exploded: int
    zeta_samples: list
    p_hat: float
    ci_low: float
    ci_high: float
    s_max: float
    config: dict
    note: str = (
        "P(zeta <= s_max) lower-bounds the explosion probability; "
        "explosion mass can sit at arbitrarily small times, so sweep the "
        "horizon with p_hat_at rather than trusting a single s_max."
    )

    def __post_init__(self):
        if self.n_exploded != len(self.zeta_samples):
            raise ValueError("n_exploded must equal len(zeta_samples)")
        if not 0.0 <= self.p_hat <= 1.0:
            raise ValueError(f"p_hat out of range: {self.p_hat}")
        if not self.ci_low <= self.p_hat <= self.ci_high:
            raise ValueError("confidence interval must bracket p_hat")

    @property
    def n_completed(self) -> int:
        return self.n_paths - self.n_exploded

    def p_hat_at(self, s: float) -> float:
        """Fraction of paths that exploded by proper time s (saturates at
        p_hat for s >= s_max)."""
        return sum(1 for z in self.zeta_samples if z <= s) / self.n_paths

    def to_dict(self) -> dict:
        return _plain(
            {
                "kind": "explosion_report",
                "n_paths": self.n_paths,
                "n_exploded": self.n_exploded,
                "n_completed": self.n_completed,
                "zeta_samples": self.zeta_samples,
                "p_hat": self.p_hat,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
                "s_max": self.s_max,
                "config": self.config,
                "note": self.note,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def estimate_explosion(
    cfg: DiffusionConfig,
    f0: Frame,
    n_paths: int,
    workers: int = 1,
    kernel: Optional[str] = None,
) -> ExplosionReport:
    """Estimate P(zeta <= s_max) over n_paths independent diffusions.

    Paths are numbered cfg.trajectory_index onward and the report is
    deterministic in (cfg, f0, n_paths) regardless of workers.
    """
    kernel = _pick_kernel(f0, kernel)
    batches = _run_batches(cfg, f0, n_paths, workers, kernel, tuple)
    code = np.concatenate([res.verdict_code for res, _ in batches])
    zeta = np.concatenate([res.zeta for res, _ in batches])
    n_exploded = int(np.sum(code > 0))
    low, high = wilson_interval(n_exploded, n_paths)
    return ExplosionReport(
        n_paths=int(n_paths),
        n_exploded=n_exploded,
        zeta_samples=[float(z) for z in zeta[code > 0]],
        p_hat=n_exploded / n_paths,
        ci_low=low,
        ci_high=high,
        s_max=cfg.s_max,
        config=_config_echo(cfg, f0, kernel),
    )


# ---------------------------------------------------------------------------
# exponential moment curves


@dataclass(frozen=True)
class MomentCurve:
    """Monte Carlo mean of a fiber functional along the diffusion.

    Means and standard errors are taken over the paths still alive at each
    time; paths terminated earlier are counted in the censoring column and
    never imputed.
    """

    functional: str
    times: list
    means: list
    std_errors: list
    n_alive: list
    n_paths: int
    config: dict

    def __post_init__(self):
        k = len(self.times)
        if not (len(self.means) == len(self.std_errors) == len(self.n_alive) == k):
            raise ValueError("times, means, std_errors, n_alive must align")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be increasing")

    @property
    def censored(self) -> list:
        return [self.n_paths - a for a in self.n_alive]

    def to_dict(self) -> dict:
        return _plain(
            {
                "kind": "moment_curve",
                "functional": self.functional,
                "times": self.times,
                "means": self.means,
                "std_errors": self.std_errors,
                "n_alive": self.n_alive,
                "censored": self.censored,
                "n_paths": self.n_paths,
                "config": self.config,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        lines = ["t,mean,se,n_alive"]
        for t, m, se, a in zip(self.times, self.means, self.std_errors, self.n_alive):
            lines.append(f"{t:.17g},{m:.17g},{se:.17g},{a:d}")
        return "\n".join(lines) + "\n"


def exponential_moment(
    F: FiberFunctional,
    cfg: DiffusionConfig,
    f0: Frame,
    n_paths: int,
    times,
    workers: int = 1,
    kernel: Optional[str] = None,
) -> MomentCurve:
    """Estimate t -> E[F(Phi_t)] on a grid of proper times.

    times must be increasing and lie in [0, s_max]. Snapshots are taken at
    the first committed step reaching each target, so fixed-step runs land
    on the grid exactly.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("times must be non-empty")
    if float(times.max()) > cfg.s_max:
        raise ValueError(
            f"times reach {times.max()} beyond the budget s_max={cfg.s_max}"
        )
    kernel = _pick_kernel(f0, kernel)
    sp = f0.point.spacetime
    batches = _run_batches(
        cfg, f0, n_paths, workers, kernel, lambda: (SnapshotObserver(times),)
    )
    snaps = [obs[0] for _, obs in batches]
    x = np.concatenate([o.x for o in snaps], axis=1)
    e = np.concatenate([o.e for o in snaps], axis=1)
    chart = np.concatenate([o.chart for o in snaps], axis=1)
    taken = np.concatenate([o.taken for o in snaps], axis=1)
    chart_names = snaps[0].chart_names

    means, ses, alive = [], [], []
    for j in range(times.size):
        rows = np.flatnonzero(taken[j])
        vals = np.empty(rows.size)
        for out_i, i in enumerate(rows):
            point = SpacetimePoint(sp, chart_names[chart[j, i]], x[j, i].copy())
            vals[out_i] = F(Frame(point, e[j, i].copy()))
        n_j = rows.size
        if n_j == 0:
            means.append(math.nan)
            ses.append(math.nan)
        else:
            means.append(float(np.mean(vals)))
            if n_j == 1:
                ses.append(math.nan)
            else:
                ses.append(float(np.std(vals, ddof=1) / math.sqrt(n_j)))
        alive.append(n_j)

    return MomentCurve(
        functional=F.name,
        times=[float(t) for t in times],
        means=means,
        std_errors=ses,
        n_alive=alive,
        n_paths=int(n_paths),
        config=_config_echo(cfg, f0, kernel),
    )


# ---------------------------------------------------------------------------
# first-hitting statistics


@dataclass(frozen=True)
class Region:
    """Named coordinate region; the predicate maps a (k, 4) block of chart
    coordinates to a boolean mask. A region scoped to one chart never
    matches points held in other charts."""

    name: str
    predicate: Callable
    chart: Optional[str] = None

    def __post_init__(self):
        if not self.name:
            raise ValueError("region name must be non-empty")
        if not callable(self.predicate):
            raise TypeError("region predicate must be callable")


class _RegionObserver(Observer):
    """First proper time at which a path's coordinates enter the region,
    checked at every committed step regardless of output stride."""

    def __init__(self, region: Region):
        self.region = region
        self.hit_s: Optional[np.ndarray] = None

    def _mask(self, x, chart_names, chart_idx):
        inside = np.asarray(self.region.predicate(x), dtype=bool)
        if self.region.chart is not None:
            if self.region.chart not in chart_names:
                raise ValueError(
                    f"region chart {self.region.chart!r} not in {chart_names}"
                )
            pos = chart_names.index(self.region.chart)
            inside = inside & (chart_idx == pos)
        return inside

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        self.hit_s = np.full(n, np.nan)
        inside = self._mask(x, list(chart_names), chart_idx)
        self.hit_s[inside] = 0.0

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        fresh = idx[np.isnan(self.hit_s[idx])]
        if fresh.size:
            inside = self._mask(x[fresh], list(chart_names), chart_idx[fresh])
            self.hit_s[fresh[inside]] = s[fresh[inside]]


_QUANTILE_PROBS = (0.1, 0.25, 0.5, 0.75, 0.9)


@dataclass(frozen=True)
class HittingReport:
    """First-hitting statistics for one named region.

    A path that hits and later explodes counts as a hit, so the three
    outcome counters partition the ensemble.
    """

    n_paths: int
    n_hit: int
    n_exploded: int
    n_completed: int
    p_hit: float
    ci_low: float
    ci_high: float
    region: str
    quantiles: Optional[dict]
    hit_samples: list
    s_max: float
    config: dict

    def __post_init__(self):
        if self.n_hit + self.n_exploded + self.n_completed != self.n_paths:
            raise ValueError("outcome counters must partition n_paths")
        if self.n_hit != len(self.hit_samples):
            raise ValueError("n_hit must equal len(hit_samples)")

    def to_dict(self) -> dict:
        return _plain(
            {
                "kind": "hitting_report",
                "n_paths": self.n_paths,
                "n_hit": self.n_hit,
                "n_exploded": self.n_exploded,
                "n_completed": self.n_completed,
                "p_hit": self.p_hit,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
                "region": self.region,
                "quantiles": self.quantiles,
                "hit_samples": self.hit_samples,
                "s_max": self.s_max,
                "config": self.config,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def hitting_stats(
    cfg: DiffusionConfig,
    f0: Frame,
    n_paths: int,
    region: Region,
    workers: int = 1,
    kernel: Optional[str] = None,
) -> HittingReport:
    """First-hitting probability and hitting-time quantiles for a region.

    Detection is at sample resolution: a path hits when a committed step
    lands inside the region, with no sub-step root finding.
    """
    if not isinstance(region, Region):
        raise TypeError("region must be a Region (a named predicate)")
    kernel = _pick_kernel(f0, kernel)
    batches = _run_batches(
        cfg, f0, n_paths, workers, kernel, lambda: (_RegionObserver(region),)
    )
    code = np.concatenate([res.verdict_code for res, _ in batches])
    hit_s = np.concatenate([obs[0].hit_s for _, obs in batches])

    hit = np.isfinite(hit_s)
    n_hit = int(np.sum(hit))
    n_exploded = int(np.sum((code > 0) & ~hit))
    n_completed = int(np.sum((code == 0) & ~hit))
    low, high = wilson_interval(n_hit, n_paths)

    samples = hit_s[hit]
    if n_hit:
        quantiles = {"min": float(samples.min()), "max": float(samples.max())}
        for p, q in zip(_QUANTILE_PROBS, np.quantile(samples, _QUANTILE_PROBS)):
            quantiles[f"q{int(round(100 * p))}"] = float(q)
    else:
        quantiles = None

    return HittingReport(
        n_paths=int(n_paths),
        n_hit=n_hit,
        n_exploded=n_exploded,
        n_completed=n_completed,
        p_hit=n_hit / n_paths,
        ci_low=low,
        ci_high=high,
        region=region.name,
        quantiles=quantiles,
        hit_samples=[float(v) for v in samples],
        s_max=cfg.s_max,
        config=_config_echo(cfg, f0, kernel),
    )


# ---------------------------------------------------------------------------
# tube-exit experiment


@dataclass(frozen=True)
class FramedPath:
    """Unit-speed timelike path with an adapted orthonormal frame field on
    [0, length], given as proper time -> Frame with e0 the velocity."""

    frame_at: Callable
    length: float
    name: str = "path"

    def __post_init__(self):
        if not self.length > 0.0:
            raise ValueError(f"path length must be > 0, got {self.length}")
        if not callable(self.frame_at):
            raise TypeError("frame_at must be callable")


def geodesic_path(f0: Frame, length: float, name: str = "geodesic") -> FramedPath:
    """Straight worldline through f0 with the parallel frame field."""
    if f0.point.spacetime.id != "minkowski":
        raise ValueError("geodesic_path builds flat-space paths only")
    sp = f0.point.spacetime
    chart = f0.point.chart
    x0 = np.array(f0.point.coords, dtype=float)
    e0 = np.array(f0.e, dtype=float)

    def frame_at(s: float) -> Frame:
        return Frame(SpacetimePoint(sp, chart, x0 + s * e0[:, 0]), e0)

    return FramedPath(frame_at=frame_at, length=float(length), name=name)


class _TubeObserver(Observer):
    """Classify each path's first tube exit at sample resolution.

    The core path is sampled on a fixed grid; the longitudinal coordinate
    of a point p is found from the sign change of s -> <p - gamma(s), e0(s)>
    (monotone within the chart's injectivity range) and the lateral radius
    from the transverse frame legs at that foot point.
    """

    INSIDE, FAR, LATERAL, NEAR = 0, 1, 2, 3

    def __init__(self, grid_s, centers, w_time, w_lat, radius, length):
        self.grid_s = grid_s
        self.centers = centers
        self.w_time = w_time
        self.w_lat = w_lat
        self.radius = float(radius)
        self.length = float(length)
        self.status: Optional[np.ndarray] = None

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        self.status = np.zeros(n, dtype=np.int8)

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        rows = idx[self.status[idx] == self.INSIDE]
        if not rows.size:
            return
        m = self.grid_s.size
        delta = self.grid_s[1] - self.grid_s[0]
        p = x[rows]
        d = p[:, None, :] - self.centers[None, :, :]
        h = np.einsum("kmi,mi->km", d, self.w_time)
        j = np.sum(h > 0.0, axis=1)

        s_foot = np.empty(rows.size)
        s_foot[j == 0] = -delta
        s_foot[j == m] = self.length + delta
        mid = (j > 0) & (j < m)
        if np.any(mid):
            jm = j[mid]
            h0 = h[mid, jm - 1]
            h1 = h[mid, jm]
            frac = h0 / (h0 - h1)
            s_foot[mid] = self.grid_s[jm - 1] + frac * delta

        pos = np.clip(s_foot, 0.0, self.length)
        cell = np.minimum((pos / delta).astype(np.int64), m - 2)
        fr = (pos - self.grid_s[cell]) / delta
        c_f = self.centers[cell] * (1.0 - fr)[:, None] + self.centers[cell + 1] * fr[
            :, None
        ]
        w_f = self.w_lat[cell] * (1.0 - fr)[:, None, None] + self.w_lat[cell + 1] * fr[
            :, None, None
        ]
        lat_vec = np.einsum("ki,kij->kj", p - c_f, w_f)
        lat = np.sqrt(np.sum(lat_vec * lat_vec, axis=1))

        lateral = lat >= self.radius
        far = ~lateral & (s_foot >= self.length * (1.0 - 1e-9))
        near = ~lateral & ~far & (s_foot < 0.0)
        self.status[rows[lateral]] = self.LATERAL
        self.status[rows[far]] = self.FAR
        self.status[rows[near]] = self.NEAR


@dataclass(frozen=True)
class TubeReport:
    """Exit classification for a tube of given radius around a core path."""

    n_paths: int
    n_far_cap: int
    n_lateral: int
    n_near_cap: int
    n_exploded: int
    n_censored: int
    p_far_cap: float
    ci_low: float
    ci_high: float
    radius: float
    length: float
    injectivity_scale: float
    config: dict

    def __post_init__(self):
        total = (
            self.n_far_cap
            + self.n_lateral
            + self.n_near_cap
            + self.n_exploded
            + self.n_censored
        )
        if total != self.n_paths:
            raise ValueError("outcome counters must partition n_paths")

    def to_dict(self) -> dict:
        return _plain(
            {
                "kind": "tube_report",
                "n_paths": self.n_paths,
                "n_far_cap": self.n_far_cap,
                "n_lateral": self.n_lateral,
                "n_near_cap": self.n_near_cap,
                "n_exploded": self.n_exploded,
                "n_censored": self.n_censored,
                "p_far_cap": self.p_far_cap,
                "ci_low": self.ci_low,
                "ci_high": self.ci_high,
                "radius": self.radius,
                "length": self.length,
                "injectivity_scale": self.injectivity_scale,
                "config": self.config,
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _sample_tube_geometry(path: FramedPath, radius: float):
    """Sample the core path, validate the frame field, and bound the tube
    radius by the sampled injectivity scale of the exponential-map chart.

    The acceleration criterion (radius < 1 / max |a|) is a sampled
    necessary condition, not a proof of injectivity.
    """
    grid_s = np.linspace(0.0, path.length, _TUBE_GRID)
    delta = grid_s[1] - grid_s[0]
    centers = np.empty((_TUBE_GRID, 4))
    frames = np.empty((_TUBE_GRID, 4, 4))
    for i, s in enumerate(grid_s):
        f = path.frame_at(float(s))
        if f.point.spacetime.id != "minkowski":
            raise ValueError("tube_test runs on flat spacetime only")
        centers[i] = f.point.coords
        frames[i] = f.e

    gram = np.einsum("i,kia,kib->kab", _ETA_DIAG, frames, frames)
    defect = np.max(np.abs(gram - np.diag(_ETA_DIAG)))
    if defect > 1e-8:
        raise ValueError(
            f"path frame field is not orthonormal (defect {defect:.3g})"
        )
    if np.any(frames[:, 0, 0] <= 0.0):
        raise ValueError("path frame field must be future-directed")

    u = frames[:, :, 0]
    vel = (centers[1:] - centers[:-1]) / delta
    u_mid = 0.5 * (u[1:] + u[:-1])
    adapted = np.max(np.abs(vel - u_mid))
    if adapted > 1e-3 * max(1.0, np.max(np.abs(u))):
        raise ValueError(
            "frame field is not adapted to the path: e0 deviates from the "
            f"sampled velocity by {adapted:.3g}"
        )

    accel = (u[1:] - u[:-1]) / delta
    a_sq = -np.einsum("i,ki,ki->k", _ETA_DIAG, accel, accel)
    a_max = math.sqrt(max(0.0, float(np.max(a_sq)))) if accel.size else 0.0
    inj_scale = math.inf if a_max * path.length < 1e-12 else 1.0 / a_max
    if radius >= inj_scale:
        raise TubeWidthError(
            f"tube radius {radius} reaches the sampled Fermi-chart fold "
            f"distance {inj_scale:.6g}; shrink the tube"
        )

    w_time = u * _ETA_DIAG[None, :]
    w_lat = frames[:, :, 1:4] * _ETA_DIAG[None, :, None]
    return grid_s, centers, w_time, w_lat, inj_scale


def tube_test(
    path: FramedPath,
    radius: float,
    cfg: DiffusionConfig,
    n_paths: int,
    workers: int = 1,
) -> TubeReport:
    """Start the diffusion at the core path's initial frame and classify
    the first exit from the surrounding tube of the given radius.

    Far-cap exits are crossings of the end cross-section; everything that
    leaves through the side wall or the start cross-section is counted
    against them. Paths still inside the tube at the proper-time budget
    are censored, so the budget should comfortably exceed the tube length.
    """
    if not radius > 0.0:
        raise ValueError(f"tube radius must be > 0, got {radius}")
    if cfg.s_max < path.length:
        raise ValueError(
            f"budget s_max={cfg.s_max} cannot traverse a tube of length "
            f"{path.length}"
        )
    f0 = path.frame_at(0.0)
    grid_s, centers, w_time, w_lat, inj_scale = _sample_tube_geometry(path, radius)
    kernel = "flat"

    batches = _run_batches(
        cfg,
        f0,
        n_paths,
        workers,
        kernel,
        lambda: (
            _TubeObserver(grid_s, centers, w_time, w_lat, radius, path.length),
        ),
    )
    code = np.concatenate([res.verdict_code for res, _ in batches])
    status = np.concatenate([obs[0].status for _, obs in batches])

    open_mask = status == _TubeObserver.INSIDE
    n_far = int(np.sum(status == _TubeObserver.FAR))
    n_lat = int(np.sum(status == _TubeObserver.LATERAL))
    n_near = int(np.sum(status == _TubeObserver.NEAR))
    n_expl = int(np.sum(open_mask & (code > 0)))
    n_cens = int(np.sum(open_mask & (code == 0)))
    low, high = wilson_interval(n_far, n_paths)

    config = _config_echo(cfg, f0, kernel)
    config["path"] = path.name
    return TubeReport(
        n_paths=int(n_paths),
        n_far_cap=n_far,
        n_lateral=n_lat,
        n_near_cap=n_near,
        n_exploded=n_expl,
        n_censored=n_cens,
        p_far_cap=n_far / n_paths,
        ci_low=low,
        ci_high=high,
        radius=float(radius),
        length=path.length,
        injectivity_scale=inj_scale,
        config=config,
    )
