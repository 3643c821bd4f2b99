"""Stochastic integrator on the orthonormal frame bundle.

One step of the scheme is a symmetric splitting of the dynamics into its
horizontal and vertical parts:

    boost by sigma*dW/2  ->  geodesic RK4 over ds  ->  boost by sigma*dW/2

with a single Brownian increment dW ~ N(0, ds*I_3) shared by the two half
boosts.  Both half flows are exact group operations on the fiber, the
horizontal part is a classical RK4 step followed by Gram-Schmidt repair, so
the frame stays orthonormal to roundoff along the whole path.  A candidate
step is rejected, then retried at half the size with fresh noise, when an
RK4 stage leaves the chart, when the transported frame's orthonormality
defect exceeds cfg.defect_tol relative to its conditioning floor, or when
the repair fails; halving below min_step ends the path as StepCollapse.

Lifetimes are operationalized by proxies: chart exit regions (Schwarzschild
r at the inner floor), a Kretschmann-scalar bound, a coordinate-norm bound,
and collapse of the rescue step size at chart boundaries.  A path that
reaches the proper-time budget without tripping a proxy terminates as
BudgetExhausted; the budget check never shortens a step, so a verdict of
Exploded cannot flip when the budget is raised.

Noise is addressed, never streamed: each (seed, trajectory, attempt) triple
maps to one increment through a counter-based generator, which makes every
ensemble bit-reproducible under any partition of trajectories across
workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .frames import (
    Frame,
    FrameError,
    apply_boost,
    apply_transition,
    lorentz_gram_schmidt,
    orthonormality_defect_core,
    rk4_geodesic_core,
    vertical_flow,
)
from .geometry import ETA, Spacetime, SpacetimePoint
from .rng import noise_increment

BUDGET_EXHAUSTED = "BudgetExhausted"
EXPLODED = "Exploded"
EXPLOSION_REASONS = ("CoordBound", "CurvatureBound", "StepCollapse", "ChartExit")

# verdict codes used in ensemble result arrays
_CODE_ALIVE = -1
_CODE_BUDGET = 0
_CODE_REASON = {name: i + 1 for i, name in enumerate(EXPLOSION_REASONS)}


def _defect_and_scale(g, e):
    """Entrywise-relative orthonormality defect of e in metric g and the
    largest magnitude entering the Gram sums; returns (defect, scale).

    The absolute defect of a strongly boosted frame bottoms out at roundoff
    times the squared boost factor, so accuracy control has to compare the
    defect against that floor rather than against an absolute threshold.
    Frame columns can span many orders of magnitude, so each Gram entry is
    weighed against the magnitudes feeding that entry alone; a single global
    scale would hide order-one corruption of the small columns."""
    gram = np.einsum("...cd,...ca,...db->...ab", g, e, e)
    heft = np.einsum("...cd,...ca,...db->...ab", np.abs(g), np.abs(e), np.abs(e))
    rel = np.abs(gram - ETA) / np.maximum(heft, np.finfo(float).tiny)
    return np.max(rel, axis=(-1, -2)), np.max(heft, axis=(-1, -2))


def _relative_defect(g, e):
    return _defect_and_scale(g, e)[0]


# Above this Gram scale the unit entries of the target metric sit below
# float64 roundoff of the Gram sums, so re-orthonormalisation can neither
# detect nor repair anything; the relative defect gate still applies.
_REPAIR_SCALE_MAX = 1e10

# Transport over one accepted step cannot grow the frame by more than a few
# percent, so a larger jump marks a corrupted integration stage.
_GROWTH_RATIO_MAX = 8.0


@dataclass(frozen=True)
class DiffusionConfig:
    """Numerical parameters of one diffusion run.

    min_step bounds the rescue halving near chart boundaries; None resolves
    to ds / 2**14.  trajectory_index keys the noise of single-path runs and
    is the index of the first path in ensembles.  defect_tol bounds the
    orthonormality defect one step may add on top of the drift the path
    already carries, each Gram entry weighed against the metric-weighted
    frame products feeding it; the entrywise relative measure keeps highly
    boosted frames, whose absolute defect floor sits above roundoff, from
    being rejected for conditioning alone, and the incremental budget keeps
    halving aimed at truncation error, which it can shrink, rather than at
    inherited drift, which it cannot.
    """

    sigma: float
    ds: float
    s_max: float
    coord_bound: float = 1e8
    curvature_bound: float = 1e12
    min_step: Optional[float] = None
    defect_tol: float = 1e-8
    seed: int = 0
    trajectory_index: int = 0
    output_stride: int = 1

    def __post_init__(self):
        if not (self.sigma >= 0.0):
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")
        if not (self.ds > 0.0):
            raise ValueError(f"ds must be > 0, got {self.ds}")
        if not (self.s_max > 0.0):
            raise ValueError(f"s_max must be > 0, got {self.s_max}")
        if self.ds > self.s_max:
            raise ValueError(f"ds = {self.ds} exceeds s_max = {self.s_max}")
        if not (self.coord_bound > 0.0):
            raise ValueError(f"coord_bound must be > 0, got {self.coord_bound}")
        if not (self.curvature_bound > 0.0):
            raise ValueError(
                f"curvature_bound must be > 0, got {self.curvature_bound}"
            )
        if self.min_step is not None and not (0.0 < self.min_step <= self.ds):
            raise ValueError(
                f"min_step must lie in (0, ds], got {self.min_step}"
            )
        if not (self.defect_tol > 0.0):
            raise ValueError(f"defect_tol must be > 0, got {self.defect_tol}")
        if int(self.output_stride) != self.output_stride or self.output_stride < 1:
            raise ValueError(
                f"output_stride must be a positive integer, got {self.output_stride}"
            )
        if self.trajectory_index < 0:
            raise ValueError(
                f"trajectory_index must be >= 0, got {self.trajectory_index}"
            )

    @property
    def resolved_min_step(self) -> float:
        return self.ds / 2.0**14 if self.min_step is None else self.min_step


@dataclass(frozen=True)
class Termination:
    """Why and when a path stopped: a verdict, not an error."""

    verdict: str
    reason: Optional[str]
    s: float

    @property
    def exploded(self) -> bool:
        return self.verdict == EXPLODED

    @property
    def label(self) -> str:
        return f"Exploded({self.reason})" if self.exploded else self.verdict


@dataclass(frozen=True)
class TrajectorySample:
    s: float
    chart: str
    coords: np.ndarray
    e: np.ndarray
    defect: float


@dataclass(frozen=True)
class Trajectory:
    spacetime_id: str
    samples: list
    transitions: list
    termination: Termination

    @property
    def zeta(self) -> Optional[float]:
        return self.termination.s if self.termination.exploded else None

    def final_frame(self, spacetime: Spacetime) -> Frame:
        last = self.samples[-1]
        point = SpacetimePoint(spacetime, last.chart, np.array(last.coords))
        return Frame(point, np.array(last.e))


@dataclass
class EnsembleResult:
    """Per-path outcome arrays of a batched run, in trajectory-index order."""

    traj_index: np.ndarray
    verdict_code: np.ndarray
    s_final: np.ndarray
    zeta: np.ndarray

    def termination(self, i: int) -> Termination:
        code = int(self.verdict_code[i])
        if code == _CODE_BUDGET:
            return Termination(BUDGET_EXHAUSTED, None, float(self.s_final[i]))
        return Termination(
            EXPLODED, EXPLOSION_REASONS[code - 1], float(self.s_final[i])
        )

    @property
    def n_exploded(self) -> int:
        return int(np.sum(self.verdict_code > 0))


class Observer:
    """Hooks into the ensemble loop; all base implementations do nothing."""

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        pass

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        """After paths idx advance: s, x, e, chart_idx are full-length arrays."""

    def transition(self, idx, s, chart_from, chart_to):
        pass

    def terminate(self, idx, verdict_code, s):
        pass


class HitObserver(Observer):
    """First proper time at which coordinates enter a region, per path."""

    def __init__(self, predicate: Callable[[np.ndarray], np.ndarray]):
        self.predicate = predicate
        self.hit_s: Optional[np.ndarray] = None

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        self.hit_s = np.full(n, np.nan)
        inside = np.asarray(self.predicate(x), dtype=bool)
        self.hit_s[inside] = 0.0

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        fresh = idx[np.isnan(self.hit_s[idx])]
        if fresh.size:
            inside = np.asarray(self.predicate(x[fresh]), dtype=bool)
            self.hit_s[fresh[inside]] = s[fresh[inside]]


class SnapshotObserver(Observer):
    """Frame snapshots at fixed proper times (recorded at the first committed
    step whose time reaches each target; fixed-step runs land on the grid)."""

    def __init__(self, times):
        self.times = np.asarray(times, dtype=float)
        if np.any(np.diff(self.times) <= 0.0) or np.any(self.times < 0.0):
            raise ValueError("snapshot times must be non-negative and increasing")
        self.x: Optional[np.ndarray] = None
        self.e: Optional[np.ndarray] = None
        self.chart: Optional[np.ndarray] = None
        self.chart_names: Optional[list] = None
        self.taken: Optional[np.ndarray] = None
        self._next: Optional[np.ndarray] = None

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        m = self.times.size
        self.x = np.full((m, n, 4), np.nan)
        self.e = np.full((m, n, 4, 4), np.nan)
        self.chart = np.full((m, n), -1, dtype=np.int64)
        self.chart_names = list(chart_names)
        self.taken = np.zeros((m, n), dtype=bool)
        self._next = np.zeros(n, dtype=np.int64)
        while True:
            due = (self._next < m) & (self.times[np.minimum(self._next, m - 1)] <= 0.0)
            if not np.any(due):
                break
            rows = np.flatnonzero(due)
            self.x[self._next[rows], rows] = x[rows]
            self.e[self._next[rows], rows] = e[rows]
            self.chart[self._next[rows], rows] = chart_idx[rows]
            self.taken[self._next[rows], rows] = True
            self._next[rows] += 1

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        m = self.times.size
        while True:
            sub = idx[self._next[idx] < m]
            if not sub.size:
                break
            due = sub[self.times[self._next[sub]] <= s[sub] + 1e-9]
            if not due.size:
                break
            self.x[self._next[due], due] = x[due]
            self.e[self._next[due], due] = e[due]
            self.chart[self._next[due], due] = chart_idx[due]
            self.taken[self._next[due], due] = True
            self._next[due] += 1


class RecordingObserver(Observer):
    """Full sample storage for trajectory output; memory scales with paths
    times steps, meant for single-path runs and small ensembles."""

    def __init__(self, spacetime: Spacetime, stride: int = 1):
        self.spacetime = spacetime
        self.stride = int(stride)
        self.samples: list = []
        self.transitions: list = []
        self._count: Optional[np.ndarray] = None

    def _record(self, i, s, x, e, chart_name):
        g = self.spacetime.chart(chart_name).metric(x)
        defect = float(orthonormality_defect_core(g, e))
        self.samples[i].append(
            TrajectorySample(float(s), chart_name, x.copy(), e.copy(), defect)
        )

    def start(self, n, traj_index, s, x, e, chart_names, chart_idx):
        self.samples = [[] for _ in range(n)]
        self.transitions = [[] for _ in range(n)]
        self._count = np.zeros(n, dtype=np.int64)
        for i in range(n):
            self._record(i, s[i], x[i], e[i], chart_names[chart_idx[i]])

    def commit(self, idx, s, x, e, chart_names, chart_idx):
        self._count[idx] += 1
        for i in idx:
            if self._count[i] % self.stride == 0:
                self._record(i, s[i], x[i], e[i], chart_names[chart_idx[i]])

    def transition(self, idx, s, chart_from, chart_to):
        for i in idx:
            self.transitions[i].append((float(s[i]), chart_from, chart_to))

    def finalize(self, i, s, x, e, chart_names, chart_idx):
        last = self.samples[i][-1]
        if last.s < s[i] - 1e-15:
            self._record(i, s[i], x[i], e[i], chart_names[chart_idx[i]])


def run_ensemble(
    cfg: DiffusionConfig,
    f0: Frame,
    n_paths: int,
    observers: tuple = (),
    first_index: Optional[int] = None,
    kernel: str = "strang",
) -> EnsembleResult:
    """Drive n_paths independent diffusions from one initial frame.

    Paths are numbered first_index .. first_index + n_paths - 1 (defaulting
    to cfg.trajectory_index) and consume noise addressed by their own number,
    so the result is independent of how a caller partitions the index range
    into batches.
    """
    if n_paths < 1:
        raise ValueError(f"n_paths must be >= 1, got {n_paths}")
    if kernel not in ("strang", "flat"):
        raise ValueError(f"unknown kernel {kernel!r}")
    sp = f0.point.spacetime
    if kernel == "flat" and sp.id != "minkowski":
        raise ValueError("the flat kernel integrates Minkowski paths only")
    flat = kernel == "flat"
    start = cfg.trajectory_index if first_index is None else int(first_index)

    chart_names = list(sp.charts)
    chart_pos = {name: i for i, name in enumerate(chart_names)}

    n = int(n_paths)
    x = np.tile(np.asarray(f0.point.coords, dtype=float), (n, 1))
    e = np.tile(np.asarray(f0.e, dtype=float), (n, 1, 1))
    s = np.zeros(n)
    chart_idx = np.full(n, chart_pos[f0.point.chart], dtype=np.int64)
    traj = start + np.arange(n, dtype=np.uint64)
    attempt = np.zeros(n, dtype=np.uint64)
    code = np.full(n, _CODE_ALIVE, dtype=np.int8)
    min_step = cfg.resolved_min_step

    # Accumulated orthonormality defect per path.  The step gate is
    # incremental: truncation error added by one step must stay within
    # defect_tol, while drift already present is carried, not re-judged;
    # halving a step can shrink new error but never the inherited part.
    if flat:
        dcarry = np.zeros(n)
    else:
        g0 = sp.charts[f0.point.chart].metric(x[:1])
        dcarry = np.full(n, float(_defect_and_scale(g0, e[:1])[0][0]))

    for obs in observers:
        obs.start(n, traj, s, x, e, chart_names, chart_idx)

    def finish(idx, new_code):
        code[idx] = new_code
        for obs in observers:
            obs.terminate(idx, new_code, s[idx])

    alive = np.ones(n, dtype=bool)
    while True:
        live = np.flatnonzero(alive)
        if live.size == 0:
            break
        done = live[s[live] >= cfg.s_max * (1.0 - 1e-14)]
        if done.size:
            finish(done, _CODE_BUDGET)
            alive[done] = False
            live = np.flatnonzero(alive)
            if live.size == 0:
                break

        groups = [
            (ci, live[chart_idx[live] == ci]) for ci in np.unique(chart_idx[live])
        ]
        for ci, idx in groups:
            chart = sp.charts[chart_names[ci]]
            dt = np.full(idx.size, cfg.ds)
            pending = idx
            while pending.size:
                draw = attempt[pending]
                attempt[pending] += np.uint64(1)
                if cfg.sigma > 0.0:
                    dw = noise_increment(cfg.seed, traj[pending], draw, dt)
                    half = (0.5 * cfg.sigma) * dw
                    e_try = apply_boost(e[pending], half)
                else:
                    half = None
                    e_try = e[pending]
                if flat:
                    xn = x[pending] + dt[:, None] * e_try[:, :, 0]
                    en = e_try
                    ok = np.ones(pending.size, dtype=bool)
                    carry_new = np.zeros(pending.size)
                else:
                    xn, en, ok = rk4_geodesic_core(chart, x[pending], e_try, dt)
                    with np.errstate(all="ignore"):
                        gn = chart.metric(xn)
                        rel, scale = _defect_and_scale(gn, en)
                        budget = dcarry[pending] + cfg.defect_tol
                        ok = ok & np.isfinite(rel) & (rel <= budget)
                        mag_in = np.max(np.abs(e_try), axis=(-1, -2))
                        mag_out = np.max(np.abs(en), axis=(-1, -2))
                        ok = ok & (mag_out <= _GROWTH_RATIO_MAX * mag_in)
                        small = scale < _REPAIR_SCALE_MAX
                        if np.any(small):
                            er, ok_gs = lorentz_gram_schmidt(gn, en)
                            en = np.where(small[:, None, None], er, en)
                            ok = ok & (ok_gs | ~small)
                        carry_new = np.where(small, 0.0, rel)
                if half is not None:
                    en = apply_boost(en, half)

                good = pending[ok]
                if good.size:
                    sel = np.flatnonzero(ok)
                    x[good] = xn[sel]
                    e[good] = en[sel]
                    s[good] = s[good] + dt[sel]
                    dcarry[good] = carry_new[sel]

                    # explosion proxies, most specific first
                    xg = x[good]
                    if chart.exit_region is not None:
                        hit_exit = np.asarray(chart.exit_region(xg), dtype=bool)
                    else:
                        hit_exit = np.zeros(good.size, dtype=bool)
                    with np.errstate(all="ignore"):
                        kret = np.abs(sp.kretschmann(chart.name, xg))
                    hit_curv = (kret > cfg.curvature_bound) & ~hit_exit
                    hit_coord = (
                        np.max(np.abs(xg), axis=-1) > cfg.coord_bound
                    ) & ~hit_exit & ~hit_curv

                    moved = good[~hit_exit & ~hit_curv & ~hit_coord]
                    if moved.size and sp.transition_trigger is not None:
                        trig = np.asarray(
                            sp.transition_trigger(chart.name, x[moved]), dtype=bool
                        )
                        if np.any(trig):
                            move = moved[trig]
                            target, xt, et = apply_transition(
                                sp, chart.name, x[move], e[move]
                            )
                            gt = sp.charts[target].metric(xt)
                            small_t = (
                                _defect_and_scale(gt, et)[1] < _REPAIR_SCALE_MAX
                            )
                            if np.any(small_t):
                                er_t, ok_t = lorentz_gram_schmidt(gt, et)
                                if not bool(np.all(ok_t | ~small_t)):
                                    raise FrameError(
                                        "chart transition degenerated a frame"
                                    )
                                et = np.where(small_t[:, None, None], er_t, et)
                            x[move] = xt
                            e[move] = et
                            chart_idx[move] = chart_pos[target]
                            for obs in observers:
                                obs.transition(move, s, chart.name, target)

                    for obs in observers:
                        obs.commit(good, s, x, e, chart_names, chart_idx)

                    for mask, name in (
                        (hit_exit, "ChartExit"),
                        (hit_curv, "CurvatureBound"),
                        (hit_coord, "CoordBound"),
                    ):
                        stop = good[mask]
                        if stop.size:
                            finish(stop, _CODE_REASON[name])
                            alive[stop] = False

                bad = pending[~ok]
                if bad.size:
                    dt = dt[~ok] * 0.5
                    collapsed = dt < min_step
                    if np.any(collapsed):
                        dead = bad[collapsed]
                        finish(dead, _CODE_REASON["StepCollapse"])
                        alive[dead] = False
                    pending = bad[~collapsed]
                    dt = dt[~collapsed]
                else:
                    pending = bad

    zeta = np.where(code > 0, s, np.nan)
    for obs in observers:
        fin = getattr(obs, "finalize", None)
        if fin is not None:
            for i in range(n):
                fin(i, s, x, e, chart_names, chart_idx)
    return EnsembleResult(
        traj_index=traj.astype(np.int64),
        verdict_code=code.copy(),
        s_final=s.copy(),
        zeta=zeta,
    )


def step(f: Frame, cfg: DiffusionConfig, dw: np.ndarray) -> Frame:
    """One splitting step with a caller-supplied increment; raises on chart
    exit or degeneracy instead of entering the rescue loop."""
    dw = np.asarray(dw, dtype=float)
    sp = f.point.spacetime
    chart = sp.chart(f.point.chart)
    half = 0.5 * cfg.sigma * dw
    e_try = apply_boost(f.e, half)
    xn, en, ok = rk4_geodesic_core(chart, f.point.coords, e_try, cfg.ds)
    if not bool(ok):
        raise FrameError(f"step of size {cfg.ds} was rejected (chart boundary)")
    gn = chart.metric(xn)
    rel, scale = _defect_and_scale(gn, en)
    rel_pre = _defect_and_scale(chart.metric(f.point.coords), f.e)[0]
    if not (float(rel) <= float(rel_pre) + cfg.defect_tol):
        raise FrameError(
            f"step of size {cfg.ds} lost orthonormality (relative defect {rel:g})"
        )
    if float(scale) < _REPAIR_SCALE_MAX:
        en, ok = lorentz_gram_schmidt(gn, en)
        if not bool(ok):
            raise FrameError("step degenerated the frame")
    en = apply_boost(en, half)
    return Frame(SpacetimePoint(sp, f.point.chart, xn), en)


def _single_trajectory(cfg, f0, kernel):
    sp = f0.point.spacetime
    rec = RecordingObserver(sp, cfg.output_stride)
    res = run_ensemble(cfg, f0, 1, observers=(rec,), kernel=kernel)
    return Trajectory(
        spacetime_id=sp.id,
        samples=rec.samples[0],
        transitions=rec.transitions[0],
        termination=res.termination(0),
    )


def simulate(cfg: DiffusionConfig, f0: Frame) -> Trajectory:
    """One path, fully recorded; all failure modes end as verdicts."""
    return _single_trajectory(cfg, f0, "strang")


def dudley_simulate(cfg: DiffusionConfig, f0: Frame) -> Trajectory:
    """Minkowski specialization: the connection vanishes, so the horizontal
    part is exact position quadrature and the fiber motion is the exact
    product of boosts; same verdict semantics as simulate."""
    return _single_trajectory(cfg, f0, "flat")
