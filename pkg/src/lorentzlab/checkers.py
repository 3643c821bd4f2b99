"""Hypothesis checkers for the explosion criteria.

Each checker evaluates the conditions of one criterion on a supplied family
of frames and returns a CriterionReport carrying a verdict, per-condition
margins, and the binding sample.  The checkers test hypotheses numerically
on samples with a stated envelope; they do not prove them.

Verdict semantics: "violated" requires a concrete witness frame at which
re-evaluation reproduces the failure; precondition failures and evaluation
errors (divergent Green potential, probes leaving the chart) degrade the
affected condition to inconclusive instead of raising.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curvature import curvature
from .fiber import (
    RIC_TILDE,
    RIC_TILDE_PLUS_U,
    ExpBoundednessError,
    FiberFunctional,
    apply_generator,
    compute_U,
    h0_derivative,
    ric_tilde,
    t_tilde,
)
from .frames import Frame, FrameError, coordinate_frame, frame_record, vertical_flow
from .geometry import DomainError, Spacetime
from .serialize import to_plain as _plain

_FOLDED = (FrameError, DomainError, ExpBoundednessError)


@dataclass(frozen=True)
class ConditionResult:
    """One checked condition: its binding margin and, on failure, a witness.

    margin is the smallest sampled slack (negative means the condition fails
    there); passed is None when the condition could not be evaluated.
    """

    name: str
    passed: Optional[bool]
    margin: Optional[float]
    description: str
    witness: Optional[dict] = None
    witness_frame: Optional[Frame] = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "margin": _plain(self.margin),
            "description": self.description,
            "witness": _plain(self.witness),
        }


@dataclass(frozen=True)
class CriterionReport:
    criterion: str
    verdict: str  # satisfied | violated | inconclusive
    conditions: list
    constants: dict
    sampling: dict

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "verdict": self.verdict,
            "constants": _plain(self.constants),
            "sampling": _plain(self.sampling),
            "conditions": [c.to_dict() for c in self.conditions],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _verdict(conditions) -> str:
    if any(c.passed is False for c in conditions):
        return "violated"
    if any(c.passed is None for c in conditions):
        return "inconclusive"
    return "satisfied"


def _sweep(fn, frames):
    """Evaluate fn on every frame; a folded error aborts the sweep."""
    vals = []
    for f in frames:
        try:
            vals.append(float(fn(f)))
        except _FOLDED as exc:
            return None, exc
    return np.asarray(vals, dtype=float), None


def _unevaluable(name: str, description: str, exc) -> ConditionResult:
    return ConditionResult(
        name, None, None, f"{description}; not evaluable: {exc}", None, None
    )


def _condition_all(
    name, description, frames, margins, scales=None, atol=1e-10, values=None
):
    """Condition holding at every sample: margin_i >= -atol * scale_i."""
    m = np.asarray(margins, dtype=float)
    if scales is None:
        scale = np.ones_like(m)
    else:
        scale = np.maximum(1.0, np.abs(np.asarray(scales, dtype=float)))
    idx = int(np.argmin(m / scale))
    passed = bool(np.all(m >= -atol * scale))
    witness = _witness(frames[idx], m[idx], values, idx)
    return ConditionResult(
        name,
        passed,
        float(m[idx]),
        description,
        None if passed else witness,
        frames[idx],
    )


def _condition_exists(
    name, description, frames, values_arr, atol=1e-10, values=None
):
    """Condition holding at some sample: max value > atol."""
    v = np.asarray(values_arr, dtype=float)
    idx = int(np.argmax(v))
    passed = bool(v[idx] > atol)
    witness = _witness(frames[idx], v[idx], values, idx)
    return ConditionResult(
        name,
        passed,
        float(v[idx]),
        description,
        None if passed else witness,
        frames[idx],
    )


def _witness(frame, margin, values, idx) -> dict:
    out = {"frame": frame_record(frame), "margin": float(margin)}
    if values is not None:
        out.update({k: float(v[idx]) for k, v in values.items()})
    return out


def _sampling(frames, envelope=None, spacetime: Optional[Spacetime] = None) -> dict:
    sp = spacetime
    if sp is None and frames:
        sp = frames[0].point.spacetime
    out = {
        "n_frames": len(frames),
        "spacetime": None if sp is None else sp.id,
        "parameters": {} if sp is None else dict(sp.parameters),
    }
    if envelope:
        out.update(envelope)
    return out


# ---------------------------------------------------------------------------
# single-functional explosion criterion


def check_lemma7(
    F: FiberFunctional,
    f0: Frame,
    sigma: float,
    C: float,
    frames,
    atol: float = 1e-10,
    envelope: Optional[dict] = None,
) -> CriterionReport:
    """Explosion criterion from one functional: F bounded above, F(f0) > 0,
    and G F >= C F everywhere, for a positive constant C.

    A non-positive start value invalidates the criterion's premise, so it
    degrades the verdict to inconclusive rather than counting as a
    violation of the spacetime.
    """
    if not (C > 0.0):
        raise ValueError(f"C must be > 0, got {C}")
    frames = list(frames)
    conditions = []

    try:
        start = float(F(f0))
        conditions.append(
            ConditionResult(
                "start_positive",
                True if start > atol else None,
                start,
                "F at the start frame is positive"
                if start > atol
                else "precondition F(f0) > 0 fails; criterion not applicable",
                None,
                f0,
            )
        )
    except _FOLDED as exc:
        conditions.append(_unevaluable("start_positive", "F at the start frame", exc))

    fvals, err = _sweep(F, frames)
    sup = None
    if err is not None:
        conditions.append(_unevaluable("bounded_above", "sampled sup of F", exc=err))
    else:
        sup = float(np.max(fvals))
        idx = int(np.argmax(fvals))
        conditions.append(
            ConditionResult(
                "bounded_above",
                bool(np.isfinite(sup)),
                sup,
                "sampled sup of F is finite (reported as the bound)",
                None,
                frames[idx],
            )
        )

        gvals, gerr = _sweep(lambda f: apply_generator(F, f, sigma), frames)
        if gerr is not None:
            conditions.append(
                _unevaluable("growth", "G F >= C F at every sample", gerr)
            )
        else:
            conditions.append(
                _condition_all(
                    "growth",
                    "G F >= C F at every sample",
                    frames,
                    gvals - C * fvals,
                    scales=C * fvals,
                    atol=atol,
                    values={"F": fvals, "GF": gvals},
                )
            )

    return CriterionReport(
        criterion="lemma7",
        verdict=_verdict(conditions),
        conditions=conditions,
        constants={"C": C, "sigma": sigma, "F": F.name, "sampled_sup": sup},
        sampling=_sampling(frames, envelope),
    )


# ---------------------------------------------------------------------------
# comparison criterion: growing functional below a decaying one


def check_lemma11(
    F: FiberFunctional,
    H: FiberFunctional,
    c: float,
    c_prime: float,
    frames,
    sigma: float,
    atol: float = 1e-10,
    envelope: Optional[dict] = None,
) -> CriterionReport:
    """Two-functional explosion criterion: 0 <= F <= H non-null, with
    G F >= c F and G H <= c' H for constants 0 <= c' < c."""
    if not (0.0 <= c_prime < c):
        raise ValueError(
            f"constants must satisfy 0 <= c_prime < c, got c={c}, c_prime={c_prime}"
        )
    frames = list(frames)
    conditions = []

    fvals, ferr = _sweep(F, frames)
    hvals, herr = _sweep(H, frames)

    if ferr is not None or herr is not None:
        conditions.append(
            _unevaluable(
                "non_negative", "F >= 0 and H >= 0 at every sample", ferr or herr
            )
        )
        conditions.append(
            _unevaluable(
                "non_null", "some sampled value of F or H is nonzero", ferr or herr
            )
        )
        conditions.append(
            _unevaluable("ordering", "F <= H at every sample", ferr or herr)
        )
    else:
        conditions.append(
            _condition_all(
                "non_negative",
                "F >= 0 and H >= 0 at every sample",
                frames + frames,
                np.concatenate([fvals, hvals]),
                atol=atol,
                values={"value": np.concatenate([fvals, hvals])},
            )
        )
        peak = float(max(np.max(np.abs(fvals)), np.max(np.abs(hvals))))
        conditions.append(
            ConditionResult(
                "non_null",
                True if peak > atol else None,
                peak,
                "some sampled value of F or H is nonzero"
                if peak > atol
                else "all sampled values vanish; the criterion needs non-null "
                "functionals",
                None,
                frames[0],
            )
        )
        conditions.append(
            _condition_all(
                "ordering",
                "F <= H at every sample",
                frames,
                hvals - fvals,
                scales=hvals,
                atol=atol,
                values={"F": fvals, "H": hvals},
            )
        )

    if ferr is not None:
        conditions.append(_unevaluable("growth", "G F >= c F", ferr))
    else:
        gf, gferr = _sweep(lambda f: apply_generator(F, f, sigma), frames)
        if gferr is not None:
            conditions.append(_unevaluable("growth", "G F >= c F", gferr))
        else:
            conditions.append(
                _condition_all(
                    "growth",
                    "G F >= c F at every sample",
                    frames,
                    gf - c * fvals,
                    scales=c * fvals,
                    atol=atol,
                    values={"F": fvals, "GF": gf},
                )
            )
    if herr is not None:
        conditions.append(_unevaluable("decay", "G H <= c' H", herr))
    else:
        gh, gherr = _sweep(lambda f: apply_generator(H, f, sigma), frames)
        if gherr is not None:
            conditions.append(_unevaluable("decay", "G H <= c' H", gherr))
        else:
            conditions.append(
                _condition_all(
                    "decay",
                    "G H <= c' H at every sample",
                    frames,
                    c_prime * hvals - gh,
                    scales=c_prime * hvals,
                    atol=atol,
                    values={"H": hvals, "GH": gh},
                )
            )

    return CriterionReport(
        criterion="lemma11",
        verdict=_verdict(conditions),
        conditions=conditions,
        constants={
            "c": c,
            "c_prime": c_prime,
            "sigma": sigma,
            "F": F.name,
            "H": H.name,
        },
        sampling=_sampling(frames, envelope),
    )


# ---------------------------------------------------------------------------
# curvature-based explosion criteria on a spacetime


def check_theorem8(
    spacetime: Spacetime,
    sigma: float,
    C: float,
    frames,
    atol: float = 1e-10,
    envelope: Optional[dict] = None,
) -> CriterionReport:
    """Energy-condition explosion criterion: (1) the Einstein contraction is
    nonnegative, (2) the Ricci contraction is positive somewhere, bounded
    above, and non-constant, (3) its geodesic derivative satisfies
    H0 ric >= (C - 2 sigma^2) ric on the samples.

    The constant pairing is reported in both readings: the growth rate
    c = C - 2 sigma^2 implied by the given C, and the admissible range of C
    measured from the samples.
    """
    frames = list(frames)
    if not frames:
        raise ValueError("sample frames must be non-empty")
    conditions = []
    c_growth = C - 2.0 * sigma**2

    rvals, rerr = _sweep(ric_tilde, frames)
    tvals, terr = _sweep(t_tilde, frames)
    if terr is not None:
        conditions.append(_unevaluable("energy_nonneg", "Einstein contraction", terr))
    else:
        conditions.append(
            _condition_all(
                "energy_nonneg",
                "t_tilde >= 0 at every sample",
                frames,
                tvals,
                atol=atol,
                values={"t_tilde": tvals},
            )
        )

    h0vals = None
    if rerr is not None:
        conditions.append(_unevaluable("ric_positive_somewhere", "Ricci contraction", rerr))
    else:
        conditions.append(
            _condition_exists(
                "ric_positive_somewhere",
                "ric_tilde > 0 at some sample",
                frames,
                rvals,
                atol=atol,
                values={"ric_tilde": rvals},
            )
        )
        sup = float(np.max(rvals))
        conditions.append(
            ConditionResult(
                "ric_bounded_above",
                bool(np.isfinite(sup)),
                sup,
                "sampled sup of ric_tilde is finite (reported as the bound)",
                None,
                frames[int(np.argmax(rvals))],
            )
        )
        spread = float(np.max(rvals) - np.min(rvals))
        scale = max(1.0, float(np.max(np.abs(rvals))))
        conditions.append(
            ConditionResult(
                "ric_nonconstant",
                bool(spread > atol * scale),
                spread,
                "sampled ric_tilde is not constant (spread reported)",
                None,
                frames[int(np.argmax(rvals))],
            )
        )

        h0vals, h0err = _sweep(lambda f: h0_derivative(RIC_TILDE, f), frames)
        if h0err is not None:
            conditions.append(_unevaluable("h0_growth", "geodesic growth", h0err))
        else:
            conditions.append(
                _condition_all(
                    "h0_growth",
                    "H0 ric_tilde >= (C - 2 sigma^2) ric_tilde at every sample",
                    frames,
                    h0vals - c_growth * rvals,
                    scales=c_growth * rvals,
                    atol=atol,
                    values={"ric_tilde": rvals, "h0_ric_tilde": h0vals},
                )
            )

    constants = {
        "C": C,
        "sigma": sigma,
        "c": c_growth,
        "C_max_admissible": None,
        "C_min_admissible": None,
    }
    if rvals is not None and h0vals is not None:
        pos = rvals > atol
        neg = rvals < -atol
        if np.any(pos):
            constants["C_max_admissible"] = float(
                np.min(2.0 * sigma**2 + h0vals[pos] / rvals[pos])
            )
        if np.any(neg):
            constants["C_min_admissible"] = float(
                np.max(2.0 * sigma**2 + h0vals[neg] / rvals[neg])
            )

    return CriterionReport(
        criterion="theorem8",
        verdict=_verdict(conditions),
        conditions=conditions,
        constants=constants,
        sampling=_sampling(frames, envelope, spacetime),
    )


def check_theorem12(
    spacetime: Spacetime,
    sigma: float,
    alpha: float,
    c: float,
    c_prime: float,
    frames,
    atol: float = 1e-10,
    envelope: Optional[dict] = None,
    rho_cut: float = 12.0,
    n_rho: int = 64,
) -> CriterionReport:
    """Potential-based explosion criterion.

    Window feasibility is validated first: the noise range is
    sqrt(c/2) < sigma < sqrt(c_prime/(2 alpha)), nonempty only when
    c_prime > alpha c.  An infeasible window or a sigma outside it makes
    the verdict inconclusive (the hypotheses cannot be probed at this
    sigma); it is not a property of the spacetime.

    Conditions: (1') ric_tilde >= 0, not identically zero, scalar
    curvature <= 0; (2') sub-gaussian growth of ric_tilde along boosts and
    ((1 - alpha)/alpha) ric_tilde <= U; (3') H0 ric_tilde >=
    (c - 2 sigma^2) ric_tilde and H0(ric_tilde + U) <=
    (c' - 2 alpha sigma^2)(ric_tilde + U).  A divergent Green potential
    degrades the U-dependent clauses to inconclusive.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if not (0.0 <= c_prime < c):
        raise ValueError(
            f"constants must satisfy 0 <= c_prime < c, got c={c}, c_prime={c_prime}"
        )
    frames = list(frames)
    if not frames:
        raise ValueError("sample frames must be non-empty")
    conditions = []

    low = math.sqrt(c / 2.0)
    high = math.sqrt(c_prime / (2.0 * alpha))
    feasible = c_prime > alpha * c
    if not feasible:
        window_ok = None
        window_desc = (
            "sigma window is empty: requires c_prime > alpha * c "
            f"(got c_prime={c_prime}, alpha*c={alpha * c})"
        )
        window_margin = high - low
    elif not (low < sigma < high):
        window_ok = None
        window_desc = (
            f"sigma={sigma} lies outside the window ({low:.6g}, {high:.6g})"
        )
        window_margin = min(sigma - low, high - sigma)
    else:
        window_ok = True
        window_desc = f"sigma={sigma} lies inside the window ({low:.6g}, {high:.6g})"
        window_margin = min(sigma - low, high - sigma)
    conditions.append(
        ConditionResult("sigma_window", window_ok, window_margin, window_desc)
    )

    rvals, rerr = _sweep(ric_tilde, frames)
    if rerr is not None:
        conditions.append(_unevaluable("ric_nonneg", "Ricci contraction", rerr))
        rvals = None
    else:
        conditions.append(
            _condition_all(
                "ric_nonneg",
                "ric_tilde >= 0 at every sample",
                frames,
                rvals,
                atol=atol,
                values={"ric_tilde": rvals},
            )
        )
        conditions.append(
            _condition_exists(
                "ric_non_null",
                "ric_tilde is not identically zero on the samples",
                frames,
                np.abs(rvals),
                atol=atol,
                values={"ric_tilde": rvals},
            )
        )

    svals, serr = _sweep(lambda f: curvature(f.point).scalar, frames)
    if serr is not None:
        conditions.append(_unevaluable("scalar_nonpositive", "scalar curvature", serr))
    else:
        conditions.append(
            _condition_all(
                "scalar_nonpositive",
                "scalar curvature <= 0 at every base point",
                frames,
                -svals,
                atol=atol,
                values={"scalar": svals},
            )
        )

    conditions.append(_exp_bounded_condition(frames, atol))

    uvals, uerr = _sweep(
        lambda f: compute_U(f, rho_cut=rho_cut, n_rho=n_rho), frames
    )
    if uerr is not None or rvals is None:
        conditions.append(
            _unevaluable(
                "u_dominates",
                "((1 - alpha)/alpha) ric_tilde <= U",
                uerr if uerr is not None else rerr,
            )
        )
    else:
        ratio = (1.0 - alpha) / alpha
        conditions.append(
            _condition_all(
                "u_dominates",
                "((1 - alpha)/alpha) ric_tilde <= U at every sample",
                frames,
                uvals - ratio * rvals,
                scales=uvals,
                atol=atol,
                values={"ric_tilde": rvals, "U": uvals},
            )
        )

    if rvals is None:
        conditions.append(_unevaluable("h0_growth", "geodesic growth", rerr))
    else:
        h0vals, h0err = _sweep(lambda f: h0_derivative(RIC_TILDE, f), frames)
        if h0err is not None:
            conditions.append(_unevaluable("h0_growth", "geodesic growth", h0err))
        else:
            grow = c - 2.0 * sigma**2
            conditions.append(
                _condition_all(
                    "h0_growth",
                    "H0 ric_tilde >= (c - 2 sigma^2) ric_tilde at every sample",
                    frames,
                    h0vals - grow * rvals,
                    scales=grow * rvals,
                    atol=atol,
                    values={"ric_tilde": rvals, "h0_ric_tilde": h0vals},
                )
            )

    target = FiberFunctional(
        "ric_tilde_plus_u",
        lambda f: ric_tilde(f) + compute_U(f, rho_cut=rho_cut, n_rho=n_rho),
    )
    gsum, gsumerr = _sweep(lambda f: h0_derivative(target, f), frames)
    if gsumerr is not None or rvals is None or uvals is None:
        conditions.append(
            _unevaluable(
                "h0_decay_sum",
                "H0(ric_tilde + U) <= (c' - 2 alpha sigma^2)(ric_tilde + U)",
                gsumerr if gsumerr is not None else (uerr or rerr),
            )
        )
    else:
        decay = c_prime - 2.0 * alpha * sigma**2
        total = rvals + uvals
        conditions.append(
            _condition_all(
                "h0_decay_sum",
                "H0(ric_tilde + U) <= (c' - 2 alpha sigma^2)(ric_tilde + U) "
                "at every sample",
                frames,
                decay * total - gsum,
                scales=decay * total,
                atol=atol,
                values={"sum": total, "h0_sum": gsum},
            )
        )

    return CriterionReport(
        criterion="theorem12",
        verdict=_verdict(conditions),
        conditions=conditions,
        constants={
            "alpha": alpha,
            "c": c,
            "c_prime": c_prime,
            "sigma": sigma,
            "sigma_window": [low, high],
            "window_feasible": feasible,
        },
        sampling=_sampling(frames, envelope, spacetime),
    )


def _exp_bounded_condition(frames, atol, rho_fit=None) -> ConditionResult:
    """Sub-gaussian growth of ric_tilde along radial boosts: fit
    log|ric_tilde| against a quadratic in the rapidity over a few base
    points; the rho^2 coefficient must stay small.  Contractions of fixed
    tensors grow at most exponentially in rho, so a sizable quadratic
    coefficient signals super-exponential growth that the Green potential
    cannot integrate."""
    if rho_fit is None:
        rho_fit = np.linspace(1.0, 4.0, 7)
    xs, ys = [], []
    probe = None
    try:
        for f in frames[: min(5, len(frames))]:
            base = coordinate_frame(f.point)
            for rho in rho_fit:
                fb = vertical_flow(base, [rho, 0.0, 0.0])
                v = abs(ric_tilde(fb))
                if v > atol:
                    xs.append(rho)
                    ys.append(math.log(v))
                    probe = fb
    except _FOLDED as exc:
        return _unevaluable("exp_bounded", "boost-growth fit of ric_tilde", exc)
    if len(xs) < 4:
        return ConditionResult(
            "exp_bounded",
            None,
            None,
            "ric_tilde vanishes along the probe boosts; growth class not "
            "measurable",
        )
    design = np.vstack([np.ones(len(xs)), np.asarray(xs), np.square(xs)]).T
    coef, *_ = np.linalg.lstsq(design, np.asarray(ys), rcond=None)
    quad = float(coef[2])
    margin = 0.25 - quad
    return ConditionResult(
        "exp_bounded",
        bool(margin >= 0.0),
        margin,
        f"quadratic rapidity coefficient {quad:.6g} of log|ric_tilde| stays "
        "below 0.25",
        None if margin >= 0.0 else {"frame": frame_record(probe), "quad": quad},
        probe,
    )
