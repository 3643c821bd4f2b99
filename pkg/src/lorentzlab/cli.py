"""Command-line front end: orchestration and bit-exact output files.

Exit codes: 0 means the command ran (whatever the scientific verdict,
including exploded trajectories and violated criteria), 1 means the verify
battery found residuals above tolerance, 2 means invalid input. Reports go
to stdout and, atomically, to the configured output files; progress lines
go to stderr. The only environment hook is LORENTZ_SEED, overridden in turn
by --seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .checkers import (
    check_lemma7,
    check_lemma11,
    check_theorem8,
    check_theorem12,
)
from .config import ConfigError, RunConfig, load_config
from .curvature import curvature, curvature_oracle
from .diffusion import simulate
from .fiber import (
    FUNCTIONALS,
    RIC_TILDE,
    green_h3,
    lemma9_residual,
    poisson_residual,
    ric_tilde,
    t_tilde,
    vertical_laplacian,
)
from .frames import FrameError, frame_record, sample_frames
from .geometry import DomainError, get_spacetime, sample_points
from .montecarlo import (
    TubeWidthError,
    estimate_explosion,
    exponential_moment,
    geodesic_path,
    hitting_stats,
    tube_test,
)
from .serialize import atomic_write_text, config_echo, to_plain, trajectory_csv


def _out_path(rc: RunConfig, key: str) -> str:
    return os.path.join(rc.output["directory"], rc.output[key])


def _dump(payload: dict) -> str:
    return json.dumps(to_plain(payload), sort_keys=True, indent=2)


def cmd_simulate(rc: RunConfig) -> dict:
    """One trajectory: CSV of samples plus a JSON summary."""
    traj = simulate(rc.diffusion, rc.frame)
    term = traj.termination
    summary = {
        "kind": "simulate_summary",
        "termination": {"verdict": term.verdict, "reason": term.reason,
                        "s": term.s, "label": term.label},
        "zeta": traj.zeta,
        "final_frame": frame_record(traj.final_frame(rc.spacetime)),
        "n_samples": len(traj.samples),
        "transitions": traj.transitions,
        "config": config_echo(rc.diffusion, rc.frame, "strang"),
    }
    atomic_write_text(_out_path(rc, "trajectory"), trajectory_csv(traj))
    atomic_write_text(_out_path(rc, "summary"), _dump(summary) + "\n")
    return summary


def cmd_estimate(rc: RunConfig):
    exp = rc.experiment
    return estimate_explosion(
        rc.diffusion, rc.frame, exp["n_paths"],
        workers=exp["workers"], kernel=exp["kernel"],
    )


def cmd_moments(rc: RunConfig):
    exp = rc.experiment
    return exponential_moment(
        FUNCTIONALS[exp["functional"]], rc.diffusion, rc.frame,
        exp["n_paths"], exp["times"],
        workers=exp["workers"], kernel=exp["kernel"],
    )


def cmd_tube(rc: RunConfig):
    exp = rc.experiment
    core = geodesic_path(rc.frame, exp["length"])
    return tube_test(core, exp["radius"], rc.diffusion, exp["n_paths"],
                     workers=exp["workers"])


def cmd_check(rc: RunConfig):
    exp = rc.experiment
    frames = sample_frames(
        rc.spacetime, exp["n_frames"], seed=rc.diffusion.seed,
        rho_max=exp["rho_max"],
    )
    envelope = {"seed": rc.diffusion.seed, "rho_max": exp["rho_max"]}
    sigma = rc.diffusion.sigma
    atol = exp["atol"]
    theorem = exp["theorem"]
    if theorem == "lemma7":
        return check_lemma7(
            FUNCTIONALS[exp["functional"]], rc.frame, sigma, exp["C"],
            frames, atol=atol, envelope=envelope,
        )
    if theorem == "lemma11":
        return check_lemma11(
            FUNCTIONALS[exp["functional_f"]], FUNCTIONALS[exp["functional_h"]],
            exp["c"], exp["c_prime"], frames, sigma,
            atol=atol, envelope=envelope,
        )
    if theorem == "thm8":
        return check_theorem8(
            rc.spacetime, sigma, exp["C"], frames, atol=atol, envelope=envelope,
        )
    return check_theorem12(
        rc.spacetime, sigma, exp["alpha"], exp["c"], exp["c_prime"], frames,
        atol=atol, envelope=envelope, rho_cut=exp["rho_cut"],
        n_rho=exp["n_rho"],
    )


def _oracle_sweep(sp, n_points: int, seed: int) -> float:
    worst = 0.0
    for point in sample_points(sp, n_points, seed=seed):
        analytic = curvature(point)
        probe = curvature_oracle(point)
        scale = max(float(np.max(np.abs(analytic.riemann))), 1e-10)
        worst = max(
            worst,
            float(np.max(np.abs(analytic.riemann - probe.riemann))) / scale,
            float(np.max(np.abs(analytic.ricci - probe.ricci))) / scale,
        )
    return worst


def _identity_sweep(frames, sigma: float):
    l9 = e51 = 0.0
    for f in frames:
        rt = ric_tilde(f)
        tt = t_tilde(f)
        scale = max(1.0, abs(rt), abs(tt))
        l9 = max(l9, lemma9_residual(f, sigma) / scale)
        resid = abs(vertical_laplacian(RIC_TILDE, f) - 4.0 * (rt + tt))
        e51 = max(e51, resid / scale)
    return l9, e51


def _poisson_sweep(frames) -> float:
    worst = 0.0
    for f in frames:
        worst = max(worst, poisson_residual(f) / max(1.0, abs(ric_tilde(f))))
    return worst


def _green_sweep() -> float:
    grid = np.linspace(0.5, 10.0, 96)

    def lap(h):
        return np.abs(
            (green_h3(grid + h) - 2.0 * green_h3(grid) + green_h3(grid - h))
            / h**2
            + (2.0 / np.tanh(grid))
            * (green_h3(grid + h) - green_h3(grid - h)) / (2.0 * h)
        )

    return float(np.max(np.abs((4.0 * lap(5e-4) - lap(1e-3)) / 3.0)))


# spacetimes whose fiber potential converges (Ricci-flat catalog members)
_POISSON_SCOPE = ("minkowski", "schwarzschild")


def cmd_verify(rc: RunConfig):
    """Residual battery: curvature oracle agreement, generator and vertical
    Laplacian identities, the fiber Poisson equation where its potential
    converges, and harmonicity of the Green kernel."""
    exp = rc.experiment
    tolerances = exp["tolerances"]
    identities = exp["identities"]
    seed = rc.diffusion.seed
    sigma = rc.diffusion.sigma

    results: dict = {ident: {} for ident in identities}
    for sid in exp["spacetimes"]:
        sp = get_spacetime(sid)
        frames = sample_frames(sp, exp["n_frames"], seed=seed,
                               rho_max=exp["rho_max"])
        if "oracle" in identities:
            results["oracle"][sid] = _oracle_sweep(sp, exp["n_points"], seed)
        if "lemma9" in identities or "eq51" in identities:
            l9, e51 = _identity_sweep(frames, sigma)
            if "lemma9" in identities:
                results["lemma9"][sid] = l9
            if "eq51" in identities:
                results["eq51"][sid] = e51
        if "poisson" in identities:
            if sid in _POISSON_SCOPE:
                results["poisson"][sid] = _poisson_sweep(frames)
            else:
                results["poisson"][sid] = "skipped_divergent"
    if "green" in identities:
        results["green"]["fiber"] = _green_sweep()

    failures = []
    for ident in identities:
        tol = tolerances[ident]
        for key, value in results[ident].items():
            if isinstance(value, str):
                continue
            if not value < tol:
                failures.append(f"{ident}/{key}: residual {value:.6g} "
                                f"not below tolerance {tol:.6g}")

    report = {
        "kind": "verify_report",
        "identities": results,
        "tolerances": tolerances,
        "failures": failures,
        "passed": not failures,
        "sampling": {
            "spacetimes": exp["spacetimes"],
            "n_points": exp["n_points"],
            "n_frames": exp["n_frames"],
            "rho_max": exp["rho_max"],
            "seed": seed,
            "sigma": sigma,
        },
    }
    return report, (0 if not failures else 1)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorentzlab",
        description="Frame-bundle diffusion laboratory",
    )
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "integrate one trajectory to CSV + summary JSON",
        "estimate": "explosion-probability ensemble report",
        "check": "evaluate a criterion's hypotheses on sampled frames",
        "verify": "run the residual battery against tolerances",
        "tube": "tube-exit experiment around a geodesic core",
        "moments": "exponential moment curve of a fiber functional",
    }
    for name, desc in descriptions.items():
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed (u64)")
        p.add_argument("--threads", type=int, default=None,
                       help="override ensemble worker count")
        p.add_argument("--out", default=None,
                       help="override the output directory")
        if name == "check":
            p.add_argument("--theorem", default=None,
                           help="criterion to check (overrides the config)")
    return parser


def _resolve_seed(args) -> Optional[int]:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LORENTZ_SEED")
    if env is None:
        return None
    try:
        return int(env, 0)
    except ValueError:
        raise ConfigError(f"LORENTZ_SEED is not an integer: {env!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        overrides = {
            "seed_override": _resolve_seed(args),
            "threads_override": args.threads,
            "out_override": args.out,
        }
        if args.command == "check" and args.theorem is not None:
            overrides["theorem_override"] = args.theorem
        rc = load_config(args.config, args.command, **overrides)

        if args.command == "simulate":
            summary = cmd_simulate(rc)
            print(_dump(summary))
            print(f"trajectory written to {_out_path(rc, 'trajectory')}",
                  file=sys.stderr)
            return 0
        if args.command == "estimate":
            report = cmd_estimate(rc)
            text = report.to_json()
            atomic_write_text(_out_path(rc, "report"), text + "\n")
            print(text)
            return 0
        if args.command == "moments":
            curve = cmd_moments(rc)
            atomic_write_text(_out_path(rc, "curve"), curve.to_csv())
            text = curve.to_json()
            atomic_write_text(_out_path(rc, "report"), text + "\n")
            print(text)
            return 0
        if args.command == "tube":
            report = cmd_tube(rc)
            text = report.to_json()
            atomic_write_text(_out_path(rc, "report"), text + "\n")
            print(text)
            return 0
        if args.command == "check":
            report = cmd_check(rc)
            text = report.to_json()
            atomic_write_text(_out_path(rc, "report"), text + "\n")
            print(text)
            print(f"verdict: {report.verdict}", file=sys.stderr)
            return 0
        report, code = cmd_verify(rc)
        text = _dump(report)
        atomic_write_text(_out_path(rc, "report"), text + "\n")
        print(text)
        for line in report["failures"]:
            print(f"FAIL {line}", file=sys.stderr)
        return code
    except (ConfigError, FrameError, DomainError, TubeWidthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
