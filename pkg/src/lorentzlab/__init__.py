"""Numerical laboratory for Brownian perturbations of geodesic flow on the
orthonormal frame bundle of a Lorentzian manifold.

The package simulates the basic relativistic diffusion: a geodesic spray
drift plus isotropic boost noise in the fiber, with tools to estimate
explosion probabilities, exponential moments of frame functionals, curvature
identities on the fiber, and the hypotheses of diffusion-flavoured
singularity criteria.
"""

from .geometry import (
    DomainError,
    Spacetime,
    SpacetimePoint,
    catalog_ids,
    de_sitter,
    flrw_power,
    function_spacetime,
    get_spacetime,
    minkowski,
    schwarzschild,
)
# The curvature() function itself is not re-exported because it would shadow
# the lorentzlab.curvature submodule; import it from there.
from .curvature import (
    CurvatureData,
    curvature_oracle,
    energy_condition_report,
    kretschmann_scalar,
)
from .frames import (
    Frame,
    FrameError,
    coordinate_frame,
    frame_record,
    geodesic_step,
    orthonormality_defect,
    reorthonormalize,
    sample_frames,
    vertical_flow,
)
from .diffusion import (
    DiffusionConfig,
    HitObserver,
    RecordingObserver,
    SnapshotObserver,
    Trajectory,
    dudley_simulate,
    run_ensemble,
    simulate,
)
from .fiber import (
    FUNCTIONALS,
    ExpBoundednessError,
    FiberFunctional,
    apply_generator,
    compute_U,
    green_h3,
    lemma9_residual,
    poisson_residual,
    ric_tilde,
    t_tilde,
    user_functional,
)
from .checkers import (
    ConditionResult,
    CriterionReport,
    check_lemma7,
    check_lemma11,
    check_theorem8,
    check_theorem12,
)
from .montecarlo import (
    ExplosionReport,
    FramedPath,
    HittingReport,
    MomentCurve,
    Region,
    TubeReport,
    TubeWidthError,
    estimate_explosion,
    exponential_moment,
    geodesic_path,
    hitting_stats,
    tube_test,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionResult",
    "CriterionReport",
    "CurvatureData",
    "DiffusionConfig",
    "DomainError",
    "ExpBoundednessError",
    "ExplosionReport",
    "FUNCTIONALS",
    "FiberFunctional",
    "Frame",
    "FrameError",
    "FramedPath",
    "HitObserver",
    "HittingReport",
    "MomentCurve",
    "RecordingObserver",
    "Region",
    "SnapshotObserver",
    "Spacetime",
    "SpacetimePoint",
    "Trajectory",
    "TubeReport",
    "TubeWidthError",
    "apply_generator",
    "catalog_ids",
    "check_lemma11",
    "check_lemma7",
    "check_theorem12",
    "check_theorem8",
    "compute_U",
    "coordinate_frame",
    "curvature_oracle",
    "de_sitter",
    "dudley_simulate",
    "energy_condition_report",
    "estimate_explosion",
    "exponential_moment",
    "flrw_power",
    "frame_record",
    "function_spacetime",
    "geodesic_path",
    "geodesic_step",
    "get_spacetime",
    "green_h3",
    "hitting_stats",
    "kretschmann_scalar",
    "lemma9_residual",
    "minkowski",
    "orthonormality_defect",
    "poisson_residual",
    "reorthonormalize",
    "ric_tilde",
    "run_ensemble",
    "sample_frames",
    "schwarzschild",
    "simulate",
    "t_tilde",
    "tube_test",
    "user_functional",
    "vertical_flow",
    "wilson_interval",
    "__version__",
]
