"""fracflow: a zonal spectral laboratory for fractional conformal flows on S^n.

Evaluates the conformally covariant operator of order 2*sigma and its inverse
Riesz potential on rotationally symmetric fields, integrates the associated
curvature and fast-diffusion flows, and verifies their monotonicity laws,
extinction asymptotics, and sharp-inequality deficits numerically.
"""

__version__ = "0.1.0"

from .specfun import ConstantSet, SphereParams, constants, log_gamma, multiplier
from .zonal import (
    ZonalField,
    ZonalGrid,
    analyze,
    apply_ksigma,
    apply_psigma,
    apply_psigma_pv,
    build_grid,
    integrate,
    lp_norm,
    synthesize,
)
from .conformal import (
    BubbleParams,
    TimeMap,
    bubble_zonal,
    latitude_of_radius,
    pushforward_radial,
    radius_of_latitude,
    time_map_forward,
    time_map_inverse,
    v_from_w,
)
from .flow import FlowKind, FlowState, SolverConfig, Termination, Trajectory, rhs, run, step

__all__ = [
    "ConstantSet",
    "SphereParams",
    "constants",
    "log_gamma",
    "multiplier",
    "ZonalField",
    "ZonalGrid",
    "analyze",
    "apply_ksigma",
    "apply_psigma",
    "apply_psigma_pv",
    "build_grid",
    "integrate",
    "lp_norm",
    "synthesize",
    "BubbleParams",
    "TimeMap",
    "bubble_zonal",
    "latitude_of_radius",
    "pushforward_radial",
    "radius_of_latitude",
    "time_map_forward",
    "time_map_inverse",
    "v_from_w",
    "FlowKind",
    "FlowState",
    "SolverConfig",
    "Termination",
    "Trajectory",
    "rhs",
    "run",
    "step",
]
