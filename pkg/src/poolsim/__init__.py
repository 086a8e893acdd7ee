"""poolsim: simulator and statistical verification harness for a
mass-preserving planar aggregation process (growing circular pool
absorbing diffusing unit-mass particles)."""

__version__ = "0.1.0"

from .streams import RngStream
from .field import Annulus, sample_ppp_annulus, sample_ppp_box, wrap_periodic
from .engulf import CascadeResult, PoolState, cascade, radius_from_mass
from .trajectory import Trajectory, TrajectoryEvent
from .exact_engine import ExactConfig, JumpScheduler, run_exact, truncation_error_bound
from .box_engine import BoxConfig, BoxState, box_step, run_box
from .branching import (
    DominatingConfig,
    GwParams,
    borel_pmf,
    dominating_trajectory,
    extinction_prob,
    sample_total_progeny,
    survival_lower_bound,
)
from .stats import StatReport
from .analysis import StallParams, ensemble_quantiles, find_stall, mass_audit

__all__ = [
    "__version__",
    "RngStream",
    "Annulus",
    "sample_ppp_annulus",
    "sample_ppp_box",
    "wrap_periodic",
    "CascadeResult",
    "PoolState",
    "cascade",
    "radius_from_mass",
    "Trajectory",
    "TrajectoryEvent",
    "ExactConfig",
    "JumpScheduler",
    "run_exact",
    "truncation_error_bound",
    "BoxConfig",
    "BoxState",
    "box_step",
    "run_box",
    "DominatingConfig",
    "GwParams",
    "borel_pmf",
    "dominating_trajectory",
    "extinction_prob",
    "sample_total_progeny",
    "survival_lower_bound",
    "StatReport",
    "StallParams",
    "ensemble_quantiles",
    "find_stall",
    "mass_audit",
]
