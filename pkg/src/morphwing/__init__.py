"""Bioinspired morphing-wing linkage, flapping drive, controller and
wind-tunnel reduction toolkit."""
from .errors import (
    BranchAmbiguity,
    InvalidCutoff,
    MorphwingError,
    NoConvergence,
    NonPhysical,
    NoThrustZero,
    NoTrim,
    OutOfRange,
    RankDeficient,
    TooFewMarkers,
    TooFewTrials,
    TooFewTriggers,
)
from .linkage import (
    LinkageDerived,
    LinkageGiven,
    PoseConstraint,
    forward_kinematics,
    reachable_range,
    skeleton_pose,
    synthesize_linkage,
    wingspan,
)
from .crm import CrmConfig, decoupler_gate, flap_amplitude, wingbeat_trajectory
from .controller import ControllerConfig, ControllerState, simulate, step
from .aero import AeroSurface, butterworth_lowpass, fit_surface, roll_moment_analysis, solve_trim
from .flightlog import AttitudeLog, agility_metric, ensemble_stats

__version__ = "0.1.0"
