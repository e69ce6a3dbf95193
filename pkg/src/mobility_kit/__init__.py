"""Exergame session engine and kinematic analytics.

Submodules: :mod:`session` (pose logs, trajectories), :mod:`game` (levels,
target scripts, hit detection), :mod:`kinematics` and :mod:`hull`
(movement metrics), :mod:`tracking` (pose error), :mod:`stats`
(within-subject tests) and :mod:`synthgen` (synthetic patients).
"""

__version__ = "0.1.0"

from .game import (  # noqa: E402
    DEFAULT_LEVELS,
    GameSession,
    LevelSpec,
    MovementBoundary,
    TargetScript,
    build_level_schedule,
    calibrate,
    replay,
    summarize,
)
from .hull import ConvexHull3, Degenerate, convex_hull  # noqa: E402
from .kinematics import level_metrics, mean_speed, range_of_motion, workspace_volume  # noqa: E402
from .session import (  # noqa: E402
    JointId,
    JointTrajectory,
    LevelSegmentation,
    PoseSample,
    extract_trajectory,
    fill_gaps,
    parse_pose_log,
)
from .stats import RepeatedMeasures, friedman, percent_change, posthoc_bonferroni, rm_anova  # noqa: E402
from .synthgen import PatientProfile, generate, generate_population, healthy_population  # noqa: E402
from .tracking import ape, ape_report, associate, register  # noqa: E402

__all__ = [
    "ConvexHull3", "DEFAULT_LEVELS", "Degenerate", "GameSession", "JointId", "JointTrajectory",
    "LevelSegmentation", "LevelSpec", "MovementBoundary", "PatientProfile", "PoseSample",
    "RepeatedMeasures", "TargetScript", "ape", "ape_report", "associate", "build_level_schedule",
    "calibrate", "convex_hull", "extract_trajectory", "fill_gaps", "friedman", "generate",
    "generate_population", "healthy_population", "level_metrics", "mean_speed", "parse_pose_log",
    "percent_change", "posthoc_bonferroni", "range_of_motion", "register", "replay", "rm_anova",
    "summarize", "workspace_volume",
]
