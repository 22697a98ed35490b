"""Calibration: workloads, sample collection and least-squares fitting."""

from .builtins import MIN_REPS, calibrate_builtins
from .datagen import ConstRule, IntRule, ListRule, Workload, gen_input
from .fit import (
    FitError,
    ModelFit,
    RankDeficiencyError,
    fit_model,
    householder_qr,
    least_squares,
    residual_stats,
)
from .profile import PlatformProfile, ProfileError
from .samples import SampleMatrix, collect_samples
from .suite import DEFAULT_SIZES, CalibrationProgram, builtin_calibration_suite, check_rank

__all__ = [
    "DEFAULT_SIZES",
    "MIN_REPS",
    "CalibrationProgram",
    "ConstRule",
    "FitError",
    "IntRule",
    "ListRule",
    "ModelFit",
    "PlatformProfile",
    "ProfileError",
    "RankDeficiencyError",
    "SampleMatrix",
    "Workload",
    "builtin_calibration_suite",
    "calibrate_builtins",
    "check_rank",
    "collect_samples",
    "fit_model",
    "gen_input",
    "householder_qr",
    "least_squares",
    "residual_stats",
]
