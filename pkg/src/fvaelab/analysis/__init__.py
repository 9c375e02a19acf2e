"""Measurements on datasets and trained models."""

from .curves import CurveSet, iterations_to_reach, learning_curve_compare, reach_table, reference_level
from .entropy import binary_entropy, sequence_entropy
from .latents import (
    AlignmentFit,
    Projection,
    active_units,
    axis_alignment,
    best_fit_frame,
    frame_distance,
    latent_projection,
    latent_traversal,
)
from .mig import FactorGap, MigReport, discrete_entropy, discrete_mutual_info, discretize, mig, mig_from_codes
from .thresholds import (
    AnnealingTrace,
    SweepPoint,
    SweepResult,
    Threshold,
    ThresholdReport,
    annealing_test,
    beta_sweep,
    detect_critical_points,
    estimate_threshold,
    geometric_schedule,
)
from .visual import afterimage, read_pgm, tile, to_uint8, write_pgm, write_png

__all__ = [
    "AlignmentFit", "AnnealingTrace", "CurveSet", "FactorGap", "MigReport", "Projection", "SweepPoint",
    "SweepResult", "Threshold", "ThresholdReport", "active_units", "afterimage", "annealing_test",
    "axis_alignment", "best_fit_frame", "beta_sweep", "binary_entropy", "detect_critical_points",
    "discrete_entropy", "discrete_mutual_info", "discretize", "estimate_threshold", "frame_distance",
    "geometric_schedule", "iterations_to_reach", "latent_projection", "latent_traversal",
    "learning_curve_compare", "mig", "reach_table", "reference_level", "mig_from_codes", "read_pgm", "sequence_entropy", "tile",
    "to_uint8", "write_pgm", "write_png",
]
