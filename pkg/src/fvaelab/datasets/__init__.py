"""Procedural datasets, action extraction and the binary dataset container."""

from .actions import ActionSequence, extract_action, sequence_dataset
from .core import ConfigurationError, Factor, FactorSpec, ImageDataset, PlacementError
from .generators import (
    CANVAS,
    RECT_SIZE,
    SUITE_KINDS,
    a4_max_length,
    dsprites_shape_spec,
    gen_a4,
    gen_action_grid,
    gen_dsprites,
    gen_transformation_suite,
    gen_translation_dataset,
    named_dataset,
)
from .io import DatasetFormatError, read_dataset, write_dataset
from .raster import ShapeSpec, coverage, render_shape, shape_extent

__all__ = [
    "ActionSequence",
    "CANVAS",
    "ConfigurationError",
    "DatasetFormatError",
    "Factor",
    "FactorSpec",
    "ImageDataset",
    "PlacementError",
    "RECT_SIZE",
    "SUITE_KINDS",
    "ShapeSpec",
    "a4_max_length",
    "coverage",
    "dsprites_shape_spec",
    "extract_action",
    "gen_a4",
    "gen_action_grid",
    "gen_dsprites",
    "gen_transformation_suite",
    "gen_translation_dataset",
    "named_dataset",
    "read_dataset",
    "render_shape",
    "sequence_dataset",
    "shape_extent",
    "write_dataset",
]
