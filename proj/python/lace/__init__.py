"""Cortical layer identification from segmented cell polygons."""

from ._core import (
    ArgumentError,
    CellSet,
    Config,
    ConvergenceError,
    GenerationError,
    IoError,
    LaceError,
    NumericalError,
    ParseError,
    RoiMask,
    ValidationError,
    ari,
    bcubed,
    cluster,
    evaluate,
    features,
    kmeans,
    laplace_coordinates,
    load_cells,
    load_mask,
    modularity,
    nmi,
    parse_cells_json,
    run_pipeline,
    synthesize,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
