"""Sparse signal recovery from very sparse Gaussian random projections."""

from vsrp.decoder import (
    CoordinateStatus,
    DecodeResult,
    DecoderConfig,
    RatioColumn,
    abs_min_estimate,
    decode,
    ratio_statistics,
    support_detect,
    tie_estimate,
)
from vsrp.sensing import (
    MeasurementSet,
    Signal,
    SparseDesign,
    add_noise,
    generate_design,
    measure,
    subtract_contribution,
)

__version__ = "0.1.0"
