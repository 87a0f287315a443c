"""Ratio-statistic decoding: absolute-minimum zero detection and tie recovery.

For a coordinate i and a measurement j whose column contains i, the ratio
z_ij = y_j / s_ij equals x_i exactly whenever no other nonzero coordinate
shares column j. Two coinciding ratios therefore reveal x_i, and a ratio of
zero reveals x_i = 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from vsrp import _kernels
from vsrp.sensing import MeasurementSet, Signal, SparseDesign

__all__ = [
    "CoordinateStatus",
    "DecoderConfig",
    "RatioColumn",
    "RoundStats",
    "DecodeResult",
    "ratio_statistics",
    "abs_min_estimate",
    "tie_estimate",
    "support_detect",
    "decode",
]


class CoordinateStatus(enum.IntEnum):
    ZERO = _kernels.ZERO
    RECOVERED = _kernels.RECOVERED
    UNDETERMINED = _kernels.UNDETERMINED


@dataclass(frozen=True)
class DecoderConfig:
    epsilon: float = 0.0
    tie_tol: float = 1e-10
    max_iterations: int = 4
    min_tie_size: int = 2

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.tie_tol < 0:
            raise ValueError("tie_tol must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.min_tie_size < 2:
            raise ValueError("min_tie_size must be at least 2")


@dataclass(frozen=True)
class RatioColumn:
    """Ratios y_j / s_ij for every measurement j whose column holds coordinate i."""

    coordinate: int
    measurements: np.ndarray
    z: np.ndarray

    def __len__(self):
        return self.z.size


@dataclass(frozen=True)
class RoundStats:
    zeros: int
    ties: int
    undetermined: int
    entries_touched: int


@dataclass
class DecodeResult:
    statuses: np.ndarray
    estimate: Signal
    iterations_used: int
    rounds: list[RoundStats] = field(default_factory=list)
    residual: MeasurementSet | None = None

    def status(self, i: int) -> CoordinateStatus:
        return CoordinateStatus(int(self.statuses[i]))

    def count(self, status: CoordinateStatus) -> int:
        return int(np.count_nonzero(self.statuses == status))

    @property
    def recovered(self) -> np.ndarray:
        return np.flatnonzero(self.statuses == CoordinateStatus.RECOVERED)

    @property
    def undetermined(self) -> np.ndarray:
        return np.flatnonzero(self.statuses == CoordinateStatus.UNDETERMINED)

    @property
    def entries_touched(self) -> int:
        return sum(r.entries_touched for r in self.rounds)


def _check_pair(design: SparseDesign, measurements: MeasurementSet):
    if measurements.M != design.M:
        raise ValueError(f"got {measurements.M} measurements for a design with M={design.M}")


def ratio_statistics(design: SparseDesign, measurements: MeasurementSet, i: int) -> RatioColumn:
    _check_pair(design, measurements)
    if not 0 <= i < design.N:
        raise IndexError(f"coordinate {i} outside [0, {design.N})")
    row_ptr, _, csr_cols, csr_vals = design.row_index
    lo, hi = row_ptr[i], row_ptr[i + 1]
    cols = np.array(csr_cols[lo:hi], dtype=np.int64)
    return RatioColumn(int(i), cols, measurements.y[cols] / csr_vals[lo:hi])


def abs_min_estimate(column: RatioColumn, epsilon: float) -> tuple[float | None, bool]:
    """Smallest-magnitude ratio and whether it falls within ``epsilon`` of zero.

    An empty column gives ``(None, False)``: nothing can be concluded.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    if len(column) == 0:
        return None, False
    v = float(column.z[np.argmin(np.abs(column.z))])
    return v, abs(v) <= epsilon


def tie_estimate(column: RatioColumn, config: DecoderConfig) -> float | None:
    """Value of the unique largest cluster of coinciding ratios, if any.

    Refuses (returns None) when two clusters tie for largest size.
    """
    if len(column) < config.min_tie_size:
        return None
    v = _kernels.tie_value(np.sort(column.z), config.tie_tol, config.min_tie_size)
    return None if np.isnan(v) else float(v)


def support_detect(design: SparseDesign, measurements: MeasurementSet, epsilon: float = 0.0) -> np.ndarray:
    """Coordinates not ruled out as zero by one absolute-minimum scan.

    Coordinates that appear in no measurement are kept as candidates.
    """
    _check_pair(design, measurements)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    best, _ = _kernels.row_minima(
        np.asarray(measurements.y), design.col_ptr, design.rows, design.vals, design.N
    )
    return np.flatnonzero(~(best <= epsilon))


def decode(design: SparseDesign, measurements: MeasurementSet, config: DecoderConfig | None = None) -> DecodeResult:
    """Mixed iterative decoding.

    Each round scans all ratios once, marks coordinates whose smallest ratio
    is within epsilon of zero, runs the tie estimator on the rest, then
    removes newly recovered values from the measurements. Decoding stops
    after a round that recovers nothing or after ``max_iterations`` rounds.
    """
    config = config or DecoderConfig()
    _check_pair(design, measurements)
    status = np.full(design.N, _kernels.UNDETERMINED, dtype=np.int8)
    values = np.zeros(design.N)
    y = np.array(measurements.y, dtype=np.float64)
    rounds = []
    for _ in range(config.max_iterations):
        y, n_zero, n_tie, touched = _kernels.decode_round(
            y, design.col_ptr, design.rows, design.vals, status, values,
            config.epsilon, config.tie_tol, config.min_tie_size,
        )
        undetermined = int(np.count_nonzero(status == _kernels.UNDETERMINED))
        rounds.append(RoundStats(n_zero, n_tie, undetermined, touched))
        if n_tie == 0 or undetermined == 0:
            break
    return DecodeResult(
        statuses=status,
        estimate=Signal(values),
        iterations_used=len(rounds),
        rounds=rounds,
        residual=MeasurementSet(y, sigma=measurements.sigma, noise_seed=measurements.noise_seed),
    )
