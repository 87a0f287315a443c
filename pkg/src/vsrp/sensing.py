"""Signals, the sparsified Gaussian design, and linear measurements."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from vsrp import _kernels

__all__ = [
    "Signal",
    "SparseDesign",
    "MeasurementSet",
    "generate_design",
    "design_column",
    "measure",
    "add_noise",
    "subtract_contribution",
    "read_signal",
    "write_signal",
]

_SEED_MASK = (1 << 64) - 1


def _as_seed(seed: int) -> np.uint64:
    return np.uint64(int(seed) & _SEED_MASK)


@dataclass(frozen=True, eq=False)
class Signal:
    """A length-N real vector; K is the number of nonzero entries."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if v.size == 0:
            raise ValueError("signal must have length N >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def K(self) -> int:
        return int(np.count_nonzero(self.values))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    @classmethod
    def from_entries(cls, N: int, entries) -> "Signal":
        v = np.zeros(N)
        for i, x in entries:
            if not 0 <= i < N:
                raise ValueError(f"index {i} outside [0, {N})")
            v[i] = x
        return cls(v)

    @classmethod
    def zeros(cls, N: int) -> "Signal":
        return cls(np.zeros(N))

    def __eq__(self, other):
        if not isinstance(other, Signal):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SparseDesign:
    """Column-major storage of the surviving design entries.

    Column j occupies ``rows[col_ptr[j]:col_ptr[j+1]]`` (strictly increasing
    row indices) with the matching standard-normal values in ``vals``.
    """

    N: int
    M: int
    gamma: float
    seed: int
    col_ptr: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("col_ptr", "rows", "vals"):
            getattr(self, name).setflags(write=False)

    @property
    def nnz(self) -> int:
        return int(self.rows.size)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.rows[lo:hi], self.vals[lo:hi]

    def column_sizes(self) -> np.ndarray:
        return np.diff(self.col_ptr)

    @cached_property
    def row_index(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Row-major view: (row_ptr, pos, csr_cols, csr_vals).

        ``pos[k]`` is the row-major slot of column-major entry k.
        """
        row_ptr, pos, csr_cols = _kernels.build_row_index(self.N, self.col_ptr, self.rows)
        csr_vals = np.empty_like(self.vals)
        csr_vals[pos] = self.vals
        for a in (row_ptr, pos, csr_cols, csr_vals):
            a.setflags(write=False)
        return row_ptr, pos, csr_cols, csr_vals

    def same_as(self, other: "SparseDesign") -> bool:
        return (
            (self.N, self.M, self.gamma, self.seed) == (other.N, other.M, other.gamma, other.seed)
            and np.array_equal(self.col_ptr, other.col_ptr)
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.vals, other.vals)
        )


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    y: np.ndarray
    sigma: float = 0.0
    noise_seed: int | None = None

    def __post_init__(self):
        y = np.array(self.y, dtype=np.float64, copy=True).reshape(-1)
        if not np.all(np.isfinite(y)):
            raise ValueError("measurements must be finite")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    @property
    def M(self) -> int:
        return self.y.size


def _check_shape(N: int, M: int, gamma: float):
    if N < 1 or M < 1:
        raise ValueError(f"need N >= 1 and M >= 1, got N={N}, M={M}")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")


def generate_design(N: int, M: int, gamma: float, seed: int) -> SparseDesign:
    """Sample the sparsified Gaussian design.

    Each entry survives independently with probability ``gamma`` and carries
    an independent N(0, 1) value. Survivors are found by geometric gap
    sampling, so a column costs O(N * gamma) expected work.
    """
    N, M, gamma = int(N), int(M), float(gamma)
    _check_shape(N, M, gamma)
    col_ptr, rows, vals = _kernels.generate_columns(N, M, gamma, _as_seed(seed))
    return SparseDesign(N, M, gamma, int(seed), col_ptr, rows, vals)


def design_column(N: int, gamma: float, seed: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Generate column j alone; identical to ``generate_design(...).column(j)``."""
    _check_shape(int(N), 1, float(gamma))
    return _kernels.generate_one_column(int(N), float(gamma), _as_seed(seed), int(j))


def _check_dim(signal: Signal, design: SparseDesign):
    if signal.N != design.N:
        raise ValueError(f"signal length {signal.N} does not match design N={design.N}")


def measure(signal: Signal, design: SparseDesign) -> MeasurementSet:
    _check_dim(signal, design)
    y = _kernels.measure_columns(signal.values, design.col_ptr, design.rows, design.vals)
    return MeasurementSet(y)


def add_noise(measurements: MeasurementSet, sigma: float, noise_seed: int) -> MeasurementSet:
    """Return a copy with i.i.d. N(0, sigma^2) noise added to every entry."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(int(noise_seed) & _SEED_MASK)
    noise = rng.normal(0.0, sigma, size=measurements.M)
    total = float(np.hypot(measurements.sigma, sigma))
    return MeasurementSet(measurements.y + noise, sigma=total, noise_seed=int(noise_seed))


def subtract_contribution(
    measurements: MeasurementSet, design: SparseDesign, partial: Signal
) -> MeasurementSet:
    """Residual measurements y - partial @ S, touching only nonzero rows of ``partial``."""
    _check_dim(partial, design)
    if measurements.M != design.M:
        raise ValueError("measurement count does not match design M")
    rows = partial.support.astype(np.int64)
    if rows.size == 0:
        return measurements
    row_ptr, _, csr_cols, csr_vals = design.row_index
    y = _kernels.subtract_rows(
        np.asarray(measurements.y), rows, partial.values[rows], row_ptr, csr_cols, csr_vals, 0.0
    )
    return MeasurementSet(y, sigma=measurements.sigma, noise_seed=measurements.noise_seed)


def read_signal(path) -> Signal:
    """Parse the text format: header ``N K`` then K lines of ``index value``."""
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError(f"{path}: empty signal file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'N K'")
    N, K = int(head[0]), int(head[1])
    if len(lines) - 1 != K:
        raise ValueError(f"{path}: header declares K={K} entries, found {len(lines) - 1}")
    entries = []
    seen = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"{path}: bad entry line {ln!r}")
        i = int(parts[0])
        if i in seen:
            raise ValueError(f"{path}: duplicate index {i}")
        seen.add(i)
        entries.append((i, float(parts[1])))
    sig = Signal.from_entries(N, entries)
    if sig.K != K:
        raise ValueError(f"{path}: declared K={K} but {sig.K} entries are nonzero")
    return sig


def write_signal(signal: Signal, path) -> None:
    idx = signal.support
    out = [f"{signal.N} {idx.size}"]
    out += [f"{i} {float(signal.values[i])!r}" for i in idx]
    Path(path).write_text("\n".join(out) + "\n")
