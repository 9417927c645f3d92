"""Marginal ranks, tie-adjusted centred ranks and censoring-aware comparisons."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DataMatrix",
    "RankTable",
    "compute_ranks",
    "empirical_cdf",
    "pair_kernel",
]


def _as_matrix(values, name: str = "values") -> np.ndarray:
    arr = np.array(values, dtype=float, order="C")
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a one- or two-dimensional array")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DataMatrix:
    """n x K observation matrix with optional per-cell censoring intervals.

    Rows are time-ordered observations, columns are coordinates.  A cell is
    exactly observed when ``lower == values == upper``, interval-censored when
    ``lower < upper`` and missing when the interval is the whole real line.
    Arrays are copied and frozen on construction, so instances can be shared
    freely between threads.
    """

    values: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        values = _as_matrix(self.values)
        lower = _as_matrix(self.lower, "lower")
        upper = _as_matrix(self.upper, "upper")
        if lower.shape != values.shape or upper.shape != values.shape:
            raise ValueError("values, lower and upper must have identical shapes")
        n, k = values.shape
        if n < 2:
            raise ValueError(f"need at least 2 observations, got {n}")
        if k < 1:
            raise ValueError("need at least one coordinate")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("censoring bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError("censoring bounds must satisfy lower <= upper")
        exact = lower == upper
        if np.any(exact & ~np.isfinite(lower)):
            raise ValueError("exactly observed cells must be finite")
        if np.any(exact & (values != lower)):
            raise ValueError("exactly observed cells must carry the bound as value")
        with np.errstate(invalid="ignore"):
            outside = ~exact & ~np.isnan(values) & ((values < lower) | (values > upper))
        if np.any(outside):
            raise ValueError("values must lie inside their censoring interval")
        object.__setattr__(self, "values", _freeze(values))
        object.__setattr__(self, "lower", _freeze(lower))
        object.__setattr__(self, "upper", _freeze(upper))

    @classmethod
    def from_values(cls, values) -> "DataMatrix":
        """Fully observed data: both censoring bounds collapse onto the values."""
        arr = _as_matrix(values)
        if not np.all(np.isfinite(arr)):
            raise ValueError(
                "values must be finite; encode missing cells as the interval "
                "(-inf, +inf) via from_bounds"
            )
        return cls(values=arr, lower=arr.copy(), upper=arr.copy())

    @classmethod
    def from_bounds(cls, lower, upper) -> "DataMatrix":
        """Censored data given as intervals; exactly observed cells have lower == upper."""
        lo = _as_matrix(lower, "lower")
        up = _as_matrix(upper, "upper")
        values = np.where(lo == up, lo, np.nan)
        return cls(values=values, lower=lo, upper=up)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def k(self) -> int:
        return self.values.shape[1]

    @property
    def has_censoring(self) -> bool:
        return bool(np.any(self.lower < self.upper))

    @property
    def has_ties(self) -> bool:
        if self.has_censoring:
            raise ValueError("tie structure is undefined for censored data")
        for col in range(self.k):
            if np.unique(self.values[:, col]).size < self.n:
                return True
        return False


@dataclass(frozen=True)
class RankTable:
    """Per-column counting ranks with tie adjustment.

    ``ranks[j, k]`` counts observations less than or equal to observation j in
    coordinate k, ``tie_counts[j, k]`` counts observations equal to it, and
    ``centered = ranks - (n + tie_counts) / 2``.  Every centred column sums to
    zero exactly, and the whole table is invariant under strictly increasing
    transforms of the columns.
    """

    ranks: np.ndarray
    tie_counts: np.ndarray
    centered: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ranks", _freeze(np.asarray(self.ranks)))
        object.__setattr__(self, "tie_counts", _freeze(np.asarray(self.tie_counts)))
        object.__setattr__(self, "centered", _freeze(np.asarray(self.centered)))

    @property
    def n(self) -> int:
        return self.ranks.shape[0]

    @property
    def k(self) -> int:
        return self.ranks.shape[1]


def compute_ranks(data: DataMatrix) -> RankTable:
    """Rank every column of a fully observed matrix.

    Sorting-based, O(K n log n).  Ties receive the count-based rank
    #{i: x_i <= x_j} together with their multiplicity, so the centred rank
    equals the midrank minus (n + 1)/2.
    """
    if data.has_censoring:
        raise ValueError("ranks are undefined for censored or missing cells")
    v = data.values
    n, k = v.shape
    ranks = np.empty((n, k), dtype=np.int64)
    ties = np.empty((n, k), dtype=np.int64)
    for col in range(k):
        x = v[:, col]
        s = np.sort(x)
        hi = np.searchsorted(s, x, side="right")
        ranks[:, col] = hi
        ties[:, col] = hi - np.searchsorted(s, x, side="left")
    centered = ranks - (n + ties) / 2.0
    return RankTable(ranks=ranks, tie_counts=ties, centered=centered)


def empirical_cdf(data: DataMatrix) -> np.ndarray:
    """Marginal empirical c.d.f. evaluated at each observation: ranks / n."""
    table = compute_ranks(data)
    return table.ranks / data.n


def pair_kernel(x_lower, x_upper, y_lower, y_upper) -> int:
    """Three-way interval comparison: +1 when x is certainly below y, -1 when
    certainly above, 0 when the intervals overlap (incomparable)."""
    if x_lower > x_upper or y_lower > y_upper:
        raise ValueError("intervals must satisfy lower <= upper")
    return int(x_upper <= y_lower) - int(y_upper <= x_lower)
