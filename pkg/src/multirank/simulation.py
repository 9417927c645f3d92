"""Scenario generators, baseline detectors and a Monte Carlo ROC harness."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .changepoint import scan_single
from .homogeneity import _check_split
from .ranks import DataMatrix, compute_ranks

__all__ = [
    "DETECTORS",
    "RocCurve",
    "Scenario",
    "bonferroni_scan",
    "detection_rate_at",
    "generate",
    "hotelling_scan",
    "hotelling_stat",
    "multirank_scan",
    "null_version",
    "roc",
    "write_roc_csv",
]

KINDS = (
    "null",
    "cross_mixture",
    "noise_padding",
    "correlated_shift",
    "outlier_contamination",
)

# Diagonal variances of the two equally weighted mixture components of the
# cross-shaped baseline; the change only touches these two coordinates.
_CROSS_VARIANCES = np.array([[4.0, 0.2], [0.2, 4.0]])
_PADDING_STD = 2.5
_PADDING_DIMS = 8


@dataclass(frozen=True)
class Scenario:
    """Synthetic benchmark configuration.

    The same (scenario, seed) pair regenerates bit-identical data.  ``shift``
    may be a scalar (broadcast over the affected coordinates) or a vector;
    ``correlation`` is the common sub/super-diagonal value of a tridiagonal
    correlation matrix; ``outlier_scale`` multiplies the identity covariance
    of the additive contamination.
    """

    kind: str
    n: int = 100
    k: int = 5
    change_points: tuple[int, ...] = ()
    shift: float | tuple[float, ...] = 0.0
    correlation: float = 0.0
    outlier_fraction: float = 0.0
    outlier_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}; choose from {KINDS}")
        if self.n < 4:
            raise ValueError("n must be >= 4")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ValueError("outlier_fraction must lie in [0, 1]")
        if self.outlier_scale <= 0.0:
            raise ValueError("outlier_scale must be positive")
        cps = tuple(int(c) for c in self.change_points)
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("change points must be strictly increasing")
        if cps and (cps[0] < 1 or cps[-1] > self.n - 1):
            raise ValueError(f"change points must lie in 1..{self.n - 1}")
        shift = self.shift if np.isscalar(self.shift) else tuple(float(s) for s in self.shift)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "shift", shift)


def null_version(scenario: Scenario) -> Scenario:
    """The same scenario with the change removed (identical noise draws)."""
    return dataclasses.replace(scenario, change_points=())


def _shift_vector(scenario: Scenario, total_dims: int, affected_dims: int) -> np.ndarray:
    out = np.zeros(total_dims)
    if np.isscalar(scenario.shift):
        out[:affected_dims] = float(scenario.shift)
    else:
        vec = np.asarray(scenario.shift, dtype=float)
        if vec.size > total_dims:
            raise ValueError("shift vector longer than the number of coordinates")
        out[: vec.size] = vec
    return out


def _tridiagonal_cholesky(k: int, rho: float) -> np.ndarray:
    corr = np.eye(k) + rho * (np.eye(k, k=1) + np.eye(k, k=-1))
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"tridiagonal correlation {rho} is not positive definite for K={k}"
        ) from exc


def generate(scenario: Scenario, rng: np.random.Generator | None = None) -> DataMatrix:
    """Draw one dataset for the scenario.

    Change effects are added after all random draws, so paired null and
    alternative replications built from the same generator state share their
    noise exactly.
    """
    rng = np.random.default_rng(scenario.seed) if rng is None else rng
    n = scenario.n

    if scenario.kind in ("cross_mixture", "noise_padding"):
        component = rng.integers(0, 2, size=n)
        x = rng.standard_normal((n, 2)) * np.sqrt(_CROSS_VARIANCES[component])
        if scenario.kind == "noise_padding":
            pad = _PADDING_STD * rng.standard_normal((n, _PADDING_DIMS))
            x = np.concatenate([x, pad], axis=1)
        affected = 2
    elif scenario.kind == "null":
        x = rng.standard_normal((n, scenario.k))
        affected = scenario.k
    elif scenario.kind == "correlated_shift":
        chol = _tridiagonal_cholesky(scenario.k, scenario.correlation)
        x = rng.standard_normal((n, scenario.k)) @ chol.T
        affected = scenario.k
    elif scenario.kind == "outlier_contamination":
        x = rng.standard_normal((n, scenario.k))
        contaminated = rng.random(n) < scenario.outlier_fraction
        noise = rng.standard_normal((n, scenario.k))
        x = x + contaminated[:, None] * math.sqrt(scenario.outlier_scale) * noise
        affected = scenario.k
    else:  # pragma: no cover - guarded by Scenario validation
        raise ValueError(scenario.kind)

    if scenario.change_points:
        delta = _shift_vector(scenario, x.shape[1], affected)
        # Segments alternate between the baseline and the shifted mean, so a
        # single change point shifts everything after it.
        segment = np.searchsorted(np.asarray(scenario.change_points), np.arange(n), "right")
        x = x + (segment % 2)[:, None] * delta
    return DataMatrix.from_values(x)


def multirank_scan(data: DataMatrix) -> float:
    """Detector handle: maximum of the rank scan profile."""
    return scan_single(data).wstat


def hotelling_stat(data: DataMatrix, n1: int) -> float:
    """Two-sample Hotelling statistic at a fixed split.

    Uses the pooled empirical covariance of all observations with the n - 1
    normalisation.
    """
    if data.has_censoring:
        raise ValueError("Hotelling statistics require fully observed data")
    x = data.values
    n = data.n
    n1 = _check_split(n, n1)
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    diff = x[:n1].mean(axis=0) - x[n1:].mean(axis=0)
    try:
        sol = np.linalg.solve(cov, diff)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular empirical covariance") from exc
    return float(n1 * (n - n1) / n * diff @ sol)


def hotelling_scan(data: DataMatrix) -> float:
    """Detector handle: maximum of the Hotelling statistic over all splits."""
    if data.has_censoring:
        raise ValueError("Hotelling statistics require fully observed data")
    x = data.values
    n = data.n
    cov = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    try:
        inv = np.linalg.inv(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular empirical covariance") from exc
    prefix = np.cumsum(x, axis=0)
    total = prefix[-1]
    sizes = np.arange(1, n)[:, None]
    diff = prefix[:-1] / sizes - (total - prefix[:-1]) / (n - sizes)
    weights = sizes[:, 0] * (n - sizes[:, 0]) / n
    stats = weights * np.einsum("ij,jk,ik->i", diff, inv, diff)
    return float(stats.max())


def bonferroni_scan(data: DataMatrix) -> float:
    """Detector handle: largest marginal bridge statistic over coordinates and splits."""
    if data.n < 4:
        raise ValueError("need n >= 4")
    table = compute_ranks(data)
    prefix = np.cumsum(table.centered, axis=0)[:-1]
    v = (-2.0 / data.n**1.5) * prefix
    return float(v.max())


DETECTORS = {
    "multirank": multirank_scan,
    "hotelling": hotelling_scan,
    "bonferroni": bonferroni_scan,
}


@dataclass(frozen=True)
class RocCurve:
    """Empirical ROC curve with its area under the curve.

    ``auc_se`` is the binomial standard error sqrt(auc (1 - auc) / reps).
    """

    thresholds: np.ndarray
    false_alarm_rates: np.ndarray
    detection_rates: np.ndarray
    auc: float
    auc_se: float
    replications: int

    def __post_init__(self):
        for name in ("thresholds", "false_alarm_rates", "detection_rates"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _empirical_auc(null_stats: np.ndarray, alt_stats: np.ndarray) -> float:
    # Mann-Whitney form with ties counted half; equals the trapezoid area of
    # the empirical ROC.
    pooled = np.concatenate([null_stats, alt_stats])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size)
    ranks[order] = np.arange(1, pooled.size + 1)
    # average ranks within tie groups
    sorted_vals = pooled[order]
    tie_start = np.flatnonzero(np.concatenate(([True], sorted_vals[1:] != sorted_vals[:-1])))
    tie_end = np.concatenate((tie_start[1:], [pooled.size]))
    for a, b in zip(tie_start, tie_end):
        if b - a > 1:
            ranks[order[a:b]] = 0.5 * (a + 1 + b)
    n0, n1 = null_stats.size, alt_stats.size
    rank_sum = ranks[n0:].sum()
    return float((rank_sum - n1 * (n1 + 1) / 2.0) / (n0 * n1))


def _empirical_roc(null_stats: np.ndarray, alt_stats: np.ndarray) -> RocCurve:
    thresholds = np.unique(np.concatenate([null_stats, alt_stats]))[::-1]
    sorted_null = np.sort(null_stats)
    sorted_alt = np.sort(alt_stats)
    far = 1.0 - np.searchsorted(sorted_null, thresholds, side="right") / null_stats.size
    det = 1.0 - np.searchsorted(sorted_alt, thresholds, side="right") / alt_stats.size
    thresholds = np.concatenate(([np.inf], thresholds))
    far = np.concatenate(([0.0], far))
    det = np.concatenate(([0.0], det))
    auc = _empirical_auc(null_stats, alt_stats)
    return RocCurve(
        thresholds=thresholds,
        false_alarm_rates=far,
        detection_rates=det,
        auc=auc,
        auc_se=math.sqrt(auc * (1.0 - auc) / null_stats.size),
        replications=int(null_stats.size),
    )


def roc(detector_a, detector_b, scenario: Scenario, reps: int) -> tuple[RocCurve, RocCurve]:
    """Paired-replication empirical ROC curves for two detector handles.

    Each replication draws one null and one alternative dataset from the same
    child seed (common random numbers), evaluates both detectors on both, and
    the curves are built by thresholding at every observed statistic.
    """
    if reps < 100:
        raise ValueError("reps must be >= 100")
    null_scenario = null_version(scenario)
    children = np.random.SeedSequence(scenario.seed).spawn(reps)
    stats = np.empty((2, 2, reps))
    for r, child in enumerate(children):
        try:
            alt_data = generate(scenario, np.random.default_rng(child))
            null_data = generate(null_scenario, np.random.default_rng(child))
            for d, detector in enumerate((detector_a, detector_b)):
                stats[d, 0, r] = detector(null_data)
                stats[d, 1, r] = detector(alt_data)
        except Exception as exc:
            raise RuntimeError(f"detector failed at replication {r}: {exc}") from exc
    return (
        _empirical_roc(stats[0, 0], stats[0, 1]),
        _empirical_roc(stats[1, 0], stats[1, 1]),
    )


def detection_rate_at(curve: RocCurve, false_alarm: float) -> float:
    """Detection rate at the most permissive threshold whose false-alarm rate
    does not exceed the target."""
    feasible = np.flatnonzero(curve.false_alarm_rates <= false_alarm)
    return float(curve.detection_rates[feasible[-1]])


def write_roc_csv(path, curves: dict[str, RocCurve]) -> None:
    """CSV table (detector, threshold, false_alarm, detection) for external plotting."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["detector", "threshold", "false_alarm", "detection"])
        for name, curve in curves.items():
            for t, f, d in zip(curve.thresholds, curve.false_alarm_rates, curve.detection_rates):
                writer.writerow([name, repr(float(t)), repr(float(f)), repr(float(d))])
