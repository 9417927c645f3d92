"""Single-change scan statistic, dynamic-programming segmentation and model-order selection."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import DEFAULT_TERMS, kiefer_pvalue
from .covariance import RankCovariance, _sigma_tied_from_table, estimate_sigma
from .homogeneity import _check_split
from .ranks import DataMatrix, RankTable, compute_ranks

__all__ = [
    "ScanResult",
    "Segmentation",
    "brute_force_segment",
    "dp_segment",
    "scan_single",
    "segment_cost",
    "select_num_changes",
    "v_vector",
]

_BRUTE_FORCE_LIMIT = 1_000_000


@dataclass(frozen=True)
class ScanResult:
    """Profile of the bridge-normalised statistic and its maximum.

    ``argmax`` is the smallest maximising split; ``pvalue`` comes from the
    Bessel-zero series at the effective rank of the covariance.
    """

    wstat: float
    argmax: int
    profile: np.ndarray
    pvalue: float
    effective_rank: int


@dataclass(frozen=True)
class Segmentation:
    """Estimated change-point configuration.

    ``boundaries`` are the last rows (1-based) of all but the final segment;
    ``criterion`` is the sum of the per-segment costs; for the DP method
    ``criterion_by_segments[l-1]`` is the optimum over exactly l segments.
    """

    boundaries: tuple[int, ...]
    criterion: float
    segment_costs: tuple[float, ...]
    method: str
    criterion_by_segments: tuple[float, ...] = ()


def _prepare(data: DataMatrix, epsilon) -> tuple[RankTable, RankCovariance]:
    if data.has_censoring:
        raise ValueError("change-point operations require fully observed data")
    table = compute_ranks(data)
    if np.any(table.tie_counts > 1):
        cov = _sigma_tied_from_table(table, epsilon)
    else:
        cov = estimate_sigma(table, epsilon)
    return table, cov


def v_vector(ranks: RankTable, n1: int) -> np.ndarray:
    """Split statistic with the split-independent 1/n^(3/2) normalisation:
    equals sqrt(n1 (n - n1)) / n times the two-sample u_vector."""
    n = ranks.n
    n1 = _check_split(n, n1)
    return (2.0 / n**1.5) * ranks.centered[n1:].sum(axis=0)


def scan_single(
    data: DataMatrix, epsilon: float | None = None, terms: int = DEFAULT_TERMS
) -> ScanResult:
    """Maximise the bridge-normalised statistic over all single-split candidates.

    The profile is computed from cumulative centred-rank sums (O(K n) after
    ranking, O(K^2) per split); its maximum converges to the supremum of a sum
    of squared Brownian bridges, which prices the p-value.
    """
    table, cov = _prepare(data, epsilon)
    n, k = table.n, table.k
    if n < max(k + 2, 8):
        raise ValueError(f"need n >= max(K+2, 8) = {max(k + 2, 8)} observations, got {n}")
    # Sum of centred ranks after the split is minus the prefix sum (columns
    # sum to zero exactly), so one cumsum yields every split.
    prefix = np.cumsum(table.centered, axis=0)[:-1]
    v = (-2.0 / n**1.5) * prefix
    profile = np.einsum("ij,jk,ik->i", v, cov.inverse, v)
    profile.flags.writeable = False
    wstat = float(profile.max())
    argmax = int(np.argmax(profile)) + 1
    return ScanResult(
        wstat=wstat,
        argmax=argmax,
        profile=profile,
        pvalue=kiefer_pvalue(cov.effective_rank, wstat, terms),
        effective_rank=cov.effective_rank,
    )


def segment_cost(ranks: RankTable, inv_sigma, i: int, j: int) -> float:
    """Cost of the segment covering rows i..j (1-based, inclusive):
    (j - i + 1) times the quadratic form of the segment's mean centred rank.

    The total criterion over a segmentation is 4/n^2 times the sum of these
    costs, matching the multi-group statistic.
    """
    n = ranks.n
    if not 1 <= i <= j <= n:
        raise ValueError(f"need 1 <= i <= j <= {n}, got ({i}, {j})")
    mean = ranks.centered[i - 1 : j].mean(axis=0)
    return float((j - i + 1) * (mean @ np.asarray(inv_sigma) @ mean))


def _whitening(inverse: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh(inverse)
    keep = eigvals > 0.0
    return eigvecs[:, keep] * np.sqrt(eigvals[keep])


def _delta_matrix(centered: np.ndarray, inverse: np.ndarray, min_seg_len: int) -> np.ndarray:
    """All segment costs at once: entry (q, m) is the cost of rows q+1..m
    (1-based), -inf when shorter than min_seg_len.  O(n^2 K) time via a Gram
    matrix of whitened prefix sums, O(n^2) memory."""
    n = centered.shape[0]
    w = _whitening(inverse)
    q = np.zeros((n + 1, w.shape[1]))
    np.cumsum(centered @ w, axis=0, out=q[1:])
    g = np.einsum("ij,ij->i", q, q)
    num = g[None, :] - 2.0 * (q @ q.T) + g[:, None]
    np.maximum(num, 0.0, out=num)
    length = np.arange(n + 1)[None, :] - np.arange(n + 1)[:, None]
    num /= np.maximum(length, 1)
    num[length < min_seg_len] = -np.inf
    return num


def _validate_dp_args(data: DataMatrix, num_segments: int, min_seg_len: int) -> tuple[int, int]:
    num_segments = int(num_segments)
    min_seg_len = int(min_seg_len)
    if num_segments < 1:
        raise ValueError("num_segments must be >= 1")
    if min_seg_len < 1:
        raise ValueError("min_seg_len must be >= 1")
    if data.n < num_segments * min_seg_len:
        raise ValueError(
            f"n={data.n} cannot hold {num_segments} segments of length >= {min_seg_len}"
        )
    return num_segments, min_seg_len


def dp_segment(
    data: DataMatrix,
    num_segments: int,
    min_seg_len: int = 1,
    epsilon: float | None = None,
) -> Segmentation:
    """Exact maximiser of the additive segment criterion by dynamic programming.

    ``num_segments`` = L segments means L - 1 change points.  Runs in
    O(L n^2 + n^2 K) time; ties resolve to the lexicographically smallest
    boundary tuple.  The optimum for every smaller segment count comes along
    for free and feeds :func:`select_num_changes`.
    """
    num_segments, min_seg_len = _validate_dp_args(data, num_segments, min_seg_len)
    table, cov = _prepare(data, epsilon)
    n = table.n
    d = _delta_matrix(table.centered, cov.inverse, min_seg_len)

    # value[ell][q]: best criterion for splitting rows q+1..n into ell segments.
    value = np.full((num_segments + 1, n + 1), -np.inf)
    value[0, n] = 0.0
    for ell in range(1, num_segments + 1):
        value[ell] = np.max(d + value[ell - 1][None, :], axis=1)

    # Forward backtrack; taking the first argmax at each step yields the
    # lexicographically smallest optimal tuple.
    bounds: list[int] = []
    q = 0
    for ell in range(num_segments, 1, -1):
        row = d[q] + value[ell - 1]
        q = int(np.argmax(row))
        bounds.append(q)

    edges = (0, *bounds, n)
    costs = tuple(float(d[a, b]) for a, b in zip(edges, edges[1:]))
    return Segmentation(
        boundaries=tuple(bounds),
        criterion=float(sum(costs)),
        segment_costs=costs,
        method="dp",
        criterion_by_segments=tuple(float(value[ell, 0]) for ell in range(1, num_segments + 1)),
    )


def brute_force_segment(
    data: DataMatrix,
    num_segments: int,
    min_seg_len: int = 1,
    epsilon: float | None = None,
) -> Segmentation:
    """Exhaustive-enumeration oracle for dp_segment.

    Same objective, same cost table, same lexicographic tie-breaking; refuses
    instances with more than a million boundary tuples.
    """
    num_segments, min_seg_len = _validate_dp_args(data, num_segments, min_seg_len)
    table, cov = _prepare(data, epsilon)
    n = table.n
    if math.comb(n - 1, num_segments - 1) > _BRUTE_FORCE_LIMIT:
        raise ValueError("instance too large for exhaustive enumeration")
    d = _delta_matrix(table.centered, cov.inverse, min_seg_len)

    if num_segments == 1:
        cost = float(d[0, n])
        return Segmentation((), cost, (cost,), "brute", (cost,))

    combos = np.array(
        list(itertools.combinations(range(1, n), num_segments - 1)), dtype=np.int64
    )
    edges = np.concatenate(
        [
            np.zeros((combos.shape[0], 1), dtype=np.int64),
            combos,
            np.full((combos.shape[0], 1), n, dtype=np.int64),
        ],
        axis=1,
    )
    values = d[edges[:, :-1], edges[:, 1:]].sum(axis=1)
    best = int(np.argmax(values))  # first maximum = lexicographically smallest tuple
    if not np.isfinite(values[best]):
        raise ValueError("no feasible segmentation under the segment-length constraint")
    bounds = tuple(int(b) for b in combos[best])
    seg_edges = (0, *bounds, n)
    costs = tuple(float(d[a, b]) for a, b in zip(seg_edges, seg_edges[1:]))
    return Segmentation(bounds, float(sum(costs)), costs, "brute", ())


def _line_rss(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = float(xc @ xc)
    slope = float(xc @ yc) / denom if denom > 0.0 else 0.0
    resid = yc - slope * xc
    return float(resid @ resid)


def _best_kink(values: np.ndarray) -> int:
    """Two-piece least-squares kink location over values[l], l = 0..Lmax changes."""
    lmax = len(values) - 1
    x = np.arange(lmax + 1, dtype=float)
    best_l = 1
    best_rss = np.inf
    for cand in range(1, lmax):
        rss = _line_rss(x[: cand + 1], values[: cand + 1]) + _line_rss(
            x[cand:], values[cand:]
        )
        if rss < best_rss:
            best_l, best_rss = cand, rss
    return best_l


def select_num_changes(
    data: DataMatrix,
    max_changes: int = 20,
    alpha_gate: float = 1e-3,
    min_seg_len: int = 1,
    epsilon: float | None = None,
    terms: int = DEFAULT_TERMS,
) -> int:
    """Slope-heuristic estimate of the number of change points.

    Returns 0 unless the single-change scan is significant at ``alpha_gate``.
    Otherwise fits two least-squares lines to the criterion-versus-count curve
    at every candidate count in 1..max_changes-1 and picks the split with the
    smallest summed residual sum of squares (smallest count on ties).
    """
    if max_changes < 3:
        raise ValueError("max_changes must be >= 3")
    if not 0.0 < alpha_gate < 1.0:
        raise ValueError("alpha_gate must lie strictly between 0 and 1")
    scan = scan_single(data, epsilon=epsilon, terms=terms)
    if scan.pvalue >= alpha_gate:
        return 0
    seg = dp_segment(data, max_changes + 1, min_seg_len=min_seg_len, epsilon=epsilon)
    return _best_kink(np.asarray(seg.criterion_by_segments))
