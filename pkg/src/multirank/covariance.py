"""Rank-covariance estimation (continuous, tied, censored) and regularised inversion."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .ranks import DataMatrix, RankTable, compute_ranks

__all__ = [
    "RankCovariance",
    "estimate_covariance",
    "estimate_sigma",
    "estimate_sigma_censored",
    "estimate_sigma_tied",
    "regularised_inverse",
]

#: Default eigenvalue threshold, relative to the largest eigenvalue magnitude.
RELATIVE_EPSILON = 1e-8


@dataclass(frozen=True)
class RankCovariance:
    """Estimated rank covariance together with its thresholded pseudo-inverse.

    ``effective_rank`` counts the eigenvalues above ``epsilon``; it is the
    number of degrees of freedom the quadratic-form tests should use.
    """

    sigma: np.ndarray
    inverse: np.ndarray
    effective_rank: int
    epsilon: float
    variant: str


def _pseudo_inverse(sigma, epsilon):
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be a square matrix")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-12):
        raise ValueError("sigma must be symmetric")
    eigvals, eigvecs = np.linalg.eigh((sigma + sigma.T) / 2.0)
    if epsilon is None:
        epsilon = RELATIVE_EPSILON * float(np.max(np.abs(eigvals), initial=0.0))
        if epsilon <= 0.0:
            epsilon = RELATIVE_EPSILON
    epsilon = float(epsilon)
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    keep = eigvals > epsilon
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise ValueError("covariance matrix has no usable directions (effective rank 0)")
    inv_vals = np.where(keep, 1.0 / np.where(keep, eigvals, 1.0), 0.0)
    inverse = (eigvecs * inv_vals) @ eigvecs.T
    return inverse, rank, epsilon


def regularised_inverse(sigma, epsilon: float | None = None):
    """Eigenvalue-thresholded pseudo-inverse of a symmetric matrix.

    Eigenvalues at or below ``epsilon`` are dropped; the default threshold is
    1e-8 times the largest absolute eigenvalue.  Returns ``(inverse,
    effective_rank)`` and raises when no eigenvalue survives.
    """
    inverse, rank, _ = _pseudo_inverse(sigma, epsilon)
    return inverse, rank


def _finish(sigma: np.ndarray, epsilon, variant: str) -> RankCovariance:
    inverse, rank, eps = _pseudo_inverse(sigma, epsilon)
    sigma.flags.writeable = False
    inverse.flags.writeable = False
    return RankCovariance(
        sigma=sigma, inverse=inverse, effective_rank=rank, epsilon=eps, variant=variant
    )


def estimate_sigma(ranks: RankTable, epsilon: float | None = None) -> RankCovariance:
    """Covariance of the empirical-cdf transforms: 4/n * sum (R/n - 1/2)(R'/n - 1/2).

    Valid for tie-free columns; with ties use :func:`estimate_sigma_tied`.
    For tie-free data every diagonal entry equals 1/3 + 2/(3 n^2) exactly.
    """
    if np.any(ranks.tie_counts > 1):
        raise ValueError("tied values present; use estimate_sigma_tied")
    n = ranks.n
    g = ranks.ranks / n - 0.5
    sigma = (4.0 / n) * (g.T @ g)
    return _finish(sigma, epsilon, "continuous")


def _sigma_tied_from_table(ranks: RankTable, epsilon) -> RankCovariance:
    n = ranks.n
    g = ranks.centered / n  # mid-cdf minus 1/2, exactly centred
    sigma = (4.0 / n) * (g.T @ g)
    return _finish(sigma, epsilon, "tied")


def estimate_sigma_tied(data: DataMatrix, epsilon: float | None = None) -> RankCovariance:
    """Tie-adjusted covariance from centred mid-ranks scaled by 2/n.

    On tie-free data this equals the continuous estimator minus exactly 1/n^2
    in every entry (the two plug-ins centre the empirical c.d.f. differently).
    """
    if data.has_censoring:
        raise ValueError("censored cells present; use estimate_sigma_censored")
    return _sigma_tied_from_table(compute_ranks(data), epsilon)


def estimate_sigma_censored(data: DataMatrix, epsilon: float | None = None) -> RankCovariance:
    """Plug-in covariance built from the empirical c.d.f.s of the censoring bounds.

    Uses g_k(i) = Fbar_k(lower_i) + Funder_k(upper_i^-) - 1 where Fbar / Funder
    are the empirical c.d.f.s of the upper / lower bound columns and the left
    limit counts strict inequalities.  Reduces exactly to the tie-adjusted
    estimator on fully observed data.  Columns carrying no ordering
    information (g identically zero, e.g. fully missing) are flagged as
    degenerate with a warning; the pseudo-inverse drops those directions.
    """
    n, k = data.n, data.k
    g = np.empty((n, k))
    for col in range(k):
        lo = data.lower[:, col]
        up = data.upper[:, col]
        sorted_up = np.sort(up)
        sorted_lo = np.sort(lo)
        upper_cdf_at_lower = np.searchsorted(sorted_up, lo, side="right") / n
        lower_cdf_before_upper = np.searchsorted(sorted_lo, up, side="left") / n
        g[:, col] = upper_cdf_at_lower + lower_cdf_before_upper - 1.0
    degenerate = np.flatnonzero(~np.any(g != 0.0, axis=0))
    if degenerate.size:
        warnings.warn(
            f"column(s) {degenerate.tolist()} carry no ordering information and are "
            "degenerate; they contribute nothing to the test",
            RuntimeWarning,
            stacklevel=2,
        )
    sigma = (g.T @ g) / n
    return _finish(sigma, epsilon, "censored")


def estimate_covariance(data: DataMatrix, epsilon: float | None = None) -> RankCovariance:
    """Dispatch on the data: censored cells -> censored variant, ties -> tied
    variant, otherwise the continuous estimator."""
    if data.has_censoring:
        return estimate_sigma_censored(data, epsilon)
    table = compute_ranks(data)
    if np.any(table.tie_counts > 1):
        return _sigma_tied_from_table(table, epsilon)
    return estimate_sigma(table, epsilon)
