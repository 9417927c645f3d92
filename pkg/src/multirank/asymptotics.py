"""Bessel utilities, Brownian-bridge supremum p-values and shift-power calculators."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

__all__ = [
    "KieferTable",
    "ShiftAlternative",
    "are_gaussian_lower_bound",
    "bessel_j",
    "bessel_zero",
    "gaussian_rank_covariance",
    "kiefer_pvalue",
    "kiefer_quantile",
    "kiefer_table",
    "noncentrality_hotelling",
    "noncentrality_multirank_gaussian",
    "noncentrality_multirank_independent",
]

DEFAULT_TERMS = 30
_TAIL_TOLERANCE = 1e-12
# Consecutive zeros of J_nu are at least ~2.99 apart for every nu >= -1/2,
# so a scan step of 1.2 can never bracket two zeros at once.
_SCAN_STEP = 1.2


def bessel_j(nu: float, x):
    """Bessel function of the first kind of real order."""
    return special.jv(nu, x)


@lru_cache(maxsize=512)
def _bessel_zeros(nu: float, count: int) -> tuple[float, ...]:
    """First ``count`` positive zeros of J_nu by sequential sign-change scanning."""

    def f(t: float) -> float:
        return float(special.jv(nu, t))

    zeros: list[float] = []
    # J_nu is positive on (0, first zero); the first zero exceeds nu, and
    # starting at nu avoids the underflow region of the ascending series.
    x = nu if nu >= 0.5 else 1e-6
    fx = f(x)
    while len(zeros) < count:
        nxt = x + _SCAN_STEP
        fn = f(nxt)
        if fn == 0.0:
            zeros.append(nxt)
            nxt += 1e-9
            fn = f(nxt)
        elif (fx > 0.0) != (fn > 0.0):
            zeros.append(
                float(
                    optimize.brentq(
                        f, x, nxt, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200
                    )
                )
            )
        x, fx = nxt, fn
    return tuple(zeros)


def bessel_zero(nu: float, m: int) -> float:
    """m-th positive zero of J_nu for m >= 1 and order nu >= -1/2."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if nu < -0.5:
        raise ValueError("order must be >= -1/2")
    return _bessel_zeros(float(nu), int(m))[m - 1]


@dataclass(frozen=True)
class KieferTable:
    """Series ingredients for the supremum distribution of K squared bridges:
    zeros of J_{(K-2)/2} and J_{K/2} evaluated at them."""

    nu: float
    zeros: np.ndarray
    bessel_at_zeros: np.ndarray
    terms: int


@lru_cache(maxsize=128)
def _kiefer_table_cached(k: int, terms: int) -> KieferTable:
    nu = (k - 2) / 2.0
    zeros = np.array(_bessel_zeros(nu, terms))
    at_zeros = special.jv(k / 2.0, zeros)
    zeros.flags.writeable = False
    at_zeros.flags.writeable = False
    return KieferTable(nu=nu, zeros=zeros, bessel_at_zeros=at_zeros, terms=terms)


def kiefer_table(k: int, terms: int = DEFAULT_TERMS) -> KieferTable:
    if k < 1:
        raise ValueError("k must be >= 1")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    return _kiefer_table_cached(int(k), int(terms))


def kiefer_pvalue(k: int, b: float, terms: int = DEFAULT_TERMS) -> float:
    """Tail probability P(sup_t sum of k squared Brownian bridges > b).

    Evaluates the classical Bessel-zero series; thirty terms suffice for
    k <= 40 at the statistic values that matter.  Terms are accumulated in
    log space so small b cannot overflow the b^(-k/2) prefactor.  Warns when
    the last retained term is not negligible.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if b < 0:
        raise ValueError("b must be nonnegative")
    if b == 0.0:
        return 1.0
    table = kiefer_table(k, terms)
    gamma = table.zeros
    log_terms = (
        math.log(4.0)
        - special.gammaln(k / 2.0)
        - (k / 2.0) * math.log(2.0 * b)
        + (k - 2.0) * np.log(gamma)
        - gamma**2 / (2.0 * b)
        - 2.0 * np.log(np.abs(table.bessel_at_zeros))
    )
    series = np.exp(log_terms)
    if series[-1] > _TAIL_TOLERANCE:
        warnings.warn(
            f"Bessel-zero series tail {series[-1]:.2e} exceeds 1e-12 after "
            f"{terms} terms; the p-value may be inaccurate",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(min(1.0, max(0.0, 1.0 - series.sum())))


def kiefer_quantile(k: int, p: float, terms: int = DEFAULT_TERMS) -> float:
    """Statistic value b with kiefer_pvalue(k, b) == p (inverse in b)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie strictly between 0 and 1")
    lo = 1e-9
    hi = float(k) + 2.0
    while kiefer_pvalue(k, hi, terms) > p:
        hi *= 2.0
        if hi > 1e8:
            raise RuntimeError("failed to bracket the requested quantile")
    return float(
        optimize.brentq(lambda b: kiefer_pvalue(k, b, terms) - p, lo, hi, xtol=1e-12)
    )


@dataclass(frozen=True)
class ShiftAlternative:
    """Local mean-shift alternative: the second sample's density is shifted by
    delta / sqrt(n), with asymptotic split fraction t1.

    ``scales`` are the marginal standard deviations (default 1) and
    ``correlation`` the correlation matrix (default identity); together they
    define the covariance of the observations in the Gaussian case.
    """

    delta: np.ndarray
    t1: float
    scales: np.ndarray | None = None
    correlation: np.ndarray | None = None

    def __post_init__(self):
        delta = np.atleast_1d(np.asarray(self.delta, dtype=float))
        if delta.ndim != 1:
            raise ValueError("delta must be a vector")
        if not 0.0 < self.t1 < 1.0:
            raise ValueError("t1 must lie strictly between 0 and 1")
        k = delta.size
        scales = (
            np.ones(k)
            if self.scales is None
            else np.atleast_1d(np.asarray(self.scales, dtype=float))
        )
        if scales.shape != (k,) or np.any(scales <= 0):
            raise ValueError("scales must be positive and match delta's length")
        corr = (
            np.eye(k)
            if self.correlation is None
            else np.asarray(self.correlation, dtype=float)
        )
        if corr.shape != (k, k):
            raise ValueError("correlation must be K x K")
        if not np.allclose(corr, corr.T, rtol=1e-10, atol=1e-12):
            raise ValueError("correlation must be symmetric")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "correlation", corr)

    @property
    def covariance(self) -> np.ndarray:
        d = self.scales
        return self.correlation * np.outer(d, d)


def noncentrality_hotelling(alt: ShiftAlternative) -> float:
    """Asymptotic noncentrality of the Hotelling two-sample test under the shift."""
    cov = alt.covariance
    try:
        sol = np.linalg.solve(cov, alt.delta)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance matrix is singular") from exc
    return float(alt.t1 * (1.0 - alt.t1) * alt.delta @ sol)


def gaussian_rank_covariance(covariance) -> np.ndarray:
    """Rank covariance of a Gaussian vector: 2/pi * arcsin(C_kl / (2 sigma_k sigma_l)).

    With C the covariance this is the usual arcsin(rho/2) link between the
    Spearman and linear correlations; the diagonal equals 1/3 exactly.
    """
    cov = np.asarray(covariance, dtype=float)
    sigma = np.sqrt(np.diag(cov))
    if np.any(sigma <= 0):
        raise ValueError("covariance must have positive diagonal")
    return (2.0 / math.pi) * np.arcsin(cov / (2.0 * np.outer(sigma, sigma)))


def noncentrality_multirank_gaussian(alt: ShiftAlternative) -> float:
    """Asymptotic noncentrality of the rank test for Gaussian data under the shift.

    Uses the closed forms A = diag(1/sigma) / (2 sqrt(pi)) and the arcsin rank
    covariance; for diagonal covariance the ratio to the Hotelling value is
    exactly 3/pi.
    """
    cov = alt.covariance
    rank_cov = gaussian_rank_covariance(cov)
    a_delta = alt.delta / (2.0 * math.sqrt(math.pi) * alt.scales)
    try:
        sol = np.linalg.solve(rank_cov, a_delta)
    except np.linalg.LinAlgError as exc:
        raise ValueError("rank covariance matrix is singular") from exc
    return float(4.0 * alt.t1 * (1.0 - alt.t1) * a_delta @ sol)


def noncentrality_multirank_independent(delta, t1: float, scales, lambdas) -> float:
    """Noncentrality of the rank test for independent marginals.

    12 t1 (1 - t1) sum_k (delta_k / sigma_k)^2 lambda_k^2, where lambda_k is
    the squared-density integral of the standardised k-th marginal
    (1/(2 sqrt(pi)) for Gaussian, 1/(2 sqrt(3)) for uniform marginals).
    """
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    scales = np.atleast_1d(np.asarray(scales, dtype=float))
    lambdas = np.atleast_1d(np.asarray(lambdas, dtype=float))
    if not 0.0 < t1 < 1.0:
        raise ValueError("t1 must lie strictly between 0 and 1")
    if delta.shape != scales.shape or delta.shape != lambdas.shape:
        raise ValueError("delta, scales and lambdas must have matching lengths")
    if np.any(scales <= 0):
        raise ValueError("scales must be positive")
    return float(12.0 * t1 * (1.0 - t1) * np.sum((delta / scales) ** 2 * lambdas**2))


def are_gaussian_lower_bound(covariance) -> float:
    """Lower bound on the Gaussian efficiency ratio of the rank test:
    (3/pi) (sigma_min^2 / sigma_max^2) (lambda_min(C) / lambda_max(|C|))."""
    cov = np.asarray(covariance, dtype=float)
    diag = np.diag(cov)
    eig_min = float(np.linalg.eigvalsh(cov)[0])
    eig_max_abs = float(np.linalg.eigvalsh(np.abs(cov))[-1])
    return (3.0 / math.pi) * (diag.min() / diag.max()) * (eig_min / eig_max_abs)
