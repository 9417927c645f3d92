"""Rank-based multivariate homogeneity testing and retrospective change-point detection.

The library combines marginal rank statistics into quadratic-form tests that
are invariant under monotone transforms of each coordinate, estimates multiple
change points by dynamic programming, and prices single-change scans with the
Brownian-bridge supremum series.
"""

from .asymptotics import (
    KieferTable,
    ShiftAlternative,
    are_gaussian_lower_bound,
    bessel_j,
    bessel_zero,
    gaussian_rank_covariance,
    kiefer_pvalue,
    kiefer_quantile,
    kiefer_table,
    noncentrality_hotelling,
    noncentrality_multirank_gaussian,
    noncentrality_multirank_independent,
)
from .changepoint import (
    ScanResult,
    Segmentation,
    brute_force_segment,
    dp_segment,
    scan_single,
    segment_cost,
    select_num_changes,
    v_vector,
)
from .covariance import (
    RankCovariance,
    estimate_covariance,
    estimate_sigma,
    estimate_sigma_censored,
    estimate_sigma_tied,
    regularised_inverse,
)
from .homogeneity import (
    GroupSpec,
    TestReport,
    chi2_sf,
    multigroup_stat,
    two_sample_stat,
    u_vector,
    u_vector_censored,
)
from .ranks import DataMatrix, RankTable, compute_ranks, empirical_cdf, pair_kernel
from .simulation import (
    DETECTORS,
    RocCurve,
    Scenario,
    bonferroni_scan,
    detection_rate_at,
    generate,
    hotelling_scan,
    hotelling_stat,
    multirank_scan,
    null_version,
    roc,
    write_roc_csv,
)

__version__ = "0.1.0"

__all__ = [
    "DETECTORS",
    "DataMatrix",
    "GroupSpec",
    "KieferTable",
    "RankCovariance",
    "RankTable",
    "RocCurve",
    "ScanResult",
    "Scenario",
    "Segmentation",
    "ShiftAlternative",
    "TestReport",
    "are_gaussian_lower_bound",
    "bessel_j",
    "bessel_zero",
    "bonferroni_scan",
    "brute_force_segment",
    "chi2_sf",
    "compute_ranks",
    "detection_rate_at",
    "dp_segment",
    "empirical_cdf",
    "estimate_covariance",
    "estimate_sigma",
    "estimate_sigma_censored",
    "estimate_sigma_tied",
    "gaussian_rank_covariance",
    "generate",
    "hotelling_scan",
    "hotelling_stat",
    "kiefer_pvalue",
    "kiefer_quantile",
    "kiefer_table",
    "multigroup_stat",
    "multirank_scan",
    "noncentrality_hotelling",
    "noncentrality_multirank_gaussian",
    "noncentrality_multirank_independent",
    "null_version",
    "pair_kernel",
    "regularised_inverse",
    "roc",
    "scan_single",
    "segment_cost",
    "select_num_changes",
    "two_sample_stat",
    "u_vector",
    "u_vector_censored",
    "v_vector",
    "write_roc_csv",
]
