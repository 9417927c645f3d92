"""Command-line interface: CSV ingestion, JSON reports, CSV simulation tables."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

__all__ = ["build_parser", "ingest_csv", "main", "run", "write_csv"]

_THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _configure_threads(threads: int | None) -> None:
    # Must run before numpy is imported for the BLAS pools to pick it up.
    count = threads if threads is not None else os.environ.get("MULTIRANK_THREADS")
    if count is None:
        return
    for var in _THREAD_ENV_VARS:
        os.environ.setdefault(var, str(count))


def _parse_cell(cell: str, row: int, col: int):
    """One CSV cell -> (lower, upper): plain number, 'lo..hi' interval, or ''
    for a missing value."""
    text = cell.strip()
    if text == "":
        return -math.inf, math.inf
    if ".." in text:
        left, _, right = text.partition("..")
        try:
            lo = float(left) if left.strip() else -math.inf
            hi = float(right) if right.strip() else math.inf
        except ValueError:
            raise ValueError(f"cannot parse interval cell {cell!r} at row {row}, column {col}")
        if lo > hi:
            raise ValueError(f"empty interval {cell!r} at row {row}, column {col}")
        return lo, hi
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"cannot parse cell {cell!r} at row {row}, column {col}")
    return value, value


def ingest_csv(path, header: str = "auto"):
    """Read a rectangular CSV into a DataMatrix.

    Cells are plain numbers, 'lo..hi' censoring intervals, or empty for
    missing.  With header='auto' a first row that fails to parse is treated
    as a header.
    """
    import csv as _csv

    from .ranks import DataMatrix

    with open(path, newline="") as handle:
        rows = [row for row in _csv.reader(handle) if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    start = 0
    if header == "yes":
        start = 1
    elif header == "auto":
        try:
            for col, cell in enumerate(rows[0]):
                _parse_cell(cell, 1, col + 1)
        except ValueError:
            start = 1
    width = len(rows[start]) if start < len(rows) else 0
    lower, upper = [], []
    for r, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValueError(f"{path}: row {r} has {len(row)} cells, expected {width}")
        lo_row, up_row = [], []
        for c, cell in enumerate(row, start=1):
            lo, up = _parse_cell(cell, r, c)
            lo_row.append(lo)
            up_row.append(up)
        lower.append(lo_row)
        upper.append(up_row)
    return DataMatrix.from_bounds(lower, upper)


def write_csv(data, path) -> None:
    """Write a DataMatrix back to CSV; finite values round-trip exactly."""
    import csv as _csv

    with open(path, "w", newline="") as handle:
        writer = _csv.writer(handle)
        for i in range(data.n):
            row = []
            for j in range(data.k):
                lo, up = data.lower[i, j], data.upper[i, j]
                if lo == up:
                    row.append(repr(float(lo)))
                elif lo == -math.inf and up == math.inf:
                    row.append("")
                else:
                    left = "" if lo == -math.inf else repr(float(lo))
                    right = "" if up == math.inf else repr(float(up))
                    row.append(f"{left}..{right}")
            writer.writerow(row)


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {key: _jsonable(val) for key, val in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(val) for val in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(val) for val in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _provenance(args: argparse.Namespace) -> dict:
    import numpy
    import scipy

    from . import __version__

    config = {k: v for k, v in vars(args).items() if k != "func" and v is not None}
    return {
        "config": _jsonable(config),
        "seed": getattr(args, "seed", None),
        "versions": {
            "multirank": __version__,
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
        },
    }


def _epsilon_from(args, data) -> float | None:
    # --epsilon is relative to the largest eigenvalue, resolved by the library
    # default when left unset.
    if args.epsilon is None:
        return None
    from .covariance import estimate_covariance

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cov = estimate_covariance(data)
    top = float(abs(__import__("numpy").linalg.eigvalsh(cov.sigma)).max())
    return args.epsilon * top


def _cmd_test(args) -> dict:
    from .homogeneity import multigroup_stat, two_sample_stat

    data = ingest_csv(args.input, args.header)
    epsilon = _epsilon_from(args, data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.groups:
            boundaries = [int(tok) for tok in args.groups.split(",")]
            report = multigroup_stat(data, boundaries, epsilon=epsilon)
        else:
            report = two_sample_stat(data, args.split, epsilon=epsilon)
    return {
        "command": "test",
        "n": data.n,
        "K": data.k,
        "statistic": report.statistic,
        "df": report.df,
        "pvalue": report.pvalue,
        "effective_rank": report.effective_rank,
        "variant": report.variant,
        "warnings": [str(w.message) for w in caught],
    }


def _cmd_scan(args) -> dict:
    from .changepoint import scan_single

    data = ingest_csv(args.input, args.header)
    epsilon = _epsilon_from(args, data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = scan_single(data, epsilon=epsilon, terms=args.terms)
    report = {
        "command": "scan",
        "n": data.n,
        "K": data.k,
        "wstat": result.wstat,
        "argmax": result.argmax,
        "pvalue": result.pvalue,
        "effective_rank": result.effective_rank,
        "kiefer_terms": args.terms,
        "warnings": [str(w.message) for w in caught],
    }
    if args.profile:
        report["profile"] = _jsonable(result.profile)
    return report


def _segment_means(data, boundaries) -> list:
    import numpy as np

    edges = (0, *boundaries, data.n)
    return [
        _jsonable(np.mean(data.values[a:b], axis=0)) for a, b in zip(edges, edges[1:])
    ]


def _cmd_segment(args) -> dict:
    from .changepoint import dp_segment

    data = ingest_csv(args.input, args.header)
    epsilon = _epsilon_from(args, data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        seg = dp_segment(
            data, args.num_changes + 1, min_seg_len=args.min_seg_len, epsilon=epsilon
        )
    return {
        "command": "segment",
        "n": data.n,
        "K": data.k,
        "num_changes": args.num_changes,
        "boundaries": list(seg.boundaries),
        "criterion": seg.criterion,
        "statistic": 4.0 * seg.criterion / data.n**2,
        "segment_costs": list(seg.segment_costs),
        "criterion_by_segments": list(seg.criterion_by_segments),
        "segment_means": _segment_means(data, seg.boundaries),
        "warnings": [str(w.message) for w in caught],
    }


def _cmd_select(args) -> dict:
    from .changepoint import dp_segment, scan_single, select_num_changes

    data = ingest_csv(args.input, args.header)
    epsilon = _epsilon_from(args, data)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        chosen = select_num_changes(
            data,
            max_changes=args.lmax,
            alpha_gate=args.alpha_gate,
            min_seg_len=args.min_seg_len,
            epsilon=epsilon,
        )
        scan = scan_single(data, epsilon=epsilon)
        report = {
            "command": "select",
            "n": data.n,
            "K": data.k,
            "num_changes": chosen,
            "gate_pvalue": scan.pvalue,
            "alpha_gate": args.alpha_gate,
        }
        if chosen > 0:
            seg = dp_segment(data, args.lmax + 1, min_seg_len=args.min_seg_len, epsilon=epsilon)
            chosen_seg = dp_segment(data, chosen + 1, min_seg_len=args.min_seg_len, epsilon=epsilon)
            report["criterion_by_segments"] = list(seg.criterion_by_segments)
            report["boundaries"] = list(chosen_seg.boundaries)
        else:
            report["boundaries"] = []
    report["warnings"] = [str(w.message) for w in caught]
    return report


def _cmd_pvalue(args) -> dict:
    from .asymptotics import kiefer_pvalue

    return {
        "command": "pvalue",
        "K": args.k,
        "statistic": args.stat,
        "pvalue": kiefer_pvalue(args.k, args.stat, args.terms),
        "kiefer_terms": args.terms,
    }


def _cmd_simulate(args) -> dict:
    from .simulation import DETECTORS, Scenario, generate, roc, write_roc_csv

    names = [tok.strip() for tok in args.detectors.split(",")]
    if len(names) != 2:
        raise ValueError("--detectors expects exactly two comma-separated names")
    for name in names:
        if name not in DETECTORS:
            raise ValueError(f"unknown detector {name!r}; choose from {sorted(DETECTORS)}")
    change = () if args.change is None else tuple(int(t) for t in args.change.split(","))
    scenario = Scenario(
        kind=args.kind,
        n=args.n,
        k=args.k,
        change_points=change,
        shift=args.shift,
        correlation=args.rho,
        outlier_fraction=args.outlier_fraction,
        outlier_scale=args.outlier_scale,
        seed=args.seed,
    )
    if args.calibration:
        import numpy as np

        children = np.random.SeedSequence(scenario.seed).spawn(args.reps)
        from .simulation import null_version

        null_scn = null_version(scenario)
        samples = {
            name: [
                DETECTORS[name](generate(null_scn, np.random.default_rng(child)))
                for child in children
            ]
            for name in names
        }
        if args.out:
            import csv as _csv

            with open(args.out, "w", newline="") as handle:
                writer = _csv.writer(handle)
                writer.writerow(["detector", "statistic"])
                for name, vals in samples.items():
                    for v in vals:
                        writer.writerow([name, repr(float(v))])
        return {
            "command": "simulate",
            "mode": "calibration",
            "reps": args.reps,
            "detectors": names,
            "means": {name: float(sum(v) / len(v)) for name, v in samples.items()},
            "out": args.out,
        }
    curve_a, curve_b = roc(DETECTORS[names[0]], DETECTORS[names[1]], scenario, args.reps)
    if args.out:
        write_roc_csv(args.out, {names[0]: curve_a, names[1]: curve_b})
    return {
        "command": "simulate",
        "mode": "roc",
        "reps": args.reps,
        "detectors": names,
        "auc": {names[0]: curve_a.auc, names[1]: curve_b.auc},
        "auc_se": {names[0]: curve_a.auc_se, names[1]: curve_b.auc_se},
        "out": args.out,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multirank",
        description=(
            "Rank-based multivariate homogeneity tests and retrospective "
            "change-point detection"
        ),
    )
    parser.add_argument("--threads", type=int, help="BLAS thread count (env: MULTIRANK_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_input=True):
        if with_input:
            p.add_argument("--input", required=True, help="CSV input path")
            p.add_argument(
                "--header",
                choices=("auto", "yes", "no"),
                default="auto",
                help="whether the CSV carries a header row",
            )
            p.add_argument(
                "--epsilon",
                type=float,
                help="relative eigenvalue threshold for the pseudo-inverse (default 1e-8)",
            )
        p.add_argument("--output", help="write the JSON report here instead of stdout")
        p.add_argument("--seed", type=int, default=0, help="seed for any randomness")

    p_test = sub.add_parser("test", help="homogeneity test at known group boundaries")
    group = p_test.add_mutually_exclusive_group(required=True)
    group.add_argument("--split", type=int, help="two-sample split index n1")
    group.add_argument("--groups", help="comma-separated multi-group boundaries")
    add_common(p_test)
    p_test.set_defaults(func=_cmd_test)

    p_scan = sub.add_parser("scan", help="single change-point scan with p-value")
    p_scan.add_argument("--terms", type=int, default=30, help="series length for the p-value")
    p_scan.add_argument("--profile", action="store_true", help="include the full profile")
    add_common(p_scan)
    p_scan.set_defaults(func=_cmd_scan)

    p_seg = sub.add_parser("segment", help="estimate a known number of change points")
    p_seg.add_argument("--num-changes", type=int, required=True, dest="num_changes")
    p_seg.add_argument("--min-seg-len", type=int, default=1, dest="min_seg_len")
    add_common(p_seg)
    p_seg.set_defaults(func=_cmd_segment)

    p_sel = sub.add_parser("select", help="choose the number of change points")
    p_sel.add_argument("--lmax", type=int, default=20)
    p_sel.add_argument("--alpha-gate", type=float, default=1e-3, dest="alpha_gate")
    p_sel.add_argument("--min-seg-len", type=int, default=1, dest="min_seg_len")
    add_common(p_sel)
    p_sel.set_defaults(func=_cmd_select)

    p_pv = sub.add_parser("pvalue", help="tail probability of the scan statistic")
    p_pv.add_argument("--k", type=int, required=True, help="number of coordinates")
    p_pv.add_argument("--stat", type=float, required=True, help="observed scan statistic")
    p_pv.add_argument("--terms", type=int, default=30)
    add_common(p_pv, with_input=False)
    p_pv.set_defaults(func=_cmd_pvalue)

    p_sim = sub.add_parser("simulate", help="Monte Carlo ROC / calibration experiments")
    p_sim.add_argument("--kind", required=True, help="scenario kind")
    p_sim.add_argument("--n", type=int, default=100)
    p_sim.add_argument("--k", type=int, default=5)
    p_sim.add_argument("--change", help="comma-separated change indices")
    p_sim.add_argument("--shift", type=float, default=0.0)
    p_sim.add_argument("--rho", type=float, default=0.0, help="tridiagonal correlation")
    p_sim.add_argument("--outlier-fraction", type=float, default=0.0, dest="outlier_fraction")
    p_sim.add_argument("--outlier-scale", type=float, default=1.0, dest="outlier_scale")
    p_sim.add_argument("--reps", type=int, default=500)
    p_sim.add_argument(
        "--detectors", default="multirank,hotelling", help="two detector names, comma-separated"
    )
    p_sim.add_argument(
        "--calibration",
        action="store_true",
        help="emit null-distribution samples instead of an ROC",
    )
    p_sim.add_argument("--out", help="CSV output path for the ROC / calibration table")
    add_common(p_sim, with_input=False)
    p_sim.set_defaults(func=_cmd_simulate)

    return parser


def run(args: argparse.Namespace) -> dict:
    """Execute one parsed command and return the JSON-ready report."""
    report = args.func(args)
    report.update(_provenance(args))
    return _jsonable(report)


def _emit(document: dict, output: str | None) -> None:
    text = json.dumps(document, indent=2, sort_keys=True)
    if output:
        with open(output, "w") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_threads(args.threads)
    try:
        report = run(args)
    except Exception as exc:
        _emit({"error": str(exc), "command": getattr(args, "command", None)}, None)
        return 1
    _emit(report, args.output)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
