"""CSV persistence for datasets and experiment outputs.

All floats are written with 17 significant digits so a round trip is exact.
Output files open with ``#``-prefixed header lines echoing the full run
configuration; everything below the header is a deterministic function of
that configuration (except wall-clock columns, which are measurements).
"""

from __future__ import annotations

import csv

import numpy as np

from . import __version__
from .dgp import Dataset, GroundTruth
from .errors import InvalidDataError
from .evaluation import CoverageRow, RateFit, ReplicationRecord
from .inference import IntervalEstimate

__all__ = [
    "fmt",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_ground_truth_csv",
    "write_records_csv",
    "write_rate_csv",
    "write_intervals_csv",
    "write_coverage_csv",
    "header_lines",
]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def header_lines(config: dict) -> list[str]:
    lines = [f"# catelab version={__version__}"]
    for key, value in config.items():
        lines.append(f"# {key}={value}")
    return lines


def _write(path: str, headers: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in headers:
            fh.write(line + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def write_dataset_csv(path: str, ds: Dataset, headers: list[str] | None = None) -> None:
    cols = [f"x{j + 1}" for j in range(ds.dim)] + ["w", "y"]
    rows = (
        [fmt(v) for v in ds.features[i]] + [str(int(ds.treatment[i])), fmt(ds.outcome[i])]
        for i in range(ds.n)
    )
    _write(path, headers or [], cols, rows)


def write_ground_truth_csv(path: str, gt: GroundTruth, headers: list[str] | None = None) -> None:
    cols = ["mu0", "mu1", "tau", "e", "y0", "y1", "ite"]
    arrays = [
        gt.mu0_vals, gt.mu1_vals, gt.tau, gt.propensity_vals,
        gt.potential_y0, gt.potential_y1, gt.ite,
    ]
    rows = ([fmt(a[i]) for a in arrays] for i in range(len(gt.tau)))
    _write(path, headers or [], cols, rows)


def read_dataset_csv(path: str) -> Dataset:
    """Read a ``x1..xd,w,y`` dataset; malformed rows error with their line number."""
    with open(path, newline="") as fh:
        lineno = 0
        header = None
        feats, ws, ys = [], [], []
        for raw in csv.reader(fh):
            lineno += 1
            if not raw or raw[0].startswith("#"):
                continue
            if header is None:
                header = [c.strip() for c in raw]
                d = len(header) - 2
                expected = [f"x{j + 1}" for j in range(d)] + ["w", "y"]
                if d < 1 or header != expected:
                    raise InvalidDataError(
                        f"line {lineno}: expected header x1..xd,w,y, got {','.join(header)}"
                    )
                continue
            if len(raw) != len(header):
                raise InvalidDataError(
                    f"line {lineno}: expected {len(header)} fields, got {len(raw)}"
                )
            try:
                feats.append([float(v) for v in raw[:-2]])
                w = float(raw[-2])
                y = float(raw[-1])
            except ValueError as exc:
                raise InvalidDataError(f"line {lineno}: {exc}") from exc
            if w not in (0.0, 1.0):
                raise InvalidDataError(
                    f"line {lineno}: treatment must be 0 or 1, got {raw[-2]}"
                )
            ws.append(int(w))
            ys.append(y)
    if header is None or not feats:
        raise InvalidDataError(f"{path}: no data rows found")
    return Dataset(
        features=np.asarray(feats, dtype=float),
        treatment=np.asarray(ws, dtype=np.int64),
        outcome=np.asarray(ys, dtype=float),
    )


def write_records_csv(
    path: str, records: list[ReplicationRecord], headers: list[str] | None = None
) -> None:
    cols = [
        "sim", "learner", "n_train", "n_treated", "m_control",
        "rep", "seed", "mse", "wall_ms",
    ]
    rows = (
        [
            r.sim, r.learner, str(r.n_train), str(r.n_treated), str(r.m_control),
            str(r.rep), str(r.seed), fmt(r.mse), fmt(r.wall_ms),
        ]
        for r in records
    )
    _write(path, headers or [], cols, rows)


def write_rate_csv(
    path: str, fits: dict[str, RateFit], experiment: str, headers: list[str] | None = None
) -> None:
    cols = ["experiment", "learner", "slope", "slope_stderr", "intercept"]
    rows = (
        [experiment, name, fmt(f.slope), fmt(f.slope_stderr), fmt(f.intercept)]
        for name, f in fits.items()
    )
    _write(path, headers or [], cols, rows)


def write_intervals_csv(
    path: str,
    entries: list[tuple[str, str, str, IntervalEstimate]],
    headers: list[str] | None = None,
) -> None:
    """``entries``: (point_id, learner, method, interval) tuples."""
    cols = ["point_id", "learner", "method", "b", "alpha", "point", "sigma", "lower", "upper"]
    rows = (
        [
            pid, learner, method, str(iv.b), fmt(iv.alpha),
            fmt(iv.point), fmt(iv.sigma), fmt(iv.lower), fmt(iv.upper),
        ]
        for pid, learner, method, iv in entries
    )
    _write(path, headers or [], cols, rows)


def write_coverage_csv(
    path: str, rows_in: list[CoverageRow], headers: list[str] | None = None
) -> None:
    cols = ["learner", "method", "nominal", "coverage", "mean_length", "b", "n_points"]
    rows = (
        [
            r.learner, r.method, fmt(r.nominal), fmt(r.coverage),
            fmt(r.mean_length), str(r.b), str(r.n_points),
        ]
        for r in rows_in
    )
    _write(path, headers or [], cols, rows)
