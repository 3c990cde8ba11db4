"""Writing experiment results: CSV tables, summary.json and manifest.json.

Floats are written with ``repr`` so files round-trip exactly and reruns are
byte-identical. The manifest carries wall time and is the only
non-deterministic file.
"""

from __future__ import annotations

import csv
import json
import math
import platform
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from .. import __version__
from ..posterior import write_posterior_csv
from .runners import (
    BvmReport,
    CoverageReport,
    Figure1Result,
    FreedmanReport,
    ScalingReport,
)


def _cell(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return value


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def write_manifest(out: Path, config: dict, seeds: Any, threads: int, wall_time: float) -> None:
    write_json(
        out / "manifest.json",
        {
            "config": config,
            "master_seed": config.get("master_seed"),
            "replication_seeds": seeds,
            "library_version": __version__,
            "numpy_version": np.__version__,
            "python_version": platform.python_version(),
            "threads": threads,
            "wall_time_seconds": wall_time,
        },
    )


def write_coverage(report: CoverageReport, out: Path) -> dict:
    write_csv(
        out / "replications.csv",
        ["replication", "seed", "covered", "radius", "distance", "scaled_radius", "gamma_hat"],
        (
            [r.replication, r.seed, r.covered, r.radius, r.distance, r.scaled_radius, r.gamma_hat]
            for r in report.records
        ),
    )
    write_json(out / "summary.json", report.summary())
    return {"replication_seeds": [r.seed for r in report.records]}


def write_scaling(report: ScalingReport, out: Path) -> dict:
    write_csv(
        out / "scaling.csv",
        ["n", "K", "replications", "scaled_radius_mean", "scaled_radius_sd", "coverage"],
        ([r.n, r.K, r.replications, r.scaled_radius_mean, r.scaled_radius_sd, r.coverage] for r in report.rows),
    )
    write_csv(
        out / "replications.csv",
        ["n", "replication", "seed", "covered", "radius", "distance", "scaled_radius", "gamma_hat"],
        (
            [rep.n, r.replication, r.seed, r.covered, r.radius, r.distance, r.scaled_radius, r.gamma_hat]
            for rep in report.per_n
            for r in rep.records
        ),
    )
    write_json(out / "summary.json", report.summary())
    return {repr(rep.n): [r.seed for r in rep.records] for rep in report.per_n}


def write_freedman(report: FreedmanReport, out: Path) -> dict:
    fields = list(vars(report.rows[0]))
    write_csv(out / "freedman.csv", fields, ([getattr(r, f) for f in fields] for r in report.rows))
    write_csv(
        out / "replications.csv",
        ["n", "replication", "seed", "squared_error", "posterior_mean_sqdist", "posterior_var_sqdist"],
        (
            [r.n, r.replication, r.seed, r.squared_error, r.posterior_mean_sqdist, r.posterior_var_sqdist]
            for r in report.records
        ),
    )
    write_json(out / "summary.json", report.summary())
    seeds: dict = {}
    for r in report.records:
        seeds.setdefault(repr(r.n), []).append(r.seed)
    return seeds


def write_bvm(report: BvmReport, out: Path) -> dict:
    write_csv(
        out / "bvm.csv",
        ["n", "K", "replications", "discrepancy_mean", "discrepancy_se"],
        ([r.n, r.K, r.replications, r.discrepancy_mean, r.discrepancy_se] for r in report.rows),
    )
    write_csv(
        out / "replications.csv",
        ["n", "replication", "seed", "discrepancy"],
        ([r.n, r.replication, r.seed, r.discrepancy] for r in report.records),
    )
    write_json(out / "summary.json", report.summary())
    seeds: dict = {}
    for r in report.records:
        seeds.setdefault(repr(r.n), []).append(r.seed)
    return seeds


def write_figure1(result: Figure1Result, out: Path) -> dict:
    post = result.posterior
    write_csv(
        out / "truth_mean.csv",
        ["k", "truth", "posterior_mean", "posterior_variance"],
        (
            [k, t, m, v]
            for k, (t, m, v) in enumerate(zip(result.theta0.coeffs, post.means, post.variances), start=1)
        ),
    )
    write_posterior_csv(post, out / "posterior.csv")
    K = result.theta0.K
    write_csv(
        out / "draws_subsample.csv",
        ["draw", "accept_l2", "accept_ellipsoid"] + [f"theta_{k}" for k in range(1, K + 1)],
        (
            [i, result.accept_l2[i], result.accept_ellipsoid[i], *row]
            for i, row in enumerate(result.subsample)
        ),
    )
    write_csv(
        out / "accept_flags.csv",
        ["draw", "distance_l2", "distance_ellipsoid", "accept_l2", "accept_ellipsoid"],
        zip(
            range(result.distances_l2.size),
            result.distances_l2,
            result.distances_ellipsoid,
            result.accept_l2,
            result.accept_ellipsoid,
        ),
    )
    # single-replication run: summary doubles as the replications table
    write_csv(
        out / "replications.csv",
        ["replication", "seed", "radius_l2", "radius_ellipsoid"],
        [[0, result.seed, result.radius_l2, result.radius_ellipsoid]],
    )
    write_json(out / "summary.json", result.summary())
    return {"replication_seeds": [result.seed]}
