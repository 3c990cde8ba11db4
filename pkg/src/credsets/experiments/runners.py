"""Replicated Monte Carlo experiments.

Every replication draws from its own generator, seeded by
``replication_seed(master_seed, n, r)``, and consumes it in a fixed order:
K observation-noise normals, then the posterior draws. Replications are
mapped over a thread pool and folded in replication order, so outputs do not
depend on the thread count.
"""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, TypeVar

import numpy as np

from ..credible import (
    NormSpec,
    default_m_grid,
    ecdf_sup_distance,
    posterior_distances,
    radius_from_distances,
)
from ..posterior import (
    DiagonalGaussianPrior,
    PosteriorDistribution,
    compute_posterior,
    empirical_bayes_gamma,
    iter_posterior_draws,
)
from ..rng import generator, replication_seed
from ..sequence_model import Observation, SignalVector, generate_observation
from .config import ExperimentConfig

T = TypeVar("T")

Z95 = statistics.NormalDist().inv_cdf(0.975)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # clamp so rounding never pushes p outside its own interval (p = 0 or 1 in particular)
    return max(0.0, min(p, centre - half)), min(1.0, max(p, centre + half))


def parallel_map(fn: Callable[[int], T], count: int, threads: int = 1) -> list[T]:
    """[fn(0), ..., fn(count - 1)], optionally evaluated on a thread pool."""
    if threads <= 1 or count <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _sample_sd(values: Sequence[float]) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def _sample_var(values: Sequence[float]) -> float:
    return float(np.var(values, ddof=1)) if len(values) > 1 else 0.0


@dataclass
class ReplicationContext:
    """Everything a single replication at fixed n needs."""

    theta0: SignalVector
    n: float
    norm: NormSpec
    S: int
    alpha: Optional[float]
    blowup: float
    gamma: Optional[float]
    gamma_grid: Optional[list]
    tau: float
    master_seed: int
    zero_noise: bool = False
    chunk_size: int = 4096

    @classmethod
    def from_config(cls, cfg: ExperimentConfig, n: float) -> "ReplicationContext":
        K = cfg.truncation(n)
        return cls(
            theta0=cfg.truth_signal(K),
            n=n,
            norm=cfg.norm_spec(K),
            S=cfg.draws,
            alpha=cfg.alpha,
            blowup=cfg.blowup,
            gamma=cfg.prior.get("gamma"),
            gamma_grid=cfg.gamma_grid,
            tau=cfg.tau,
            master_seed=cfg.master_seed,
            zero_noise=cfg.noise == "zero",
            chunk_size=cfg.chunk_size,
        )

    @property
    def K(self) -> int:
        return self.theta0.K

    def seed(self, r: int) -> int:
        return replication_seed(self.master_seed, self.n, r)

    def observe(self, rng: np.random.Generator, seed: int) -> Observation:
        noise = np.zeros(self.K) if self.zero_noise else None
        return generate_observation(self.theta0, self.n, rng=rng, noise=noise, seed_tag=seed)

    def posterior(self, obs: Observation) -> tuple[PosteriorDistribution, float]:
        gamma = self.gamma
        if gamma is None:
            gamma = empirical_bayes_gamma(obs, self.gamma_grid, self.tau)
        prior = DiagonalGaussianPrior(float(gamma), self.K, self.tau)
        return compute_posterior(prior, obs), float(gamma)


@dataclass
class ReplicationRecord:
    replication: int
    seed: int
    covered: bool
    radius: float
    distance: float
    scaled_radius: float
    gamma_hat: float


def coverage_replication(ctx: ReplicationContext, r: int) -> ReplicationRecord:
    seed = ctx.seed(r)
    rng = generator(seed)
    obs = ctx.observe(rng, seed)
    post, gamma = ctx.posterior(obs)
    center = ctx.theta0.with_coeffs(post.means)
    (dist,) = posterior_distances(post, center, [ctx.norm], ctx.S, rng, ctx.chunk_size)
    radius = radius_from_distances(dist, ctx.alpha)
    distance = ctx.norm(ctx.theta0.coeffs - center.coeffs)
    return ReplicationRecord(
        replication=r,
        seed=seed,
        covered=bool(distance <= ctx.blowup * radius),
        radius=radius,
        distance=distance,
        scaled_radius=math.sqrt(ctx.n) * radius,
        gamma_hat=gamma,
    )


@dataclass
class CoverageReport:
    n: float
    K: int
    alpha: float
    blowup: float
    norm: dict
    records: list[ReplicationRecord]
    coverage: float
    wilson_low: float
    wilson_high: float
    scaled_radius_mean: float
    scaled_radius_sd: float

    @property
    def covered_count(self) -> int:
        return sum(rec.covered for rec in self.records)

    def summary(self) -> dict:
        return {
            "kind": "coverage",
            "n": self.n,
            "K": self.K,
            "alpha": self.alpha,
            "blowup": self.blowup,
            "norm": self.norm,
            "replications": len(self.records),
            "covered": self.covered_count,
            "coverage": self.coverage,
            "wilson95": [self.wilson_low, self.wilson_high],
            "scaled_radius_mean": self.scaled_radius_mean,
            "scaled_radius_sd": self.scaled_radius_sd,
        }


def aggregate_coverage(ctx: ReplicationContext, records: list[ReplicationRecord]) -> CoverageReport:
    records = sorted(records, key=lambda rec: rec.replication)
    R = len(records)
    covered = sum(rec.covered for rec in records)
    low, high = wilson_interval(covered, R)
    scaled = [rec.scaled_radius for rec in records]
    return CoverageReport(
        n=ctx.n,
        K=ctx.K,
        alpha=ctx.alpha,
        blowup=ctx.blowup,
        norm=ctx.norm.describe(),
        records=records,
        coverage=covered / R,
        wilson_low=low,
        wilson_high=high,
        scaled_radius_mean=float(np.mean(scaled)),
        scaled_radius_sd=_sample_sd(scaled),
    )


def run_coverage(cfg: ExperimentConfig, threads: Optional[int] = None) -> CoverageReport:
    """Frequentist coverage of the (blown-up) credible ball at a single n."""
    if cfg.replications < 1:
        raise ValueError("replications must be >= 1")
    ctx = ReplicationContext.from_config(cfg, cfg.n)
    records = parallel_map(lambda r: coverage_replication(ctx, r), cfg.replications, threads or cfg.threads)
    return aggregate_coverage(ctx, records)


@dataclass
class ScalingRow:
    n: float
    K: int
    replications: int
    scaled_radius_mean: float
    scaled_radius_sd: float
    coverage: float


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    per_n: list[CoverageReport]

    def summary(self) -> dict:
        return {"kind": "scaling", "rows": [vars(row) for row in self.rows]}


def run_radius_scaling(cfg: ExperimentConfig, threads: Optional[int] = None) -> ScalingReport:
    """Mean and sd of sqrt(n) * r_{alpha,n} across replications, for each n in the grid."""
    reports = []
    for n in cfg.n_grid:
        ctx = ReplicationContext.from_config(cfg, n)
        records = parallel_map(lambda r: coverage_replication(ctx, r), cfg.replications, threads or cfg.threads)
        reports.append(aggregate_coverage(ctx, records))
    rows = [
        ScalingRow(rep.n, rep.K, len(rep.records), rep.scaled_radius_mean, rep.scaled_radius_sd, rep.coverage)
        for rep in reports
    ]
    return ScalingReport(rows, reports)


# --- Freedman diagnostics -------------------------------------------------


@dataclass
class FreedmanRecord:
    n: float
    replication: int
    seed: int
    squared_error: float
    posterior_mean_sqdist: float
    posterior_var_sqdist: float


@dataclass
class FreedmanRow:
    n: float
    K: int
    frequentist_mean: float
    frequentist_var: float
    posterior_mean: float
    posterior_var: float
    mean_ratio: float
    var_ratio: float
    exact_frequentist_var: float
    exact_posterior_var: float
    exact_var_ratio: float


@dataclass
class FreedmanReport:
    rows: list[FreedmanRow]
    records: list[FreedmanRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {"kind": "freedman", "rows": [vars(row) for row in self.rows]}


def squared_l2_moments(theta0: SignalVector, prior: DiagonalGaussianPrior, n: float) -> dict:
    """Exact moments of ||E(theta|Y) - theta0||^2 under P_theta0 and of ||theta - E(theta|Y)||^2 under the posterior.

    With s_k = lambda_k / (lambda_k + 1/n), the estimation error is
    (s_k - 1) theta0_k + s_k g_k / sqrt(n); the posterior deviation is
    sqrt(s_k / n) g_k.
    """
    lam = prior.variances
    s = lam / (lam + 1.0 / n)
    bias = (s - 1.0) * theta0.coeffs
    noise_var = s * s / n
    post_var = s / n
    return {
        "frequentist_mean": float(np.sum(bias**2 + noise_var)),
        "frequentist_var": float(np.sum(2 * noise_var**2 + 4 * bias**2 * noise_var)),
        "posterior_mean": float(np.sum(post_var)),
        "posterior_var": float(np.sum(2 * post_var**2)),
    }


def freedman_replication(ctx: ReplicationContext, r: int) -> FreedmanRecord:
    seed = ctx.seed(r)
    rng = generator(seed)
    obs = ctx.observe(rng, seed)
    post, _ = ctx.posterior(obs)
    sq = np.empty(ctx.S)
    start = 0
    for block in iter_posterior_draws(post, ctx.S, rng, ctx.chunk_size):
        d = block - post.means
        sq[start : start + len(block)] = np.einsum("ij,ij->i", d, d)
        start += len(block)
    err = post.means - ctx.theta0.coeffs
    return FreedmanRecord(
        n=ctx.n,
        replication=r,
        seed=seed,
        squared_error=float(err @ err),
        posterior_mean_sqdist=float(np.mean(sq)),
        posterior_var_sqdist=_sample_var(sq),
    )


def run_freedman(cfg: ExperimentConfig, threads: Optional[int] = None) -> FreedmanReport:
    """Frequentist vs posterior spread of the squared l2 distance, across the n-grid."""
    if len(cfg.n_grid) < 2:
        raise ValueError("freedman needs at least two grid points")
    report = FreedmanReport([])
    for n in cfg.n_grid:
        ctx = ReplicationContext.from_config(cfg, n)
        recs = parallel_map(lambda r: freedman_replication(ctx, r), cfg.replications, threads or cfg.threads)
        report.records.extend(recs)
        sq = [rec.squared_error for rec in recs]
        post_mean = float(np.mean([rec.posterior_mean_sqdist for rec in recs]))
        post_var = float(np.mean([rec.posterior_var_sqdist for rec in recs]))
        freq_var = _sample_var(sq)
        exact = {}
        if ctx.gamma is not None:
            exact = squared_l2_moments(ctx.theta0, DiagonalGaussianPrior(ctx.gamma, ctx.K, ctx.tau), n)
        report.rows.append(
            FreedmanRow(
                n=n,
                K=ctx.K,
                frequentist_mean=float(np.mean(sq)),
                frequentist_var=freq_var,
                posterior_mean=post_mean,
                posterior_var=post_var,
                mean_ratio=float(np.mean(sq)) / post_mean if post_mean > 0 else math.nan,
                var_ratio=freq_var / post_var if post_var > 0 else math.nan,
                exact_frequentist_var=exact.get("frequentist_var", math.nan),
                exact_posterior_var=exact.get("posterior_var", math.nan),
                exact_var_ratio=(
                    exact["frequentist_var"] / exact["posterior_var"] if exact else math.nan
                ),
            )
        )
    return report


# --- weak BvM discrepancy ----------------------------------------------------


@dataclass
class BvmRecord:
    n: float
    replication: int
    seed: int
    discrepancy: float


@dataclass
class BvmRow:
    n: float
    K: int
    replications: int
    discrepancy_mean: float
    discrepancy_se: float


@dataclass
class BvmReport:
    rows: list[BvmRow]
    records: list[BvmRecord] = field(default_factory=list)

    def summary(self) -> dict:
        return {"kind": "bvm", "rows": [vars(row) for row in self.rows]}


def bvm_replication(
    ctx: ReplicationContext, r: int, reference_sd: float = 1.0, grid_points: int = 200
) -> BvmRecord:
    """One posterior, S scaled posterior distances vs S white-noise norms."""
    seed = ctx.seed(r)
    rng = generator(seed)
    obs = ctx.observe(rng, seed)
    post, _ = ctx.posterior(obs)
    center = ctx.theta0.with_coeffs(post.means)
    (dist,) = posterior_distances(post, center, [ctx.norm], ctx.S, rng, ctx.chunk_size)
    scaled = math.sqrt(ctx.n) * dist
    ref = np.empty(ctx.S)
    start = 0
    while start < ctx.S:
        m = min(ctx.chunk_size, ctx.S - start)
        ref[start : start + m] = ctx.norm.rows(reference_sd * rng.standard_normal((m, ctx.K)))
        start += m
    grid = default_m_grid(scaled, ref, grid_points)
    return BvmRecord(ctx.n, r, seed, ecdf_sup_distance(scaled, ref, grid))


def bvm_at_n(cfg: ExperimentConfig, n: float, threads: Optional[int] = None) -> tuple[BvmRow, list[BvmRecord]]:
    ctx = ReplicationContext.from_config(cfg, n)
    ref_sd = math.sqrt(cfg.reference_variance)
    recs = parallel_map(
        lambda r: bvm_replication(ctx, r, ref_sd, cfg.grid_points), cfg.replications, threads or cfg.threads
    )
    values = [rec.discrepancy for rec in recs]
    se = _sample_sd(values) / math.sqrt(len(values))
    return BvmRow(n, ctx.K, len(values), float(np.mean(values)), se), recs


def run_bvm(cfg: ExperimentConfig, threads: Optional[int] = None) -> BvmReport:
    """Mean BvM discrepancy (and its standard error) for each n in the grid."""
    report = BvmReport([])
    for n in cfg.n_grid:
        row, recs = bvm_at_n(cfg, n, threads)
        report.rows.append(row)
        report.records.extend(recs)
    return report


# --- Figure 1 ---------------------------------------------------------------


@dataclass
class Figure1Result:
    n: float
    alpha: float
    theta0: SignalVector
    posterior: PosteriorDistribution
    radius_l2: float
    radius_ellipsoid: float
    distances_l2: np.ndarray
    distances_ellipsoid: np.ndarray
    subsample: np.ndarray
    seed: int
    norm: dict

    @property
    def accept_l2(self) -> np.ndarray:
        return self.distances_l2 <= self.radius_l2

    @property
    def accept_ellipsoid(self) -> np.ndarray:
        return self.distances_ellipsoid <= self.radius_ellipsoid

    def summary(self) -> dict:
        a, b = self.accept_l2, self.accept_ellipsoid
        both = int(np.count_nonzero(a & b))
        either = int(np.count_nonzero(a | b))
        return {
            "kind": "figure1",
            "n": self.n,
            "K": self.theta0.K,
            "alpha": self.alpha,
            "draws": int(a.size),
            "norm": self.norm,
            "radius_l2": self.radius_l2,
            "radius_ellipsoid": self.radius_ellipsoid,
            "accept_fraction_l2": float(np.mean(a)),
            "accept_fraction_ellipsoid": float(np.mean(b)),
            "agreement_rate": float(np.mean(a == b)),
            "jaccard_accepted": both / either if either else 1.0,
            "truth_in_l2_ball": bool(
                np.linalg.norm(self.theta0.coeffs - self.posterior.means) <= self.radius_l2
            ),
        }


def run_figure1(cfg: ExperimentConfig) -> Figure1Result:
    """One replication with S posterior draws, accepted or rejected by the l2 and ellipsoid balls."""
    n = cfg.n
    ctx = ReplicationContext.from_config(cfg, n)
    seed = ctx.seed(0)
    rng = generator(seed)
    obs = ctx.observe(rng, seed)
    post, _ = ctx.posterior(obs)
    center = ctx.theta0.with_coeffs(post.means)
    l2 = NormSpec.l2()
    keep = min(cfg.subsample, ctx.S)
    sub = np.empty((keep, ctx.K))
    d_l2 = np.empty(ctx.S)
    d_ell = np.empty(ctx.S)
    start = 0
    for block in iter_posterior_draws(post, ctx.S, rng, ctx.chunk_size):
        m = len(block)
        if start < keep:
            take = min(keep - start, m)
            sub[start : start + take] = block[:take]
        d = block - center.coeffs
        d_l2[start : start + m] = l2.rows(d)
        d_ell[start : start + m] = ctx.norm.rows(d)
        start += m
    return Figure1Result(
        n=n,
        alpha=cfg.alpha,
        theta0=ctx.theta0,
        posterior=post,
        radius_l2=radius_from_distances(d_l2, cfg.alpha),
        radius_ellipsoid=radius_from_distances(d_ell, cfg.alpha),
        distances_l2=d_l2,
        distances_ellipsoid=d_ell,
        subsample=sub,
        seed=seed,
        norm=ctx.norm.describe(),
    )
