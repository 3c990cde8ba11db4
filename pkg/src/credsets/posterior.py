"""Conjugate diagonal Gaussian prior, exact posterior and empirical Bayes.

Prior: theta_k ~ N(0, tau**2 * k**(-1 - 2*gamma)) independently.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from .sequence_model import Observation


@dataclass(frozen=True)
class DiagonalGaussianPrior:
    gamma: float
    K: int
    tau: float = 1.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")

    @property
    def variances(self) -> np.ndarray:
        return prior_variances(self.gamma, self.tau, self.K)


def prior_variances(gamma: float, tau: float, K: int) -> np.ndarray:
    k = np.arange(1, K + 1, dtype=float)
    return tau**2 * k ** (-1.0 - 2.0 * gamma)


@dataclass(frozen=True)
class PosteriorDistribution:
    means: np.ndarray
    variances: np.ndarray
    n: float

    def __post_init__(self):
        means = np.array(self.means, dtype=float).reshape(-1)
        variances = np.array(self.variances, dtype=float).reshape(-1)
        if means.shape != variances.shape:
            raise ValueError("means and variances must have equal length")
        if np.any(variances < 0):
            raise ValueError("posterior variances must be nonnegative")
        for arr in (means, variances):
            arr.setflags(write=False)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)

    @property
    def K(self) -> int:
        return self.means.size

    @property
    def sds(self) -> np.ndarray:
        return np.sqrt(self.variances)


def compute_posterior(prior: DiagonalGaussianPrior, obs: Observation) -> PosteriorDistribution:
    if prior.K != obs.K:
        raise ValueError(f"prior has K={prior.K} but observation has length {obs.K}")
    lam = prior.variances
    noise_var = 1.0 / obs.n
    shrink = lam / (lam + noise_var)
    return PosteriorDistribution(shrink * obs.y, shrink * noise_var, obs.n)


def sample_posterior(post: PosteriorDistribution, S: int, rng: np.random.Generator) -> np.ndarray:
    """S x K matrix of independent posterior draws."""
    if S < 1:
        raise ValueError(f"draw count must be >= 1, got {S}")
    return post.means + post.sds * rng.standard_normal((S, post.K))


def iter_posterior_draws(
    post: PosteriorDistribution, S: int, rng: np.random.Generator, chunk_size: int = 4096
) -> Iterator[np.ndarray]:
    """Yield the rows of ``sample_posterior(post, S, rng)`` in blocks.

    The concatenated blocks are identical to a single ``sample_posterior``
    call with the same generator state, so memory can be bounded without
    changing results.
    """
    if S < 1:
        raise ValueError(f"draw count must be >= 1, got {S}")
    done = 0
    while done < S:
        m = min(chunk_size, S - done)
        yield post.means + post.sds * rng.standard_normal((m, post.K))
        done += m


def marginal_log_likelihood(gamma: float, tau: float, obs: Observation) -> float:
    """Log evidence; marginally Y_k ~ N(0, lambda_k + 1/n) independently."""
    if not gamma > 0 or not tau > 0:
        raise ValueError(f"gamma and tau must be positive, got gamma={gamma}, tau={tau}")
    total_var = prior_variances(gamma, tau, obs.K) + 1.0 / obs.n
    return float(-0.5 * np.sum(np.log(2 * math.pi * total_var) + obs.y**2 / total_var))


def empirical_bayes_gamma(obs: Observation, gamma_grid: Sequence[float], tau: float = 1.0) -> float:
    """Grid maximiser of the marginal likelihood; ties go to the smallest gamma."""
    grid = np.asarray(gamma_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("gamma grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("gamma grid must be positive and strictly increasing")
    values = [marginal_log_likelihood(g, tau, obs) for g in grid]
    # np.argmax returns the first maximiser, i.e. the smallest gamma on ties
    return float(grid[int(np.argmax(values))])


def write_posterior_csv(post: PosteriorDistribution, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mean", "variance"])
        for k, (m, v) in enumerate(zip(post.means, post.variances), start=1):
            writer.writerow([k, repr(float(m)), repr(float(v))])


def read_posterior_csv(path: Union[str, Path], n: float) -> PosteriorDistribution:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["k"]))
    return PosteriorDistribution(
        [float(r["mean"]) for r in rows], [float(r["variance"]) for r in rows], n
    )
