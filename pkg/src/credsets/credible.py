"""Credible balls calibrated from posterior draws, and the weak BvM discrepancy."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .norms import (
    EllipsoidWeightSpec,
    MultiscaleWeightSpec,
    ellipsoid_norm_rows,
    l2_norm_rows,
    multiscale_norm_rows,
)
from .posterior import PosteriorDistribution, iter_posterior_draws
from .sequence_model import SignalVector, levels_for_size


@dataclass(frozen=True)
class NormSpec:
    """One of the three ball geometries: ``l2``, ``ellipsoid`` or ``multiscale``."""

    variant: str = "l2"
    weights: Union[EllipsoidWeightSpec, MultiscaleWeightSpec, None] = None
    test_spec: bool = False

    def __post_init__(self):
        if self.variant == "l2":
            if self.weights is not None:
                raise ValueError("l2 norm takes no weights")
        elif self.variant == "ellipsoid":
            if not isinstance(self.weights, EllipsoidWeightSpec):
                raise ValueError("ellipsoid norm needs an EllipsoidWeightSpec")
        elif self.variant == "multiscale":
            if not isinstance(self.weights, MultiscaleWeightSpec):
                raise ValueError("multiscale norm needs a MultiscaleWeightSpec")
        else:
            raise ValueError(f"unknown norm variant {self.variant!r}")
        if self.weights is not None and not self.test_spec and not self.weights.is_valid():
            raise ValueError(f"{self.variant} weights fail the growth condition")

    @classmethod
    def l2(cls) -> "NormSpec":
        return cls("l2")

    @classmethod
    def ellipsoid(cls, K: int) -> "NormSpec":
        return cls("ellipsoid", EllipsoidWeightSpec.default(K))

    @classmethod
    def multiscale(cls, J: int) -> "NormSpec":
        return cls("multiscale", MultiscaleWeightSpec.default(J))

    def check_dimension(self, K: int) -> None:
        if self.variant == "ellipsoid" and self.weights.K < K:
            raise ValueError(f"ellipsoid weights have length {self.weights.K} < K={K}")
        if self.variant == "multiscale" and self.weights.K != K:
            raise ValueError(f"multiscale weights need K={self.weights.K}, got K={K}")

    def quadratic_weights(self, K: int) -> Optional[np.ndarray]:
        """c_k with ||x||**2 = sum c_k x_k**2, or None for the sup-norm."""
        if self.variant == "l2":
            return np.ones(K)
        if self.variant == "ellipsoid":
            return 1.0 / self.weights.weights[:K]
        return None

    def rows(self, d: np.ndarray) -> np.ndarray:
        """Norm of every row of ``d``."""
        d = np.atleast_2d(d)
        if self.variant == "l2":
            return l2_norm_rows(d)
        if self.variant == "ellipsoid":
            return ellipsoid_norm_rows(d, self.weights)
        return multiscale_norm_rows(d, self.weights)

    def __call__(self, coeffs) -> float:
        if isinstance(coeffs, SignalVector):
            coeffs = coeffs.coeffs
        return float(self.rows(np.asarray(coeffs, dtype=float)[None, :])[0])

    def describe(self) -> dict:
        out: dict = {"name": self.variant}
        if self.weights is not None:
            out["weights"] = self.weights.name
            if self.weights.name == "explicit":
                out["weights"] = [float(w) for w in self.weights.weights]
            if self.variant == "ellipsoid":
                out["delta"] = self.weights.delta
        return out


def norm_from_config(cfg: Union[str, dict], K: int) -> NormSpec:
    """Build a NormSpec from ``"l2"`` or ``{"name": ..., "weights": name | list}``."""
    if isinstance(cfg, str):
        cfg = {"name": cfg}
    cfg = dict(cfg)
    name = cfg.pop("name", None)
    weights = cfg.pop("weights", None)
    delta = cfg.pop("delta", 1.5)
    test_spec = bool(cfg.pop("test_spec", False))
    if cfg:
        raise ValueError(f"unknown norm fields: {sorted(cfg)}")
    if name == "l2":
        return NormSpec.l2()
    if name == "ellipsoid":
        if weights in (None, "default-ellipsoid"):
            return NormSpec("ellipsoid", EllipsoidWeightSpec.default(K, delta), test_spec)
        if isinstance(weights, str):
            raise ValueError(f"unknown ellipsoid weight spec {weights!r}")
        return NormSpec("ellipsoid", EllipsoidWeightSpec(weights, delta), test_spec)
    if name == "multiscale":
        J = levels_for_size(K)
        if weights in (None, "default-multiscale"):
            return NormSpec("multiscale", MultiscaleWeightSpec.default(J), test_spec)
        if isinstance(weights, str):
            raise ValueError(f"unknown multiscale weight spec {weights!r}")
        return NormSpec("multiscale", MultiscaleWeightSpec(weights), test_spec)
    raise ValueError(f"unknown norm {name!r}")


def _quantile_rank(S: int, alpha: float) -> int:
    # rounding guard: (1 - 0.2) * 10 evaluates to 8.000000000000002
    return max(1, math.ceil(round((1.0 - alpha) * S, 9)))


def radius_from_distances(distances, alpha: float) -> float:
    """Order statistic d_(ceil((1 - alpha) S)) of the draw-to-center distances."""
    d = np.asarray(distances, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("no draws to calibrate from")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    rank = _quantile_rank(d.size, alpha)
    return float(np.partition(d, rank - 1)[rank - 1])


def draw_distances(draws, center: SignalVector, norm: NormSpec) -> np.ndarray:
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    if draws.size == 0:
        raise ValueError("empty draw matrix")
    if draws.shape[1] != center.K:
        raise ValueError(f"draws have {draws.shape[1]} columns, center has K={center.K}")
    norm.check_dimension(center.K)
    return norm.rows(draws - center.coeffs)


def calibrate_radius(draws, center: SignalVector, norm: NormSpec, alpha: float) -> float:
    return radius_from_distances(draw_distances(draws, center, norm), alpha)


def posterior_distances(
    post: PosteriorDistribution,
    center: SignalVector,
    norms: Sequence[NormSpec],
    S: int,
    rng: np.random.Generator,
    chunk_size: int = 4096,
) -> list[np.ndarray]:
    """Distances of S posterior draws to ``center`` under each norm, without storing the draws.

    Consumes the generator exactly like ``sample_posterior(post, S, rng)``.
    When ``center`` is the posterior mean the draws are never formed: the
    deviation of a draw from the mean is ``sd * g`` for standard normal g.
    """
    if S < 1:
        raise ValueError(f"draw count must be >= 1, got {S}")
    for norm in norms:
        norm.check_dimension(post.K)
    out = [np.empty(S) for _ in norms]
    if not np.array_equal(center.coeffs, post.means):
        start = 0
        for block in iter_posterior_draws(post, S, rng, chunk_size):
            d = block - center.coeffs
            for dist, norm in zip(out, norms):
                dist[start : start + len(block)] = norm.rows(d)
            start += len(block)
        return out

    K = post.K
    quad = [norm.quadratic_weights(K) for norm in norms]
    quad = [None if c is None else c * post.variances for c in quad]
    sup_scale = [
        None if c is not None else post.sds / norm.weights.coordinate_weights() for c, norm in zip(quad, norms)
    ]
    start = 0
    while start < S:
        m = min(chunk_size, S - start)
        g = rng.standard_normal((m, K))
        if any(s is not None for s in sup_scale):
            abs_g = np.abs(g)
        if any(c is not None for c in quad):
            np.square(g, out=g)
        for dist, c, scale in zip(out, quad, sup_scale):
            if c is not None:
                dist[start : start + m] = np.sqrt(g @ c)
            else:
                dist[start : start + m] = np.max(abs_g * scale, axis=1)
        start += m
    return out


@dataclass(frozen=True)
class CredibleBall:
    center: SignalVector
    radius: float
    norm: NormSpec
    alpha: float
    blowup: float = 1.0
    center_ref: Optional[str] = None

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if self.blowup < 1:
            raise ValueError(f"blow-up factor must be >= 1, got {self.blowup}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    @property
    def effective_radius(self) -> float:
        return self.blowup * self.radius

    def distance(self, theta: SignalVector) -> float:
        if theta.K != self.center.K:
            raise ValueError(f"signal has K={theta.K}, ball center has K={self.center.K}")
        return self.norm(theta.coeffs - self.center.coeffs)

    def to_json(self) -> str:
        return json.dumps(
            {
                "norm": self.norm.describe(),
                "alpha": self.alpha,
                "radius": self.radius,
                "blowup": self.blowup,
                "center_ref": self.center_ref,
            },
            sort_keys=True,
        )


def credible_ball(draws, center: SignalVector, norm: NormSpec, alpha: float, blowup: float = 1.0) -> CredibleBall:
    return CredibleBall(center, calibrate_radius(draws, center, norm, alpha), norm, alpha, blowup)


def contains(ball: CredibleBall, theta: SignalVector) -> bool:
    """Boundary-inclusive membership in the blown-up ball."""
    return ball.distance(theta) <= ball.effective_radius


def white_noise_ellipsoid_measure(
    spec: EllipsoidWeightSpec,
    M: float,
    K: int,
    S: int,
    rng: np.random.Generator,
    chunk_size: int = 4096,
) -> tuple[float, float]:
    """Monte Carlo mass of the ellipsoid of radius M under white noise.

    Returns ``(p_hat, standard_error)`` for Pr(sum_{k<=K} g_k**2 / w_k <= M**2).
    """
    if M < 0:
        raise ValueError(f"M must be nonnegative, got {M}")
    if S < 1:
        raise ValueError(f"S must be >= 1, got {S}")
    if spec.K < K:
        raise ValueError(f"weights have length {spec.K} < K={K}")
    inv_w = 1.0 / spec.weights[:K]
    hits = 0
    done = 0
    while done < S:
        m = min(chunk_size, S - done)
        g = rng.standard_normal((m, K))
        hits += int(np.count_nonzero((g * g) @ inv_w <= M * M))
        done += m
    p = hits / S
    return p, math.sqrt(p * (1 - p) / S)


def default_m_grid(a: np.ndarray, b: np.ndarray, points: int = 200) -> np.ndarray:
    lo = min(float(np.min(a)), float(np.min(b)))
    hi = max(float(np.max(a)), float(np.max(b)))
    return np.linspace(lo, hi, points)


def ecdf_sup_distance(a, b, m_grid: Iterable[float]) -> float:
    """sup over the grid of |F_a(M) - F_b(M)| for empirical CDFs (with <=)."""
    a = np.sort(np.asarray(a, dtype=float).reshape(-1))
    b = np.sort(np.asarray(b, dtype=float).reshape(-1))
    grid = np.asarray(list(m_grid) if not isinstance(m_grid, np.ndarray) else m_grid, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    if grid.size == 0:
        raise ValueError("M-grid is empty")
    Fa = np.searchsorted(a, grid, side="right") / a.size
    Fb = np.searchsorted(b, grid, side="right") / b.size
    return float(np.max(np.abs(Fa - Fb)))


def bvm_discrepancy(
    posterior_draws,
    center: SignalVector,
    n: float,
    norm: NormSpec,
    reference_draws,
    m_grid: Optional[Sequence[float]] = None,
    grid_points: int = 200,
) -> float:
    """Grid sup-distance between the laws of sqrt(n)||theta - center|| and ||g||.

    ``reference_draws`` are white-noise vectors; with ``m_grid=None`` a grid of
    ``grid_points`` points spanning the pooled sample range is used.
    """
    post = math.sqrt(n) * draw_distances(posterior_draws, center, norm)
    ref = norm.rows(np.atleast_2d(np.asarray(reference_draws, dtype=float)))
    if m_grid is None:
        m_grid = default_m_grid(post, ref, grid_points)
    return ecdf_sup_distance(post, ref, m_grid)
