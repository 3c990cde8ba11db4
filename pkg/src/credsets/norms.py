"""l2, Sobolev, weighted-ellipsoid and multiscale sup-norms.

Every norm has a scalar form taking a ``SignalVector`` and a row-wise form
(``*_rows``) taking an ``S x K`` array, which the calibration code uses.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .sequence_model import SignalVector, level_of_coordinates


def default_ellipsoid_weights(K: int) -> np.ndarray:
    # k (1 + log k)**2 grows faster than k log(k)**delta for any delta < 2
    k = np.arange(1, K + 1, dtype=float)
    return k * (1.0 + np.log(k)) ** 2


def default_multiscale_weights(J: int) -> np.ndarray:
    l1 = np.arange(1, J + 2, dtype=float)
    return np.sqrt(l1) * (1.0 + np.log(l1))


def _nondecreasing(a: np.ndarray) -> bool:
    # relative slack absorbs rounding in the ratio
    return bool(np.all(np.diff(a) >= -1e-12 * np.abs(a[1:])))


@dataclass(frozen=True)
class EllipsoidWeightSpec:
    """Weights w_k of the ellipsoid {theta : sum theta_k**2 / w_k <= M**2}."""

    weights: np.ndarray
    delta: float = 1.5
    name: str = "explicit"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("ellipsoid weights must be positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def default(cls, K: int, delta: float = 1.5) -> "EllipsoidWeightSpec":
        return cls(default_ellipsoid_weights(K), delta=delta, name="default-ellipsoid")

    @property
    def K(self) -> int:
        return self.weights.size

    def is_valid(self) -> bool:
        """Finite-range proxy for w_k / (k log(k)**delta) increasing to infinity.

        Only monotonicity of w_k / (k * log(k+1)**delta) on 1..K is checked;
        divergence cannot be decided from a finite prefix.
        """
        if not self.delta > 1:
            return False
        k = np.arange(1, self.K + 1, dtype=float)
        return _nondecreasing(self.weights / (k * np.log(k + 1) ** self.delta))


@dataclass(frozen=True)
class MultiscaleWeightSpec:
    """Per-level weights w_0..w_J of the multiscale sup-norm."""

    weights: np.ndarray
    name: str = "explicit"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float).reshape(-1)
        if w.size == 0 or np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("multiscale weights must be positive and finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def default(cls, J: int) -> "MultiscaleWeightSpec":
        return cls(default_multiscale_weights(J), name="default-multiscale")

    @property
    def J(self) -> int:
        return self.weights.size - 1

    @property
    def K(self) -> int:
        return 2 ** (self.J + 1) - 1

    def is_valid(self) -> bool:
        """Monotonicity of w_l / sqrt(l+1) on 0..J (proxy for w_l / sqrt(l) increasing to infinity)."""
        l1 = np.arange(1, self.J + 2, dtype=float)
        return _nondecreasing(self.weights / np.sqrt(l1))

    def coordinate_weights(self) -> np.ndarray:
        return self.weights[level_of_coordinates(self.J)]


def l2_norm(theta: SignalVector) -> float:
    return float(np.linalg.norm(theta.coeffs))


def sobolev_norm(theta: SignalVector, beta: float) -> float:
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return math.sqrt(sobolev_norm_sq(theta.coeffs, beta))


def sobolev_norm_sq(coeffs: np.ndarray, beta: float) -> float:
    k = np.arange(1, coeffs.size + 1, dtype=float)
    return float(np.sum(coeffs**2 * k ** (2 * beta)))


def ellipsoid_norm(theta: SignalVector, spec: EllipsoidWeightSpec) -> float:
    if spec.K < theta.K:
        raise ValueError(f"weight vector has length {spec.K}, signal has K={theta.K}")
    return float(math.sqrt(np.sum(theta.coeffs**2 / spec.weights[: theta.K])))


def multiscale_norm(theta: SignalVector, spec: MultiscaleWeightSpec) -> float:
    if not theta.is_multiscale:
        raise ValueError("multiscale norm needs a signal in multiscale mode")
    if theta.levels != spec.J:
        raise ValueError(f"signal has levels 0..{theta.levels}, weights cover 0..{spec.J}")
    return max(float(np.max(np.abs(theta.level(l)))) / spec.weights[l] for l in range(spec.J + 1))


def l2_norm_rows(d: np.ndarray) -> np.ndarray:
    return np.sqrt(np.einsum("ij,ij->i", d, d))


def ellipsoid_norm_rows(d: np.ndarray, spec: EllipsoidWeightSpec) -> np.ndarray:
    K = d.shape[1]
    if spec.K < K:
        raise ValueError(f"weight vector has length {spec.K}, rows have length {K}")
    return np.sqrt((d * d) @ (1.0 / spec.weights[:K]))


def multiscale_norm_rows(d: np.ndarray, spec: MultiscaleWeightSpec) -> np.ndarray:
    if d.shape[1] != spec.K:
        raise ValueError(f"rows have length {d.shape[1]}, multiscale weights need K={spec.K}")
    return np.max(np.abs(d) / spec.coordinate_weights(), axis=1)


def write_weights_csv(spec: Union[EllipsoidWeightSpec, MultiscaleWeightSpec], path: Union[str, Path]) -> None:
    # ellipsoid weights are indexed by k >= 1, multiscale weights by level l >= 0
    start = 0 if isinstance(spec, MultiscaleWeightSpec) else 1
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "weight"])
        for i, w in enumerate(spec.weights, start=start):
            writer.writerow([i, repr(float(w))])


def read_weights_csv(path: Union[str, Path]) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = sorted(csv.DictReader(fh), key=lambda r: int(r["index"]))
    return np.array([float(r["weight"]) for r in rows])
