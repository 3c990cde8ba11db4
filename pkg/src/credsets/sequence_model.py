"""Truncated signals in the Gaussian sequence model and noisy observations.

Coefficients are stored 0-based in numpy arrays; coordinate ``k`` (1-based,
as in the model ``Y_k = theta_k + g_k / sqrt(n)``) lives at position ``k - 1``.
Multiscale signals use the wavelet layout ``i = 2**l + k``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

MAX_TRUNCATION = 2**16


def multiscale_index(level: int, position: int) -> int:
    """Linear (1-based) index of the level-``level``, position-``position`` coefficient."""
    if level < 0:
        raise ValueError(f"level must be nonnegative, got {level}")
    if not 0 <= position <= 2**level - 1:
        raise ValueError(f"position {position} out of range for level {level}")
    return 2**level + position


def multiscale_unindex(index: int) -> tuple[int, int]:
    if index < 1:
        raise ValueError(f"linear index must be >= 1, got {index}")
    level = int(index).bit_length() - 1
    return level, index - 2**level


def levels_for_size(K: int) -> int:
    """Return J such that K = 2**(J+1) - 1, or raise."""
    J = (K + 1).bit_length() - 2
    if J < 0 or 2 ** (J + 1) - 1 != K:
        raise ValueError(f"K={K} is not of the form 2**(J+1) - 1")
    return J


def level_of_coordinates(J: int) -> np.ndarray:
    """Level label of every coordinate of a multiscale signal with levels 0..J."""
    return np.repeat(np.arange(J + 1), 2 ** np.arange(J + 1))


def default_truncation(n: float) -> int:
    return int(min(max(round(n), 1), MAX_TRUNCATION))


@dataclass(frozen=True)
class SignalVector:
    """Finite truncation theta_1..theta_K of a sequence in l2.

    ``levels`` is None for single indexing, otherwise the top level J of a
    multiscale layout (K must then equal 2**(J+1) - 1).
    """

    coeffs: np.ndarray
    levels: Optional[int] = None

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("signal must have at least one coefficient")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal coefficients must be finite")
        if self.levels is not None and arr.size != 2 ** (self.levels + 1) - 1:
            raise ValueError(
                f"multiscale signal with J={self.levels} needs {2 ** (self.levels + 1) - 1} "
                f"coefficients, got {arr.size}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @property
    def K(self) -> int:
        return self.coeffs.size

    @property
    def is_multiscale(self) -> bool:
        return self.levels is not None

    def __len__(self) -> int:
        return self.K

    def level(self, l: int) -> np.ndarray:
        if self.levels is None:
            raise ValueError("signal is not in multiscale mode")
        return self.coeffs[2**l - 1 : 2 ** (l + 1) - 1]

    def as_multiscale(self) -> "SignalVector":
        return SignalVector(self.coeffs, levels=levels_for_size(self.K))

    def with_coeffs(self, coeffs) -> "SignalVector":
        return SignalVector(coeffs, levels=self.levels)


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    n: float
    seed_tag: Optional[int] = None

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"n must be positive, got {self.n}")
        arr = np.array(self.y, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "y", arr)

    @property
    def K(self) -> int:
        return self.y.size


def generate_observation(
    theta0: SignalVector,
    n: float,
    rng: Optional[np.random.Generator] = None,
    noise=None,
    seed_tag: Optional[int] = None,
) -> Observation:
    """Draw ``Y_k = theta0_k + g_k / sqrt(n)``.

    Pass ``noise`` to inject the standard normal vector g directly; otherwise
    g is drawn from ``rng`` (K draws, consumed before anything else).
    """
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    if noise is not None:
        g = np.asarray(noise, dtype=float).reshape(-1)
        if g.size != theta0.K:
            raise ValueError(f"injected noise has length {g.size}, signal has K={theta0.K}")
    else:
        if rng is None:
            raise ValueError("either rng or noise must be given")
        g = rng.standard_normal(theta0.K)
    return Observation(theta0.coeffs + g / math.sqrt(n), n, seed_tag)


def polynomial_signal(
    beta: float, amplitude: float, K: Optional[int] = None, levels: Optional[int] = None
) -> SignalVector:
    """theta_k = amplitude * k**(-1/2 - beta), an exactly beta-regular signal."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if levels is not None:
        K = 2 ** (levels + 1) - 1
    if K is None or K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    k = np.arange(1, K + 1, dtype=float)
    return SignalVector(amplitude * k ** (-0.5 - beta), levels=levels)


def lacunary_signal(q: int, K: Optional[int] = None, levels: Optional[int] = None) -> SignalVector:
    """Nonzero only at k = q**(2j), where it equals q**(-j)."""
    if q < 2:
        raise ValueError(f"gap base q must be >= 2, got {q}")
    if levels is not None:
        K = 2 ** (levels + 1) - 1
    if K is None or K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    theta = np.zeros(K)
    j = 0
    while q ** (2 * j) <= K:
        theta[q ** (2 * j) - 1] = float(q) ** (-j)
        j += 1
    return SignalVector(theta, levels=levels)


def _rows(signal: SignalVector) -> Iterator[list]:
    for i, value in enumerate(signal.coeffs, start=1):
        if signal.is_multiscale:
            level, position = multiscale_unindex(i)
            yield [i, level, position, repr(float(value))]
        else:
            yield [i, "", "", repr(float(value))]


def write_signal_csv(signal: SignalVector, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "level", "position", "value"])
        writer.writerows(_rows(signal))


def read_signal_csv(path: Union[str, Path]) -> SignalVector:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no coefficients")
    rows.sort(key=lambda r: int(r["index"]))
    indices = [int(r["index"]) for r in rows]
    if indices != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: indices must cover 1..K exactly")
    values = [float(r["value"]) for r in rows]
    multiscale = any((r.get("level") or "").strip() for r in rows)
    if not multiscale:
        return SignalVector(values)
    for r in rows:
        if multiscale_unindex(int(r["index"])) != (int(r["level"]), int(r["position"])):
            raise ValueError(f"{path}: level/position inconsistent at index {r['index']}")
    return SignalVector(values, levels=levels_for_size(len(values)))
