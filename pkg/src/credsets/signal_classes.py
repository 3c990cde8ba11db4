"""Signal-strength conditions: Sobolev balls, self-similarity, polished tail.

The conditions quantify over all N >= N0 of an infinite sequence. On a
truncated signal they are checked for every N whose block fits inside 1..K,
with Sobolev norms taken over the truncation. Block endpoints are inclusive:
``[N, floor(rho N)]`` for self-similarity and polished tail,
``[ceil(N**(1 - eps)), N]`` for relaxed self-similarity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional

import numpy as np

from .norms import sobolev_norm_sq
from .sequence_model import SignalVector


def c_beta(beta: float) -> float:
    """Constant 16 * 2**(2 beta + 1) of the relaxed self-similar class."""
    return 16.0 * 2.0 ** (2.0 * beta + 1.0)


def epsilon_bounds(beta: float) -> tuple[float, float]:
    """(necessary, sufficient) suprema for the window exponent epsilon(beta).

    epsilon < 1/2 is necessary for honest adaptive l2 confidence balls over
    the relaxed classes, epsilon < beta / (2 beta + 1/2) is sufficient.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return 0.5, beta / (2.0 * beta + 0.5)


@dataclass(frozen=True)
class SelfSimilarParams:
    beta: float
    eps: float
    rho: float = 2.0
    N0: int = 1
    B: Optional[float] = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if not self.rho >= 2:
            raise ValueError(f"rho must be >= 2, got {self.rho}")
        if self.N0 < 1:
            raise ValueError(f"N0 must be >= 1, got {self.N0}")


@dataclass(frozen=True)
class PolishedTailParams:
    L0: float
    rho: float = 2.0
    N0: int = 1

    def __post_init__(self):
        if not self.L0 > 0:
            raise ValueError(f"L0 must be positive, got {self.L0}")
        if not self.rho >= 2:
            raise ValueError(f"rho must be >= 2, got {self.rho}")
        if self.N0 < 1:
            raise ValueError(f"N0 must be >= 1, got {self.N0}")


@dataclass(frozen=True)
class RelaxedSelfSimilarParams:
    beta: float
    B: float
    eps: float
    N0: int = 1
    b: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not self.B > 0 or self.b < 0 or self.b >= self.B:
            raise ValueError(f"need 0 <= b < B, got b={self.b}, B={self.B}")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps must lie in (0, 1], got {self.eps}")
        if self.N0 < 1:
            raise ValueError(f"N0 must be >= 1, got {self.N0}")

    @property
    def c_beta(self) -> float:
        return c_beta(self.beta)


@dataclass(frozen=True)
class ClassCheck:
    """Verdict of a class checker; truthy iff the condition holds on the checked range."""

    condition: str
    passed: bool
    first_violation: Optional[int]
    checked_range: tuple[int, int]
    reason: str = ""

    def __bool__(self) -> bool:
        return self.passed

    def to_dict(self) -> dict:
        out = asdict(self)
        out["checked_range"] = list(self.checked_range)
        return out


def _energy_prefix(coeffs: np.ndarray) -> np.ndarray:
    """prefix[i] = sum of theta_k**2 for k <= i (prefix[0] = 0)."""
    return np.concatenate(([0.0], np.cumsum(coeffs**2)))


def _first_false(ok: np.ndarray, Ns: np.ndarray) -> Optional[int]:
    bad = np.flatnonzero(~ok)
    return int(Ns[bad[0]]) if bad.size else None


def _block_ends(Ns: np.ndarray, rho: float) -> np.ndarray:
    # floor(rho N), guarded against products like 2.2 * 5 = 11.000000000000002
    return np.floor(np.round(rho * Ns, 9)).astype(int)


def relaxed_block_start(N: int, eps: float) -> int:
    """ceil(N**(1 - eps)), guarded against roundoff in the power."""
    return max(1, math.ceil(round(N ** (1.0 - eps), 9)))


def in_sobolev_ball(theta: SignalVector, beta: float, B: float) -> bool:
    if beta < 0 or not B > 0:
        raise ValueError(f"need beta >= 0 and B > 0, got beta={beta}, B={B}")
    return math.sqrt(sobolev_norm_sq(theta.coeffs, beta)) <= B


def check_tail_bound(theta: SignalVector, beta: float) -> ClassCheck:
    """Check sum_{k>=N} theta_k**2 <= ||theta||_{S^beta}**2 N**(-2 beta) for N = 1..K.

    This always holds; a violation means a numerical bug.
    """
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    K = theta.K
    energy = theta.coeffs**2
    tail = np.cumsum(energy[::-1])[::-1]
    Ns = np.arange(1, K + 1)
    bound = sobolev_norm_sq(theta.coeffs, beta) * Ns ** (-2.0 * beta)
    ok = tail <= bound * (1 + 1e-12)
    first = _first_false(ok, Ns)
    return ClassCheck("tail_bound", first is None, first, (1, K))


def check_self_similar(theta: SignalVector, params: SelfSimilarParams) -> ClassCheck:
    """sum_{k=N}^{rho N} theta_k**2 >= eps ||theta||_{S^beta}**2 N**(-2 beta) for N0 <= N <= K / rho."""
    K = theta.K
    N_max = int(np.floor(round(K / params.rho, 9)))
    if N_max < params.N0:
        raise ValueError(f"no checkable block: rho * N0 = {params.rho * params.N0} > K = {K}")
    Ns = np.arange(params.N0, N_max + 1)
    prefix = _energy_prefix(theta.coeffs)
    block = prefix[_block_ends(Ns, params.rho)] - prefix[Ns - 1]
    norm_sq = sobolev_norm_sq(theta.coeffs, params.beta)
    if params.B is not None and math.sqrt(norm_sq) > params.B:
        return ClassCheck("self_similar", False, None, (params.N0, N_max), "outside Sobolev ball")
    ok = block >= params.eps * norm_sq * Ns ** (-2.0 * params.beta)
    first = _first_false(ok, Ns)
    return ClassCheck("self_similar", first is None, first, (params.N0, N_max))


def check_polished_tail(theta: SignalVector, params: PolishedTailParams) -> ClassCheck:
    """sum_{k=N}^{rho N} theta_k**2 >= L0**-1 sum_{N<=k<=K} theta_k**2 for N0 <= N <= K / rho."""
    K = theta.K
    N_max = int(np.floor(round(K / params.rho, 9)))
    if N_max < params.N0:
        raise ValueError(f"no checkable block: rho * N0 = {params.rho * params.N0} > K = {K}")
    Ns = np.arange(params.N0, N_max + 1)
    # suffix[i] = sum_{k >= i} theta_k**2; a block reaching the end of the
    # signal's support then equals its tail exactly
    suffix = np.concatenate(([0.0], np.cumsum((theta.coeffs**2)[::-1])[::-1], [0.0]))
    tail = suffix[Ns]
    block = tail - suffix[_block_ends(Ns, params.rho) + 1]
    ok = block >= tail / params.L0
    first = _first_false(ok, Ns)
    return ClassCheck("polished_tail", first is None, first, (params.N0, N_max))


def check_relaxed_self_similar(theta: SignalVector, params: RelaxedSelfSimilarParams) -> ClassCheck:
    """Membership in S^beta(B) plus the widening-window block condition for N0 <= N <= K.

    The block is [ceil(N**(1 - eps)), N] and must carry at least
    c_beta ||theta||_{S^beta}**2 N**(-2 beta).
    """
    K = theta.K
    if params.N0 > K:
        raise ValueError(f"N0 = {params.N0} exceeds K = {K}")
    checked = (params.N0, K)
    norm_sq = sobolev_norm_sq(theta.coeffs, params.beta)
    norm = math.sqrt(norm_sq)
    if norm > params.B:
        return ClassCheck("relaxed_self_similar", False, None, checked, "outside Sobolev ball")
    if params.b > 0 and norm < params.b:
        return ClassCheck("relaxed_self_similar", False, None, checked, "below lower Sobolev bound")
    Ns = np.arange(params.N0, K + 1)
    starts = np.array([relaxed_block_start(int(N), params.eps) for N in Ns])
    prefix = _energy_prefix(theta.coeffs)
    block = prefix[Ns] - prefix[starts - 1]
    ok = block >= params.c_beta * norm_sq * Ns ** (-2.0 * params.beta)
    first = _first_false(ok, Ns)
    return ClassCheck("relaxed_self_similar", first is None, first, checked)


def detect_regularity(
    theta: SignalVector, beta_grid: Iterable[float], rho: float, eps: float, N0: int
) -> list[float]:
    """Grid values of beta for which the self-similarity condition holds."""
    grid = list(beta_grid)
    if not grid:
        raise ValueError("beta grid is empty")
    return [b for b in grid if check_self_similar(theta, SelfSimilarParams(b, eps, rho, N0))]


def detect_regularity_relaxed(
    theta: SignalVector, beta_grid: Iterable[float], eps: float, N0: int, B: float
) -> list[float]:
    """Grid values of beta for which the relaxed self-similar condition holds."""
    grid = list(beta_grid)
    if not grid:
        raise ValueError("beta grid is empty")
    return [b for b in grid if check_relaxed_self_similar(theta, RelaxedSelfSimilarParams(b, B, eps, N0))]


CONDITIONS = {
    "self_similar": (SelfSimilarParams, check_self_similar),
    "polished_tail": (PolishedTailParams, check_polished_tail),
    "relaxed_self_similar": (RelaxedSelfSimilarParams, check_relaxed_self_similar),
}


def check_condition(theta: SignalVector, params: dict) -> tuple[ClassCheck, dict]:
    """Dispatch on ``params["condition"]``; also accepts ``tail_bound`` and ``sobolev_ball``."""
    params = dict(params)
    condition = params.pop("condition", None)
    if condition == "tail_bound":
        return check_tail_bound(theta, float(params["beta"])), {"beta": float(params["beta"])}
    if condition == "sobolev_ball":
        beta, B = float(params["beta"]), float(params["B"])
        passed = in_sobolev_ball(theta, beta, B)
        return ClassCheck("sobolev_ball", passed, None, (1, theta.K)), {"beta": beta, "B": B}
    if condition not in CONDITIONS:
        raise ValueError(f"unknown condition {condition!r}; expected one of {sorted(CONDITIONS)}")
    cls, checker = CONDITIONS[condition]
    p = cls(**params)
    return checker(theta, p), asdict(p)


# Frozen parameters of the shipped multi-beta witness (data/multi_beta_witness.csv).
WITNESS_PARAMS = {
    "signal": {"generator": "polynomial", "beta": 0.75, "K": 4096, "sobolev_1_norm": 1.0},
    "relaxed": {"betas": [0.5, 1.0], "B": 2.0, "eps": 0.9, "N0": 512},
    "self_similar": {"betas": [0.5, 1.0], "rho": 3.0, "eps": 0.05, "N0": 512},
}


def find_multi_beta_witness(
    signal_beta: float,
    betas: tuple[float, float],
    K: int,
    eps_grid: Iterable[float],
    N0_grid: Iterable[int],
    B_factor: float = 2.0,
) -> Optional[tuple[SignalVector, RelaxedSelfSimilarParams, RelaxedSelfSimilarParams]]:
    """Search (eps, N0) for a polynomial signal in the relaxed class for both ``betas``.

    The amplitude is set so that the signal has unit S^max(betas) norm; B is
    ``B_factor`` times the larger of the two Sobolev norms. Returns the first
    hit in (eps, N0) order, or None.
    """
    k = np.arange(1, K + 1, dtype=float)
    unit = k ** (-0.5 - signal_beta)
    theta = SignalVector(unit / math.sqrt(sobolev_norm_sq(unit, max(betas))))
    B = B_factor * max(math.sqrt(sobolev_norm_sq(theta.coeffs, b)) for b in betas)
    for eps in eps_grid:
        for N0 in N0_grid:
            if N0 > K:
                break
            params = [RelaxedSelfSimilarParams(b, B, eps, N0) for b in betas]
            if all(check_relaxed_self_similar(theta, p) for p in params):
                return theta, params[0], params[1]
    return None


def multi_beta_witness() -> SignalVector:
    """The shipped witness signal, read from package data."""
    from importlib.resources import files

    from .sequence_model import read_signal_csv

    return read_signal_csv(files("credsets") / "data" / "multi_beta_witness.csv")
