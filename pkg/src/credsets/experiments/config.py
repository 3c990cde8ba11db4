"""JSON experiment configuration: parsing, defaults and validation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

from ..credible import NormSpec, norm_from_config
from ..sequence_model import (
    MAX_TRUNCATION,
    SignalVector,
    default_truncation,
    lacunary_signal,
    polynomial_signal,
    read_signal_csv,
)

KINDS = ("coverage", "freedman", "scaling", "bvm", "figure1", "check-class")

REQUIRED = {
    "coverage": ("truth", "prior", "n", "alpha", "norm", "draws", "replications", "master_seed"),
    "freedman": ("truth", "prior", "n_grid", "draws", "replications", "master_seed"),
    "scaling": ("truth", "prior", "n_grid", "alpha", "norm", "draws", "replications", "master_seed"),
    "bvm": ("truth", "prior", "n_grid", "norm", "draws", "replications", "master_seed"),
    "figure1": ("truth", "prior", "alpha", "master_seed"),
    "check-class": ("signal", "params"),
}

ALLOWED = {
    "kind", "truth", "prior", "n", "n_grid", "K", "alpha", "blowup", "norm", "draws",
    "replications", "master_seed", "output_dir", "threads", "noise", "subsample",
    "grid_points", "reference_variance", "chunk_size", "signal", "params", "description",
}


class ConfigError(ValueError):
    """Raised for malformed or inconsistent experiment configurations."""


@dataclass
class ExperimentConfig:
    kind: str
    truth: dict = field(default_factory=dict)
    prior: dict = field(default_factory=dict)
    n: Optional[float] = None
    n_grid: Optional[list] = None
    K: Union[int, str, None] = None
    alpha: Optional[float] = None
    blowup: float = 1.0
    norm: Union[str, dict, None] = None
    draws: int = 0
    replications: int = 1
    master_seed: int = 0
    output_dir: Optional[str] = None
    threads: int = 1
    noise: str = "gaussian"
    subsample: int = 200
    grid_points: int = 200
    reference_variance: float = 1.0
    chunk_size: int = 4096
    signal: Optional[str] = None
    params: Optional[dict] = None
    description: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and not k.startswith("_")}

    @property
    def gamma_grid(self) -> Optional[list]:
        return self.prior.get("gamma_grid")

    @property
    def tau(self) -> float:
        return float(self.prior.get("tau", 1.0))

    def truncation(self, n: float) -> int:
        """Truncation level K at sample size n (multiscale norms round down to 2**(J+1) - 1)."""
        if isinstance(self.K, int):
            return self.K
        if "csv" in self.truth:
            return self.truth_signal(1).K
        K = default_truncation(n)
        if self.norm_name == "multiscale":
            K = 2 ** ((K + 1).bit_length() - 1) - 1
        return K

    @property
    def norm_name(self) -> str:
        if self.norm is None:
            return "l2"
        return self.norm if isinstance(self.norm, str) else self.norm.get("name", "")

    def norm_spec(self, K: int) -> NormSpec:
        try:
            return norm_from_config(self.norm if self.norm is not None else "l2", K)
        except ValueError as exc:
            raise ConfigError(f"norm: {exc}") from exc

    def truth_signal(self, K: int) -> SignalVector:
        spec = dict(self.truth)
        multiscale = self.norm_name == "multiscale"
        if "csv" in spec:
            path = Path(spec["csv"])
            if not path.is_absolute() and self._base_dir is not None:
                path = self._base_dir / path
            try:
                return read_signal_csv(path)
            except (OSError, ValueError, KeyError) as exc:
                raise ConfigError(f"truth.csv: {exc}") from exc
        gen = spec.pop("generator", None)
        levels = None
        if multiscale:
            levels = (K + 1).bit_length() - 2
            if 2 ** (levels + 1) - 1 != K:
                raise ConfigError(f"multiscale norm needs K = 2**(J+1) - 1, got K={K}")
        try:
            if gen == "polynomial":
                return polynomial_signal(float(spec["beta"]), float(spec.get("amplitude", 1.0)), K, levels)
            if gen == "lacunary":
                return lacunary_signal(int(spec.get("q", 2)), K, levels)
            if gen == "zero":
                return SignalVector([0.0] * K, levels=levels)
        except KeyError as exc:
            raise ConfigError(f"truth: missing field {exc.args[0]!r}") from exc
        raise ConfigError(f"truth: unknown generator {gen!r}")

    _base_dir: Optional[Path] = field(default=None, repr=False, compare=False)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    _require(cfg.kind in KINDS, f"kind: unknown experiment kind {cfg.kind!r}")
    if cfg.kind == "check-class":
        _require(isinstance(cfg.params, dict), "params: must be an object")
        return cfg
    if cfg.alpha is not None:
        _require(0 < cfg.alpha < 1, f"alpha: must lie in (0, 1), got {cfg.alpha}")
    _require(cfg.blowup >= 1, f"blowup: must be >= 1, got {cfg.blowup}")
    _require(cfg.replications >= 1, f"replications: must be >= 1, got {cfg.replications}")
    _require(cfg.kind == "figure1" or cfg.draws >= 1, f"draws: must be >= 1, got {cfg.draws}")
    _require(cfg.threads >= 1, f"threads: must be >= 1, got {cfg.threads}")
    _require(cfg.master_seed >= 0, "master_seed: must be a nonnegative integer")
    _require(cfg.noise in ("gaussian", "zero"), f"noise: expected 'gaussian' or 'zero', got {cfg.noise!r}")
    _require(cfg.reference_variance > 0, "reference_variance: must be positive")
    _require(cfg.grid_points >= 1, "grid_points: must be >= 1")
    _require(cfg.chunk_size >= 1, "chunk_size: must be >= 1")

    prior_fields = set(cfg.prior) - {"gamma", "gamma_grid", "tau"}
    _require(not prior_fields, f"prior: unknown fields {sorted(prior_fields)}")
    _require(("gamma" in cfg.prior) != ("gamma_grid" in cfg.prior), "prior: give exactly one of gamma, gamma_grid")
    _require(cfg.tau > 0, "prior.tau: must be positive")
    if "gamma" in cfg.prior:
        _require(float(cfg.prior["gamma"]) > 0, "prior.gamma: must be positive")
    else:
        grid = cfg.prior["gamma_grid"]
        _require(isinstance(grid, list) and len(grid) > 0, "prior.gamma_grid: must be a nonempty list")
        _require(all(g > 0 for g in grid), "prior.gamma_grid: values must be positive")
        _require(all(a < b for a, b in zip(grid, grid[1:])), "prior.gamma_grid: must be strictly increasing")

    if cfg.n_grid is not None:
        _require(isinstance(cfg.n_grid, list) and cfg.n_grid, "n_grid: must be a nonempty list")
        _require(all(x > 0 for x in cfg.n_grid), "n_grid: values must be positive")
        _require(all(a < b for a, b in zip(cfg.n_grid, cfg.n_grid[1:])), "n_grid: must be strictly increasing")
    if cfg.n is not None:
        _require(cfg.n > 0, f"n: must be positive, got {cfg.n}")
    if cfg.K is not None:
        _require(
            cfg.K == "n" or (isinstance(cfg.K, int) and 1 <= cfg.K <= MAX_TRUNCATION),
            f"K: must be 'n' or an integer in 1..{MAX_TRUNCATION}",
        )
        if cfg.K == "n":
            cfg.K = None

    minimum_grid = {"freedman": 2, "scaling": 3, "bvm": 2}
    if cfg.kind in minimum_grid:
        _require(
            len(cfg.n_grid) >= minimum_grid[cfg.kind],
            f"n_grid: {cfg.kind} needs at least {minimum_grid[cfg.kind]} points",
        )
    if cfg.kind == "freedman":
        _require(cfg.norm_name == "l2", "norm: freedman diagnostics use the l2 norm")
    if cfg.kind in ("scaling", "bvm"):
        _require(cfg.norm_name in ("ellipsoid", "multiscale"), f"norm: {cfg.kind} needs an ellipsoid or multiscale norm")
    if cfg.kind == "figure1":
        if cfg.n is None:
            cfg.n = 1000.0
        if cfg.draws == 0:
            cfg.draws = 100_000
        if cfg.norm is None:
            cfg.norm = "ellipsoid"
        _require(cfg.norm_name == "ellipsoid", "norm: figure1 compares l2 against an ellipsoid norm")
        _require(cfg.subsample >= 0, "subsample: must be >= 0")

    # build every object once so inconsistencies surface as config errors
    for n in ([cfg.n] if cfg.n is not None else cfg.n_grid):
        K = cfg.truncation(n)
        cfg.norm_spec(K)
        theta = cfg.truth_signal(K)
        _require(theta.K == K, f"truth: signal has K={theta.K}, expected K={K}")
        if cfg.norm_name == "multiscale":
            _require(theta.is_multiscale, "truth: multiscale norm needs a multiscale-indexed signal")
    return cfg


def config_from_dict(data: dict, kind: Optional[str] = None, base_dir: Optional[Path] = None) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    unknown = set(data) - ALLOWED
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if kind is not None:
        if data.get("kind", kind) != kind:
            raise ConfigError(f"kind: config says {data['kind']!r} but subcommand is {kind!r}")
        data["kind"] = kind
    if "kind" not in data:
        raise ConfigError("missing required field 'kind'")
    for name in REQUIRED.get(data["kind"], ()):
        if name not in data:
            raise ConfigError(f"missing required field {name!r}")
    if data["kind"] == "coverage" and "n" not in data:
        raise ConfigError("missing required field 'n'")

    types: dict[str, Any] = {
        "n": float, "alpha": float, "blowup": float, "reference_variance": float,
        "draws": int, "replications": int, "master_seed": int, "threads": int,
        "subsample": int, "grid_points": int, "chunk_size": int,
    }
    for name, conv in types.items():
        if name in data:
            value = data[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{name}: expected a number, got {value!r}")
            if conv is int and float(value) != int(value):
                raise ConfigError(f"{name}: expected an integer, got {value!r}")
            data[name] = conv(value)
    if "n_grid" in data:
        if not isinstance(data["n_grid"], list) or not all(isinstance(x, (int, float)) for x in data["n_grid"]):
            raise ConfigError("n_grid: expected a list of numbers")
        data["n_grid"] = [float(x) for x in data["n_grid"]]
    for name in ("truth", "prior"):
        if name in data and not isinstance(data[name], dict):
            raise ConfigError(f"{name}: expected an object")
    cfg = ExperimentConfig(**data)
    cfg._base_dir = base_dir
    return validate(cfg)


def load_config(path: Union[str, Path], kind: Optional[str] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: malformed JSON ({exc})") from exc
    return config_from_dict(data, kind, base_dir=path.parent)
