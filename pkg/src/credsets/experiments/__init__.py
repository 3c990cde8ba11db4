"""Replicated experiment harness: configs, runners and file outputs."""

from .config import ConfigError, ExperimentConfig, config_from_dict, load_config
from .runners import (
    run_bvm,
    run_coverage,
    run_figure1,
    run_freedman,
    run_radius_scaling,
    wilson_interval,
)
