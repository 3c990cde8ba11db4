"""Bayesian credible sets in the Gaussian sequence model.

Credible balls in l2, weighted-ellipsoid and multiscale sup-norms, their
frequentist coverage, and checkers for the self-similarity family of
signal-strength conditions.
"""

from .credible import (
    CredibleBall,
    NormSpec,
    bvm_discrepancy,
    calibrate_radius,
    contains,
    credible_ball,
    white_noise_ellipsoid_measure,
)
from .norms import (
    EllipsoidWeightSpec,
    MultiscaleWeightSpec,
    ellipsoid_norm,
    l2_norm,
    multiscale_norm,
    sobolev_norm,
)
from .posterior import (
    DiagonalGaussianPrior,
    PosteriorDistribution,
    compute_posterior,
    empirical_bayes_gamma,
    marginal_log_likelihood,
    sample_posterior,
)
from .sequence_model import (
    Observation,
    SignalVector,
    generate_observation,
    lacunary_signal,
    multiscale_index,
    multiscale_unindex,
    polynomial_signal,
)
from .signal_classes import (
    PolishedTailParams,
    RelaxedSelfSimilarParams,
    SelfSimilarParams,
    c_beta,
    check_polished_tail,
    check_relaxed_self_similar,
    check_self_similar,
    check_tail_bound,
    detect_regularity,
    epsilon_bounds,
    in_sobolev_ball,
)

__version__ = "0.1.0"
