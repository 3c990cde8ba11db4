"""Independent reference computations used by the tests.

Nothing here calls into the code paths being checked: posterior moments come
from numerical integration of Bayes' rule, class conditions from plain double
loops, and radii from exact distribution functions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize, stats


def quadrature_posterior(prior_var: float, n: float, y: float) -> tuple[float, float]:
    """Posterior mean and variance of theta given Y = theta + g/sqrt(n), theta ~ N(0, prior_var)."""

    def log_kernel(t):
        return -0.5 * t * t / prior_var - 0.5 * n * (y - t) ** 2

    mode = optimize.minimize_scalar(lambda t: -log_kernel(t), bracket=(-abs(y) - 1, abs(y) + 1)).x
    # curvature by central differences (exact for a quadratic up to rounding)
    h0 = 1e-3 / math.sqrt(n + 1.0 / prior_var)
    curv = -(log_kernel(mode + h0) - 2 * log_kernel(mode) + log_kernel(mode - h0)) / h0**2
    scale = 1.0 / math.sqrt(curv)
    peak = log_kernel(mode)

    # integrate in the standardised variable u = (t - mode) / scale
    def dens(u):
        return math.exp(log_kernel(mode + scale * u) - peak)

    opts = dict(epsabs=0.0, epsrel=1e-12, limit=200)
    Z = integrate.quad(dens, -40, 40, **opts)[0]
    # the first moment is nearly zero: integrate each half-line separately so
    # both pieces are positive and have relative accuracy
    right = integrate.quad(lambda u: u * dens(u), 0, 40, **opts)[0]
    left = integrate.quad(lambda u: -u * dens(u), -40, 0, **opts)[0]
    shift = (right - left) / Z
    second = integrate.quad(lambda u: u * u * dens(u), -40, 40, **opts)[0] / Z
    mean = mode + scale * shift
    var = scale**2 * (second - shift**2)
    return mean, var


def brute_self_similar(theta, beta, eps, rho, N0):
    K = len(theta)
    norm_sq = 0.0
    for k in range(1, K + 1):
        norm_sq += theta[k - 1] ** 2 * k ** (2 * beta)
    N = N0
    while rho * N <= K + 1e-9:
        end = int(math.floor(rho * N + 1e-9))
        block = 0.0
        for k in range(N, end + 1):
            block += theta[k - 1] ** 2
        if not block >= eps * norm_sq * N ** (-2 * beta):
            return False, N
        N += 1
    return True, None


def brute_polished_tail(theta, L0, rho, N0):
    K = len(theta)
    N = N0
    while rho * N <= K + 1e-9:
        end = int(math.floor(rho * N + 1e-9))
        block = 0.0
        for k in range(N, end + 1):
            block += theta[k - 1] ** 2
        tail = block
        for k in range(end + 1, K + 1):
            tail += theta[k - 1] ** 2
        if not block >= tail / L0:
            return False, N
        N += 1
    return True, None


def brute_relaxed(theta, beta, B, eps, N0):
    K = len(theta)
    c = 16 * 2 ** (2 * beta + 1)
    norm_sq = 0.0
    for k in range(1, K + 1):
        norm_sq += theta[k - 1] ** 2 * k ** (2 * beta)
    if math.sqrt(norm_sq) > B:
        return False, None
    for N in range(N0, K + 1):
        x = N ** (1 - eps)
        start = 1
        while start < x - 1e-9 * x:
            start += 1
        block = 0.0
        for k in range(start, N + 1):
            block += theta[k - 1] ** 2
        if not block >= c * norm_sq * N ** (-2 * beta):
            return False, N
    return True, None


def brute_tail_bound(theta, beta):
    K = len(theta)
    norm_sq = sum(theta[k - 1] ** 2 * k ** (2 * beta) for k in range(1, K + 1))
    for N in range(1, K + 1):
        tail = sum(theta[k - 1] ** 2 for k in range(N, K + 1))
        if tail > norm_sq * N ** (-2 * beta) * (1 + 1e-12):
            return False, N
    return True, None


def squared_distance_moments(theta0, prior_var, n):
    """Closed-form moments for the Freedman diagnostics, coordinate by coordinate.

    Error e_k = m_k - theta0_k is N(b_k, a_k) with b_k = -theta0_k / (1 + n lambda_k)
    and a_k = (n lambda_k / (1 + n lambda_k))**2 / n; the posterior deviation is
    N(0, v_k) with v_k = lambda_k / (1 + n lambda_k).
    """
    theta0 = np.asarray(theta0, dtype=float)
    lam = np.asarray(prior_var, dtype=float)
    b = -theta0 / (1 + n * lam)
    a = (n * lam / (1 + n * lam)) ** 2 / n
    v = lam / (1 + n * lam)
    # Var(X^2) = 2 a^2 + 4 a b^2 for X ~ N(b, a)
    return {
        "frequentist_mean": float(np.sum(a + b * b)),
        "frequentist_var": float(np.sum(2 * a * a + 4 * a * b * b)),
        "posterior_mean": float(np.sum(v)),
        "posterior_var": float(np.sum(2 * v * v)),
    }


def multiscale_radius(sd_over_weight, alpha):
    """Exact (1 - alpha)-quantile of max_k |g_k| c_k for independent standard normals."""
    c = np.asarray(sd_over_weight, dtype=float)

    def f(r):
        return np.sum(np.log(2 * stats.norm.cdf(r / c) - 1)) - math.log(1 - alpha)

    return optimize.brentq(f, 1e-12 * c.max(), 50 * c.max(), xtol=1e-14)
