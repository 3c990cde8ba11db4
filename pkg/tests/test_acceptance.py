"""Acceptance suite: one test per criterion, at the stated scale and tolerance.

Run on its own with ``pytest tests/test_acceptance.py -v``; the terminal
summary lists PASS/FAIL per criterion with the measured values.
"""

import json
import math
import time

import numpy as np
import pytest

from credsets.cli import cli_main
from credsets.credible import NormSpec, draw_distances, posterior_distances, radius_from_distances
from credsets.experiments import config_from_dict, run_bvm, run_coverage, run_figure1, run_freedman
from credsets.posterior import DiagonalGaussianPrior, compute_posterior, iter_posterior_draws
from credsets.sequence_model import Observation, SignalVector, generate_observation, polynomial_signal
from credsets.signal_classes import (
    WITNESS_PARAMS,
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
    multi_beta_witness,
)

from oracles import (
    brute_polished_tail,
    brute_relaxed,
    brute_self_similar,
    brute_tail_bound,
    quadrature_posterior,
    squared_distance_moments,
)

pytestmark = pytest.mark.slow

WELL_SPECIFIED = {
    "truth": {"generator": "polynomial", "beta": 1.0},
    "prior": {"gamma": 1.0, "tau": 1.0},
}


def test_criterion_01_posterior_exactness(record_property):
    rng = np.random.default_rng(20240601)
    cases = []
    for _ in range(20):
        K = int(rng.integers(1, 50))
        prior = DiagonalGaussianPrior(float(rng.uniform(0.1, 3)), K, float(rng.uniform(0.2, 5)))
        obs = Observation(rng.normal(0, 2, size=K), float(10 ** rng.uniform(0, 5)))
        cases.append((prior, obs))
    start = time.perf_counter()
    posts = [compute_posterior(prior, obs) for prior, obs in cases]
    elapsed = time.perf_counter() - start
    worst = 0.0
    for (prior, obs), post in zip(cases, posts):
        for k in range(prior.K):
            m, v = quadrature_posterior(prior.variances[k], obs.n, obs.y[k])
            worst = max(worst, abs(post.variances[k] / v - 1))
            if m != 0:
                worst = max(worst, abs(post.means[k] / m - 1))
    record_property("detail", f"max rel err {worst:.2e}, closed form {elapsed * 1e3:.2f} ms")
    assert worst < 1e-8
    assert elapsed < 1.0


def test_criterion_02_calibration_property(record_property):
    J = 9
    K = 2 ** (J + 1) - 1
    theta = polynomial_signal(1.0, 1.0, levels=J)
    obs = generate_observation(theta, 1000.0, rng=np.random.default_rng(1))
    post = compute_posterior(DiagonalGaussianPrior(1.0, K), obs)
    center = theta.with_coeffs(post.means)
    norms = [NormSpec.l2(), NormSpec.ellipsoid(K), NormSpec.multiscale(J)]
    S = 100_000
    start = time.perf_counter()
    calib = posterior_distances(post, center, norms, S, np.random.default_rng(2))
    fresh = posterior_distances(post, center, norms, S, np.random.default_rng(3))
    elapsed = time.perf_counter() - start
    report, worst = [], 0.0
    for norm, dc, df in zip(norms, calib, fresh):
        for alpha in (0.05, 0.2):
            rate = float(np.mean(df <= radius_from_distances(dc, alpha)))
            worst = max(worst, abs(rate - (1 - alpha)))
            report.append(f"{norm.variant}@{alpha}={rate:.4f}")
    record_property("detail", f"{', '.join(report)}; {elapsed:.1f}s")
    assert worst <= 0.01
    assert elapsed < 60


def test_criterion_03_figure1_scale(record_property):
    cfg = config_from_dict(
        {**WELL_SPECIFIED, "alpha": 0.05, "master_seed": 1, "n": 1000, "K": 1000, "draws": 100_000},
        "figure1",
    )
    start = time.perf_counter()
    result = run_figure1(cfg)
    elapsed = time.perf_counter() - start
    s = result.summary()
    record_property(
        "detail",
        f"accept l2 {s['accept_fraction_l2']:.4f}, ellipsoid {s['accept_fraction_ellipsoid']:.4f}, "
        f"agreement {s['agreement_rate']:.4f}, {elapsed:.1f}s",
    )
    assert s["K"] == 1000 and s["draws"] == 100_000
    assert abs(s["accept_fraction_l2"] - 0.95) <= 0.005
    assert abs(s["accept_fraction_ellipsoid"] - 0.95) <= 0.005
    assert elapsed < 300


def test_criterion_04_correct_coverage(record_property):
    cfg = config_from_dict(
        {
            **WELL_SPECIFIED,
            "n": 1000,
            "K": 1000,
            "alpha": 0.05,
            "blowup": 1.0,
            "norm": "ellipsoid",
            "draws": 10_000,
            "replications": 500,
            "master_seed": 2024,
        },
        "coverage",
    )
    report = run_coverage(cfg)
    record_property(
        "detail",
        f"coverage {report.coverage:.3f} (Wilson {report.wilson_low:.3f}-{report.wilson_high:.3f}), "
        f"mean sqrt(n) r {report.scaled_radius_mean:.3f}",
    )
    assert len(report.records) == 500
    assert report.coverage >= 0.90


FREEDMAN_GRID = [100, 1000, 10_000]


def test_criterion_05_freedman_contrast(record_property):
    infinite = config_from_dict(
        {
            "truth": {"generator": "polynomial", "beta": 2.0},
            "prior": {"gamma": 1.0},
            "n_grid": FREEDMAN_GRID,
            "K": "n",
            "draws": 50,
            "replications": 2000,
            "master_seed": 5,
        },
        "freedman",
    )
    control = config_from_dict(
        {
            "truth": {"generator": "polynomial", "beta": 2.0},
            "prior": {"gamma": 0.5},
            "n_grid": FREEDMAN_GRID,
            "K": 1,
            "draws": 1000,
            "replications": 4000,
            "master_seed": 6,
        },
        "freedman",
    )
    rows = run_freedman(infinite).rows
    ctrl = run_freedman(control).rows
    ratios = [row.var_ratio for row in rows]
    ctrl_ratios = [row.var_ratio for row in ctrl]
    # closed-form check of the same contrast, independent of the simulation
    exact = []
    for row in rows:
        theta = polynomial_signal(2.0, 1.0, row.K)
        m = squared_distance_moments(theta.coeffs, DiagonalGaussianPrior(1.0, row.K).variances, row.n)
        exact.append(m["frequentist_var"] / m["posterior_var"])
    record_property(
        "detail",
        "K=n ratios " + ", ".join(f"{r:.3f}" for r in ratios)
        + "; exact " + ", ".join(f"{r:.3f}" for r in exact)
        + "; K=1 ratios " + ", ".join(f"{r:.3f}" for r in ctrl_ratios),
    )
    assert [row.K for row in rows] == FREEDMAN_GRID
    assert all(not 0.8 <= r <= 1.25 for r in ratios)
    assert all(not 0.8 <= r <= 1.25 for r in exact)
    assert 0.9 <= ctrl_ratios[-1] <= 1.1


BVM_GRID = [250, 1000, 4000]


@pytest.fixture(scope="module")
def bvm_reports():
    base = {
        **WELL_SPECIFIED,
        "n_grid": BVM_GRID,
        "norm": "ellipsoid",
        "draws": 10_000,
        "replications": 5,
        "master_seed": 9,
    }
    good = run_bvm(config_from_dict(base, "bvm"))
    bad = run_bvm(config_from_dict({**base, "reference_variance": 4.0}, "bvm"))
    return good, bad


def test_criterion_06_bvm_trend(bvm_reports, record_property):
    good, bad = bvm_reports
    record_property(
        "detail",
        "well-specified " + ", ".join(f"{r.discrepancy_mean:.3f}+-{r.discrepancy_se:.3f}" for r in good.rows)
        + "; variance-4 control " + ", ".join(f"{r.discrepancy_mean:.3f}" for r in bad.rows),
    )
    for a, b in zip(good.rows, good.rows[1:]):
        assert b.discrepancy_mean <= a.discrepancy_mean + 3 * math.hypot(a.discrepancy_se, b.discrepancy_se)
    assert all(r.discrepancy_mean > 0.2 for r in bad.rows)


@pytest.mark.xfail(
    strict=True,
    reason="discrepancy at n = 4000 is about 0.13; convergence under these weights is logarithmic in n",
)
def test_bvm_below_one_tenth_at_4000(bvm_reports):
    good, _ = bvm_reports
    assert good.rows[-1].discrepancy_mean < 0.1


def _random_class_signal(rng, K):
    k = np.arange(1, K + 1)
    kind = int(rng.integers(5))
    if kind == 0:
        return rng.normal(size=K)
    if kind == 1:
        return k ** -rng.uniform(0.5, 2.5) * rng.choice([-1.0, 1.0], size=K)
    if kind == 2:
        return k ** -rng.uniform(0.5, 2.0) * (rng.random(K) < rng.uniform(0.05, 0.5))
    if kind == 3:
        q = int(rng.integers(2, 4))
        out = np.zeros(K)
        j = 0
        while q**j <= K:
            out[q**j - 1] = q ** (-j * rng.uniform(0.3, 1.5))
            j += 1
        return out
    return k ** -rng.uniform(0.6, 2.0) * rng.uniform(0.5, 1.5, size=K)


def test_criterion_07_checker_oracle_equivalence(record_property):
    rng = np.random.default_rng(777)
    agree = {"self_similar": 0, "polished_tail": 0, "relaxed_self_similar": 0}
    tail_violations = 0
    passes = dict.fromkeys(agree, 0)
    for _ in range(200):
        K = int(rng.integers(8, 513))
        theta = SignalVector(_random_class_signal(rng, K))
        beta = float(rng.uniform(0.2, 2.0))
        eps = float(rng.uniform(0.005, 1.0))
        rho = float(rng.choice([2.0, 2.5, 3.0, 4.0]))
        N0 = int(rng.integers(1, max(2, int(K / rho))))
        L0 = float(rng.uniform(1.0, 6.0))
        B = float(rng.uniform(0.5, 20.0)) * math.sqrt(np.sum(theta.coeffs**2 * np.arange(1, K + 1) ** (2 * beta)))
        results = {
            "self_similar": (
                check_self_similar(theta, SelfSimilarParams(beta, eps, rho, N0)),
                brute_self_similar(theta.coeffs, beta, eps, rho, N0),
            ),
            "polished_tail": (
                check_polished_tail(theta, PolishedTailParams(L0, rho, N0)),
                brute_polished_tail(theta.coeffs, L0, rho, N0),
            ),
            "relaxed_self_similar": (
                check_relaxed_self_similar(theta, RelaxedSelfSimilarParams(beta, B, eps, N0)),
                brute_relaxed(theta.coeffs, beta, B, eps, N0),
            ),
        }
        for name, (got, want) in results.items():
            agree[name] += (got.passed, got.first_violation) == want
            passes[name] += got.passed
        tv = check_tail_bound(theta, beta)
        tail_violations += not tv.passed
        assert brute_tail_bound(theta.coeffs, beta)[0]
    record_property(
        "detail",
        ", ".join(f"{k} {v}/200 (pass {passes[k]})" for k, v in agree.items())
        + f"; tail-bound violations {tail_violations}",
    )
    assert all(v == 200 for v in agree.values())
    assert tail_violations == 0


def test_criterion_08_class_constants(record_property):
    nec, suf = epsilon_bounds(1000.0)
    record_property("detail", f"c_beta(1)={c_beta(1.0)}, bounds(1)={epsilon_bounds(1.0)}, bounds(1000)[1]={suf}")
    assert c_beta(1.0) == 128
    assert epsilon_bounds(1.0) == (0.5, 0.4)
    assert abs(suf - 0.5) < 1e-3


def test_criterion_09_multi_beta_witness(record_property):
    theta = multi_beta_witness()
    rel = WITNESS_PARAMS["relaxed"]
    ss = WITNESS_PARAMS["self_similar"]
    relaxed_pass = []
    for beta in rel["betas"]:
        verdict = check_relaxed_self_similar(theta, RelaxedSelfSimilarParams(beta, rel["B"], rel["eps"], rel["N0"]))
        assert (verdict.passed, verdict.first_violation) == brute_relaxed(
            theta.coeffs, beta, rel["B"], rel["eps"], rel["N0"]
        )
        if verdict:
            relaxed_pass.append(beta)
    ssim_pass = detect_regularity(theta, ss["betas"], ss["rho"], ss["eps"], ss["N0"])
    record_property("detail", f"relaxed passes {relaxed_pass}, self-similar passes {ssim_pass}")
    assert len(set(relaxed_pass)) >= 2
    assert len(ssim_pass) < 2


def _run_cli(kind, cfg_path, out, threads):
    assert cli_main([kind, "--config", str(cfg_path), "--out", str(out), "--threads", str(threads)]) == 0
    files = {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}
    manifest = json.loads((out / "manifest.json").read_text())
    for key in ("wall_time_seconds", "threads"):
        manifest.pop(key)
    return files, manifest


DETERMINISM_CONFIGS = {
    "coverage": {**WELL_SPECIFIED, "n": 300, "alpha": 0.05, "norm": "ellipsoid", "draws": 2000,
                 "replications": 16, "master_seed": 31},
    "scaling": {**WELL_SPECIFIED, "n_grid": [100, 200, 400], "alpha": 0.05, "norm": "multiscale",
                "draws": 1000, "replications": 8, "master_seed": 32},
    "freedman": {"truth": {"generator": "polynomial", "beta": 2.0}, "prior": {"gamma": 1.0},
                 "n_grid": [100, 300], "draws": 50, "replications": 16, "master_seed": 33},
    "bvm": {**WELL_SPECIFIED, "n_grid": [100, 300], "norm": "ellipsoid", "draws": 1000,
            "replications": 8, "master_seed": 34},
    "figure1": {**WELL_SPECIFIED, "alpha": 0.05, "n": 300, "draws": 5000, "subsample": 20, "master_seed": 35},
    "coverage-eb": {"truth": {"generator": "polynomial", "beta": 1.0}, "prior": {"gamma_grid": [0.5, 1.0, 1.5]},
                    "n": 300, "alpha": 0.05, "norm": "l2", "draws": 1000, "replications": 16, "master_seed": 36},
}


def test_criterion_10_determinism(tmp_path, record_property):
    checked = []
    for name, data in DETERMINISM_CONFIGS.items():
        kind = name.split("-")[0]
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps(data))
        one = _run_cli(kind, cfg, tmp_path / f"{name}-1", 1)
        eight = _run_cli(kind, cfg, tmp_path / f"{name}-8", 8)
        again = _run_cli(kind, cfg, tmp_path / f"{name}-8b", 8)
        assert one == eight == again, name
        checked.append(f"{name}:{len(one[0])} files")
    record_property("detail", ", ".join(checked))


def test_posterior_draw_chunking_is_invisible():
    # supports criterion 10: chunk boundaries never change the draws
    post = compute_posterior(DiagonalGaussianPrior(1.0, 50), Observation(np.linspace(-1, 1, 50), 100.0))
    center = SignalVector(post.means)
    a = np.concatenate([draw_distances(b, center, NormSpec.l2()) for b in iter_posterior_draws(post, 999, np.random.default_rng(0), 64)])
    b = draw_distances(np.vstack(list(iter_posterior_draws(post, 999, np.random.default_rng(0), 999))), center, NormSpec.l2())
    assert a.tobytes() == b.tobytes()
