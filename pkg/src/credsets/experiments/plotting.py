"""Figures rendered next to the CSV outputs when ``--plot`` is given.

The CSV files are the primary record; these PNGs are conveniences and are
excluded from the determinism guarantees.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .runners import BvmReport, CoverageReport, Figure1Result, FreedmanReport, ScalingReport  # noqa: E402

RC = {
    "figure.figsize": (6.0, 3.6),
    "figure.dpi": 150,
    "savefig.bbox": "tight",
    "font.family": "serif",
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_figure1(result: Figure1Result, out: Path, max_draws: int = 200) -> Path:
    """Two panels (ellipsoid on top, l2 below) of accepted draws in coefficient space."""
    k = np.arange(1, result.theta0.K + 1)
    draws = result.subsample[:max_draws]
    with plt.rc_context(RC):
        fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6.0, 6.0))
        for ax, flags, label in (
            (axes[0], result.accept_ellipsoid, "ellipsoid ball"),
            (axes[1], result.accept_l2, r"$\ell_2$ ball"),
        ):
            for i, row in enumerate(draws):
                if flags[i]:
                    ax.plot(k, row, color="0.75", lw=0.4, alpha=0.5, zorder=1)
            ax.plot(k, result.posterior.means, color="tab:red", lw=1.0, label="posterior mean", zorder=3)
            ax.plot(k, result.theta0.coeffs, color="black", lw=1.0, label="truth", zorder=2)
            ax.set_xscale("log")
            ax.set_ylabel(r"$\theta_k$")
            ax.set_title(f"{label}, n = {result.n:g}, {100 * (1 - result.alpha):g}% credible", fontsize=9)
        axes[0].legend(loc="upper right")
        axes[1].set_xlabel("k")
        return _save(fig, out / "figure1.png")


def plot_coverage(report: CoverageReport, out: Path) -> Path:
    ratio = np.array([r.distance / r.radius if r.radius > 0 else np.inf for r in report.records])
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.hist(ratio[np.isfinite(ratio)], bins=40, color="0.6")
        ax.axvline(report.blowup, color="tab:red", lw=1.0, label=f"blow-up L = {report.blowup:g}")
        ax.set_xlabel(r"$\|\theta_0 - E(\theta|Y)\| / r_{\alpha,n}$")
        ax.set_ylabel("replications")
        ax.set_title(
            f"coverage {report.coverage:.3f} [{report.wilson_low:.3f}, {report.wilson_high:.3f}]", fontsize=9
        )
        ax.legend()
        return _save(fig, out / "coverage.png")


def plot_scaling(report: ScalingReport, out: Path) -> Path:
    n = [r.n for r in report.rows]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.errorbar(
            n, [r.scaled_radius_mean for r in report.rows], yerr=[r.scaled_radius_sd for r in report.rows],
            marker="o", color="black", capsize=3,
        )
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel(r"$\sqrt{n}\, r_{\alpha,n}$")
        return _save(fig, out / "scaling.png")


def plot_bvm(report: BvmReport, out: Path) -> Path:
    n = [r.n for r in report.rows]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.errorbar(
            n, [r.discrepancy_mean for r in report.rows], yerr=[3 * r.discrepancy_se for r in report.rows],
            marker="o", color="black", capsize=3,
        )
        ax.set_xscale("log")
        ax.set_ylim(bottom=0)
        ax.set_xlabel("n")
        ax.set_ylabel("BvM discrepancy (sup over M)")
        return _save(fig, out / "bvm.png")


def plot_freedman(report: FreedmanReport, out: Path) -> Path:
    n = [r.n for r in report.rows]
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.plot(n, [r.var_ratio for r in report.rows], marker="o", color="black", label="Monte Carlo")
        ax.plot(n, [r.exact_var_ratio for r in report.rows], ls="--", color="tab:red", label="closed form")
        ax.axhline(1.0, color="0.6", lw=0.8)
        ax.set_xscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("frequentist / posterior variance")
        ax.legend()
        return _save(fig, out / "freedman.png")
