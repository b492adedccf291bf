"""Matplotlib figure builders for the CLI report paths.

Everything renders through the Agg backend so the CLI works headless;
each helper returns the saved file path.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .summary import SummaryReport, kde

_FIG_SIZE = (7.0, 4.5)
_DPI = 130


def _finish(fig, out_path: str) -> str:
    fig.tight_layout()
    fig.savefig(out_path, dpi=_DPI)
    plt.close(fig)
    return out_path


def density_figure(
    draws: np.ndarray,
    out_path: str,
    *,
    title: str,
    param_label: str,
    report: SummaryReport | None = None,
) -> str:
    """Histogram plus kernel density estimate for one marginal sample."""
    draws = np.asarray(draws, dtype=float)
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    ax.hist(draws, bins=80, density=True, color="#9ecae1", edgecolor="none", alpha=0.8)
    grid, dens = kde(draws)
    ax.plot(grid, dens, color="#08519c", lw=1.8, label="kernel density")
    if report is not None:
        ax.axvline(report.median, color="#de2d26", lw=1.2, ls="--", label="median")
        ax.axvspan(report.hpd[0], report.hpd[1], color="#fee0d2", alpha=0.45,
                   label=f"{int(report.level * 100)}% HPD")
    ax.set_xlabel(param_label)
    ax.set_ylabel("posterior density")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=9)
    return _finish(fig, out_path)


def overlay_figure(
    runs: dict[str, np.ndarray],
    out_path: str,
    *,
    title: str,
    param_label: str,
) -> str:
    """Overlaid density estimates for two or more labelled sample sets."""
    if len(runs) < 2:
        raise ValueError("overlay figure needs at least two labelled runs")
    fig, ax = plt.subplots(figsize=_FIG_SIZE)
    colors = ("#08519c", "#de2d26", "#31a354", "#756bb1", "#636363")
    for (label, draws), color in zip(runs.items(), colors):
        grid, dens = kde(np.asarray(draws, dtype=float))
        ax.plot(grid, dens, color=color, lw=1.8, label=label)
    ax.set_xlabel(param_label)
    ax.set_ylabel("posterior density")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=9)
    return _finish(fig, out_path)


def curve_figure(
    psi: np.ndarray,
    r_p: np.ndarray,
    r_star: np.ndarray,
    density: np.ndarray,
    out_path: str,
    *,
    title: str,
    param_label: str,
) -> str:
    """Two-panel diagnostic: pivot curves on the left, implied density on the right."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.2))
    ax1.plot(psi, r_p, color="#9e9e9e", lw=1.4, label="signed root")
    ax1.plot(psi, r_star, color="#08519c", lw=1.8, label="adjusted root")
    ax1.axhline(0.0, color="black", lw=0.6)
    ax1.set_xlabel(param_label)
    ax1.set_ylabel("pivot value")
    ax1.legend(frameon=False, fontsize=9)
    ax2.plot(psi, density, color="#de2d26", lw=1.8)
    ax2.set_xlabel(param_label)
    ax2.set_ylabel("approximate marginal density")
    fig.suptitle(title)
    fig.tight_layout(rect=(0, 0, 1, 0.95))
    fig.savefig(out_path, dpi=_DPI)
    plt.close(fig)
    return out_path


def figure_path(out_dir: str, stem: str) -> str:
    return os.path.join(out_dir, stem + ".png")
