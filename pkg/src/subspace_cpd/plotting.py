"""Matplotlib rendering of detection and benchmark reports.

Figures are written straight to files (Agg backend); nothing here is needed
by the numerical pipeline, which emits the same information as data files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "save_loss_curve",
    "save_scan_profiles",
    "save_series_heatmap",
    "save_benchmark_summary",
]


def save_loss_curve(loss_curve: list[dict], path, chosen: int | None = None) -> None:
    """Plot fit and penalised loss against the number of changes."""
    ks = [row["k"] for row in loss_curve]
    loss = [row["loss"] for row in loss_curve]
    pen = [row["penalized"] for row in loss_curve]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, loss, "o-", label="fit loss", color="tab:grey")
    ax.plot(ks, pen, "s-", label="penalised loss", color="tab:blue")
    best = int(np.argmin(pen))
    ax.axvline(ks[best], color="tab:blue", ls=":", lw=1)
    if chosen is not None and chosen != ks[best]:
        ax.axvline(chosen, color="tab:red", ls="--", lw=1, label="detected")
    ax.set_xlabel("number of change-points")
    ax.set_ylabel("loss")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scan_profiles(profiles: list[dict], path) -> None:
    """Plot the scan statistic of every searched segment."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for prof in profiles:
        s, e = prof["segment"]
        ax.plot(prof["candidates"], prof["statistics"], ".-", ms=3, lw=0.8,
                label=f"[{s}, {e})")
    ax.set_xlabel("candidate split")
    ax.set_ylabel("scan statistic")
    if len(profiles) <= 8:
        ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_series_heatmap(
    X,
    path,
    changepoints=(),
    true_changepoints=(),
    max_rows: int = 20,
) -> None:
    """Heatmap of (a subset of) the series with change-points overlaid.

    Detected change-points are dashed; known true locations, when given,
    are solid.
    """
    X = np.asarray(X, dtype=float)
    shown = X[:max_rows]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.imshow(shown, aspect="auto", interpolation="nearest", cmap="viridis")
    for tau in true_changepoints:
        ax.axvline(tau - 0.5, color="black", lw=1.5)
    for tau in changepoints:
        ax.axvline(tau - 0.5, color="white", ls="--", lw=1.2)
    ax.set_xlabel("time")
    ax.set_ylabel("variable")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_benchmark_summary(report, path) -> None:
    """Bar chart of TNC rate and mean V-measure per benchmark cell."""
    rows = report.rows
    labels = [f"p={r.p}, d={r.d}, {r.scenario}" for r in rows]
    x = np.arange(len(rows))
    fig, ax = plt.subplots(figsize=(max(5, 1.2 * len(rows) + 2), 4))
    ax.bar(x - 0.18, [r.tnc_rate for r in rows], width=0.36, label="TNC rate")
    ax.bar(x + 0.18, [r.mean_vm for r in rows], width=0.36, label="mean V-measure")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
