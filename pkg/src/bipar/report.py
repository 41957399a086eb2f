"""Report rendering: matplotlib figures written next to delimited output.

Each report writes a PNG figure and a CSV with the same stem so the numbers
behind every plot stay machine-readable.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def explained_variance_report(singular_values: np.ndarray, out_dir, stem: str = "explained_variance") -> tuple[str, str]:
    """Per-component variance share and its cumulative curve."""
    os.makedirs(out_dir, exist_ok=True)
    sv = np.asarray(singular_values, dtype=np.float64)
    var = sv * sv
    total = var.sum()
    share = var / total if total > 0 else np.zeros_like(var)
    cumulative = np.cumsum(share)

    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _write_csv(
        csv_path,
        ["component", "singular_value", "variance_share", "cumulative_share"],
        [(i, sv[i], share[i], cumulative[i]) for i in range(len(sv))],
    )

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5))
    ax1.bar(np.arange(len(share)), share, color="tab:blue")
    ax1.set_xlabel("component")
    ax1.set_ylabel("variance share")
    ax1.set_title("Per-component variance")
    ax2.plot(np.arange(len(cumulative)), cumulative, marker=".", color="tab:orange")
    ax2.set_xlabel("component")
    ax2.set_ylabel("cumulative share")
    ax2.set_ylim(0.0, 1.05)
    ax2.set_title("Cumulative variance")
    fig.tight_layout()
    png_path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path, csv_path


def convergence_report(history, out_dir, stem: str = "fit_convergence") -> tuple[str, str]:
    """Smoothed-loss trajectory of one fit run."""
    os.makedirs(out_dir, exist_ok=True)
    hist = np.asarray(history, dtype=np.float64)

    csv_path = os.path.join(out_dir, f"{stem}.csv")
    _write_csv(csv_path, ["iteration", "loss"], list(enumerate(hist)))

    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    positive = hist[hist > 0]
    if len(positive) == len(hist) and len(hist) > 1:
        ax.semilogy(hist, color="tab:blue")
    else:
        ax.plot(hist, color="tab:blue")
    ax.set_xlabel("iteration")
    ax.set_ylabel("smoothed loss")
    ax.set_title("Fit convergence")
    fig.tight_layout()
    png_path = os.path.join(out_dir, f"{stem}.png")
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return png_path, csv_path
