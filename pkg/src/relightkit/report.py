"""Figure rendering for benchmark reports.

Every table the command line writes gets a PNG figure next to it; all
plotting goes through the Agg backend so reports render headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_quality_figure(reports: dict, path, title: str = "Relight quality") -> Path:
    """Per-direction PSNR / SSIM / delta-E panels, one line per method."""
    path = Path(path)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4))
    for name, report in reports.items():
        rows = report.to_rows()
        idx = np.arange(len(rows))
        psnr = [r["psnr_db"] if math.isfinite(r["psnr_db"]) else np.nan for r in rows]
        axes[0].plot(idx, psnr, marker="o", label=name)
        axes[1].plot(idx, [r["ssim"] for r in rows], marker="o", label=name)
        axes[2].plot(idx, [r["delta_e_mean"] for r in rows], marker="o", label=name)
    axes[0].set_ylabel("PSNR (dB)")
    axes[1].set_ylabel("SSIM")
    axes[2].set_ylabel("mean delta-E")
    for ax in axes:
        ax.set_xlabel("test direction")
        ax.grid(alpha=0.3)
    axes[0].legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_subsample_figure(rows, path) -> Path:
    """Quality vs training fraction, with total training time overlaid."""
    path = Path(path)
    fractions = [r.fraction for r in rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(fractions, [r.teacher_psnr for r in rows], "o-", label="teacher PSNR")
    ax.plot(fractions, [r.student_psnr for r in rows], "s-", label="student PSNR")
    ax.set_xscale("log")
    ax.set_xlabel("fraction of pixels trained on")
    ax.set_ylabel("test PSNR (dB)")
    ax.grid(alpha=0.3)
    twin = ax.twinx()
    twin.plot(
        fractions,
        [r.total_train_s for r in rows],
        "^--",
        color="tab:red",
        label="train time",
    )
    twin.set_ylabel("total training time (s)", color="tab:red")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = twin.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_throughput_figure(rows, path) -> Path:
    """Decode throughput vs pixel count, one line per decoder."""
    path = Path(path)
    methods = sorted({r.method for r in rows})
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for method in methods:
        pts = sorted(
            [(r.pixels, r.pixels_per_second) for r in rows if r.method == method]
        )
        ax.plot([p for p, _ in pts], [s for _, s in pts], "o-", label=method)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("pixels decoded per frame")
    ax.set_ylabel("pixels / second")
    ax.grid(alpha=0.3, which="both")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_relight_strip(images, labels, path, title: str = "") -> Path:
    """Side-by-side relit frames for eyeballing a comparison."""
    path = Path(path)
    n = len(images)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4))
    if n == 1:
        axes = [axes]
    for ax, img, label in zip(axes, images, labels):
        ax.imshow(np.clip(img, 0, 1))
        ax.set_title(label, fontsize=9)
        ax.axis("off")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
