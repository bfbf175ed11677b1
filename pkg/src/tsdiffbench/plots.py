"""Matplotlib figure output for the generate and report paths."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evaluator import EvalReport


def save_pair_overlay(sample, path: str) -> None:
    """Reference/target overlay with ground-truth intervals shaded."""
    fig, ax = plt.subplots(figsize=(9, 3.2), dpi=110)
    t = np.arange(sample.ref.size)
    ax.plot(t, sample.ref, lw=1.0, color="#1f77b4", label="reference")
    ax.plot(t, sample.tgt, lw=1.0, color="#d62728", label="target", alpha=0.85)
    for rec in sample.ground_truth:
        ax.axvspan(rec.start, rec.end, color="#2ca02c", alpha=0.12)
    ax.set_xlim(0, sample.ref.size - 1)
    ax.set_xlabel("sample")
    ax.set_title(sample.id)
    ax.legend(loc="upper right", fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_report_chart(report: EvalReport, path: str) -> None:
    """Bar chart of field accuracies and per-category match accuracy."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.4), dpi=110)
    fields = [(k.capitalize(), v) for k, v in report.field_acc.items()]
    fields.append(("IoU", report.mean_iou))
    fields.append(("Match", report.match_acc))
    labels = [k for k, v in fields if v is not None]
    values = [v for _, v in fields if v is not None]
    ax1.bar(labels, values, color="#1f77b4")
    ax1.set_ylim(0, 100)
    ax1.set_ylabel("%")
    ax1.set_title("Field / match accuracy")
    ax1.tick_params(axis="x", rotation=30, labelsize=8)

    cats = [(k.capitalize(), v) for k, v in report.match_acc_by_category.items()
            if v is not None]
    cats.append(("OPR", report.opr))
    cats.append(("UPR", report.upr))
    ax2.bar([k for k, _ in cats], [v for _, v in cats], color="#ff7f0e")
    ax2.set_ylim(0, 100)
    ax2.set_title("Match by category / unmatched rates")
    ax2.tick_params(axis="x", rotation=30, labelsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
