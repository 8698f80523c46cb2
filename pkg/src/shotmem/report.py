"""Metric report emission: JSON, a flat CSV pair table, and figures.

JSON and CSV output is byte-deterministic for identical reports so
re-evaluation of the same run can be compared with a plain diff.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import MetricsReport

REPORT_JSON = "metrics_report.json"
PAIR_TABLE_CSV = "pair_table.csv"
HEATMAP_PNG = "pair_similarity_heatmap.png"
SUMMARY_PNG = "metrics_summary.png"
PAIR_SCATTER_PNG = "prompt_vs_video_similarity.png"


def write_report(report: MetricsReport, out_dir) -> dict[str, Path]:
    """Write the report files; returns a name -> path map."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / REPORT_JSON,
        "pair_table": out / PAIR_TABLE_CSV,
        "heatmap": out / HEATMAP_PNG,
        "summary": out / SUMMARY_PNG,
        "scatter": out / PAIR_SCATTER_PNG,
    }
    paths["report"].write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with paths["pair_table"].open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shot_a", "shot_b", "video_similarity", "prompt_similarity", "in_topk"])
        for p in report.pair_table:
            writer.writerow(
                [p.shot_a, p.shot_b, repr(p.video_similarity), repr(p.prompt_similarity), int(p.in_topk)]
            )
    _plot_heatmap(report, paths["heatmap"])
    _plot_summary(report, paths["summary"])
    _plot_scatter(report, paths["scatter"])
    return paths


def _pair_matrix(report: MetricsReport) -> np.ndarray:
    n = 0
    for p in report.pair_table:
        n = max(n, p.shot_a + 1, p.shot_b + 1)
    mat = np.eye(n)
    for p in report.pair_table:
        mat[p.shot_a, p.shot_b] = p.video_similarity
        mat[p.shot_b, p.shot_a] = p.video_similarity
    return mat


def _plot_heatmap(report: MetricsReport, path: Path) -> None:
    mat = _pair_matrix(report)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(mat, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xlabel("shot")
    ax.set_ylabel("shot")
    ax.set_title("shot-pair video similarity")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_summary(report: MetricsReport, path: Path) -> None:
    labels = ["aesthetic", "prompt\nglobal", "prompt\nsingle", "consistency\noverall", "consistency\ntop-10"]
    values = [
        report.aesthetic_quality,
        report.prompt_following_global,
        report.prompt_following_single,
        report.consistency_overall,
        report.consistency_top10,
    ]
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    bars = ax.bar(labels, values, color="#4878d0")
    ax.bar_label(bars, fmt="%.3f", padding=2, fontsize=8)
    ax.set_ylabel("score")
    ax.set_title("story metrics")
    ax.axhline(0.0, color="black", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_scatter(report: MetricsReport, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    top = [p for p in report.pair_table if p.in_topk]
    rest = [p for p in report.pair_table if not p.in_topk]
    if rest:
        ax.scatter(
            [p.prompt_similarity for p in rest],
            [p.video_similarity for p in rest],
            s=18,
            color="#b0b0b0",
            label="other pairs",
        )
    if top:
        ax.scatter(
            [p.prompt_similarity for p in top],
            [p.video_similarity for p in top],
            s=26,
            color="#d65f5f",
            label="top-k by prompt",
        )
    ax.set_xlabel("prompt similarity")
    ax.set_ylabel("video similarity")
    ax.set_title("pairwise similarities")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def summary_row(report: MetricsReport) -> str:
    """One line shaped like a results-table row."""
    return (
        f"aesthetic {report.aesthetic_quality:.4f} | "
        f"prompt-following global {report.prompt_following_global:.4f} "
        f"single {report.prompt_following_single:.4f} | "
        f"consistency overall {report.consistency_overall:.4f} "
        f"top10 {report.consistency_top10:.4f}"
    )
