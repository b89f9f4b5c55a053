"""Render corpus statistics and bias reports as matplotlib figures.

Figures are a side output of the report path: the delimited/table files stay
the canonical artifact, and nothing downstream consumes the images.  The Agg
backend is forced so rendering works headless.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fairmetrics import BiasReport
from .report import CorrelationMatrix, EdaSummary


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def _heatmap(matrix: CorrelationMatrix, title: str, annotate: bool) -> "plt.Figure":
    n = len(matrix.names)
    side = max(4.0, 0.45 * n + 1.5)
    fig, ax = plt.subplots(figsize=(side, side))
    im = ax.imshow(matrix.values, vmin=-1.0, vmax=1.0, cmap="coolwarm")
    ax.set_xticks(range(n), matrix.names, rotation=90, fontsize=7)
    ax.set_yticks(range(n), matrix.names, fontsize=7)
    if annotate:
        for i in range(n):
            for j in range(n):
                v = matrix.values[i, j]
                ax.text(
                    j,
                    i,
                    "n/a" if math.isnan(v) else f"{v:.2f}",
                    ha="center",
                    va="center",
                    fontsize=7,
                )
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title(title)
    return fig


def render_stats_figures(summary: EdaSummary, outdir: str | Path) -> list[Path]:
    """Write the EDA figures into outdir and return the file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(["non-toxic", "toxic"], [summary.n_nontoxic, summary.n_toxic], color=["tab:blue", "tab:red"])
    ax.set_ylabel("comments")
    ax.set_title("class distribution")
    for x, v in enumerate([summary.n_nontoxic, summary.n_toxic]):
        ax.text(x, v, str(v), ha="center", va="bottom", fontsize=8)
    written.append(_save(fig, outdir / "class_distribution.png"))

    names = list(summary.subtype_histograms)
    if names:
        ncols = 3
        nrows = (len(names) + ncols - 1) // ncols
        fig, axes = plt.subplots(nrows, ncols, figsize=(3.2 * ncols, 2.6 * nrows), squeeze=False)
        edges = np.asarray(summary.histogram_edges)
        centers = (edges[:-1] + edges[1:]) / 2
        for k, name in enumerate(names):
            ax = axes[k // ncols][k % ncols]
            ax.bar(centers, summary.subtype_histograms[name], width=0.09, color="tab:purple")
            ax.set_title(name, fontsize=9)
            ax.set_yscale("symlog")
        for k in range(len(names), nrows * ncols):
            axes[k // ncols][k % ncols].axis("off")
        fig.suptitle("toxicity subtype score distributions")
        fig.tight_layout()
        written.append(_save(fig, outdir / "subtype_distributions.png"))

    ranked = [(n, v) for n, v in summary.weighted_toxicity.items() if v is not None]
    if ranked:
        ranked.sort(key=lambda kv: kv[1])
        fig, ax = plt.subplots(figsize=(6, 0.35 * len(ranked) + 1.5))
        ax.barh([n for n, _ in ranked], [v for _, v in ranked], color="tab:orange")
        ax.set_xlabel("weighted toxicity")
        ax.set_title("weighted toxicity by identity")
        written.append(_save(fig, outdir / "weighted_toxicity.png"))

    written.append(
        _save(
            _heatmap(summary.reaction_correlations, "target vs reaction correlations", True),
            outdir / "reaction_correlations.png",
        )
    )
    written.append(
        _save(
            _heatmap(
                summary.identity_correlations,
                "target, subtype and identity correlations",
                len(summary.identity_correlations.names) <= 12,
            ),
            outdir / "identity_correlations.png",
        )
    )
    return written


def render_report_figures(report: BiasReport, outdir: str | Path) -> list[Path]:
    """Write the bias-report figures into outdir and return the file paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    rows = report.rows
    names = [r.name for r in rows]
    x = np.arange(len(names))
    width = 0.27

    fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(names) + 2), 4))
    for offset, (label, values) in enumerate(
        (
            ("subgroup_auc", [r.subgroup_auc for r in rows]),
            ("bpsn_auc", [r.bpsn_auc for r in rows]),
            ("bnsp_auc", [r.bnsp_auc for r in rows]),
        )
    ):
        heights = [0.0 if v is None else v for v in values]
        ax.bar(x + (offset - 1) * width, heights, width, label=label)
    ax.axhline(report.overall_auc, color="black", linestyle="--", linewidth=1, label="overall_auc")
    ax.set_xticks(x, names, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("AUC")
    title = "per-subgroup bias AUCs"
    if report.generalized_mean_auc is not None:
        title += f"  (generalized mean {report.generalized_mean_auc:.4f})"
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    written.append(_save(fig, outdir / "bias_aucs.png"))

    if report.error_rates is not None:
        er = report.error_rates
        sub_names = [r.subgroup for r in er.rows]
        xs = np.arange(len(sub_names))
        fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(sub_names) + 2), 4))
        ax.bar(xs - 0.18, [r.fpr if r.fpr is not None else 0.0 for r in er.rows], 0.36, label="fpr")
        ax.bar(xs + 0.18, [r.fnr if r.fnr is not None else 0.0 for r in er.rows], 0.36, label="fnr")
        ax.axhline(er.overall_fpr, color="tab:blue", linestyle="--", linewidth=1)
        ax.axhline(er.overall_fnr, color="tab:orange", linestyle="--", linewidth=1)
        ax.set_xticks(xs, sub_names, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel("rate")
        ax.set_title(f"error rates at threshold {er.threshold:g}  (fped {er.fped:.4f}, fned {er.fned:.4f})")
        ax.legend(fontsize=8)
        fig.tight_layout()
        written.append(_save(fig, outdir / "error_rate_gaps.png"))

    return written
