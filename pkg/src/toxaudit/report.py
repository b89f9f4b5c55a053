"""Corpus statistics, prediction-file handling, bias evaluation and rendering.

This is the layer the CLI drives.  Prediction files decouple scoring from
auditing: any external model's scores can be imported and evaluated with the
same metric path as the built-in classifier.

Rendering is strictly deterministic: the same report object always produces
identical bytes, AUC cells print with 4 decimal places, and subgroups whose
metrics are missing render as "n/a" and are excluded from the combined score.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Sequence

import numpy as np

from . import fairmetrics
from .corpus import (
    DEFAULT_MEMBERSHIP_THRESHOLD,
    REACTION_COLUMNS,
    SUBTYPE_COLUMNS,
    Corpus,
    binarize_target,
)
from .errors import DataError, SchemaError
from .fairmetrics import (
    BiasReport,
    CounterfactualGenerator,
    ScoreConfig,
    ScoredExample,
    SubgroupAucs,
    SubgroupReportRow,
)

# The identity subgroups reported by default when present in the corpus.
DEFAULT_REPORT_SUBGROUPS: tuple[str, ...] = (
    "male",
    "female",
    "christian",
    "muslim",
    "white",
    "jewish",
    "black",
    "homosexual_gay_or_lesbian",
    "psychiatric_or_mental_illness",
)

HISTOGRAM_BINS = 10


@dataclass
class CorrelationMatrix:
    """Symmetric Pearson matrix; undefined pairs are NaN, diagonal is 1."""

    names: list[str]
    values: np.ndarray


@dataclass
class EdaSummary:
    n_rows: int
    n_toxic: int
    n_nontoxic: int
    toxic_fraction: float
    nontoxic_fraction: float
    weighted_toxicity: dict[str, float | None]
    subtype_histograms: dict[str, list[int]]
    histogram_edges: list[float]
    reaction_correlations: CorrelationMatrix
    identity_correlations: CorrelationMatrix
    n_rejected_rows: int = 0


def weighted_toxicity(corpus: Corpus, identity: str) -> float | None:
    """Identity-weighted mean toxicity: sum(identity * target) over rows with
    a score for the identity, divided by the count of rows where that score
    is strictly positive.  None when no row has a positive score."""
    if identity not in corpus.identity_registry:
        known = ", ".join(corpus.identity_registry) or "<none>"
        raise DataError(f"unknown identity {identity!r}; known identities: {known}")
    numerator = 0.0
    positive = 0
    for c in corpus:
        value = c.identity_scores.get(identity)
        if value is None:
            continue
        numerator += value * c.target
        if value > 0:
            positive += 1
    if positive == 0:
        return None
    return numerator / positive


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Two-pass centered Pearson correlation; NaN when either side is constant."""
    if len(x) < 2:
        return math.nan
    dx = x - x.mean()
    dy = y - y.mean()
    denom = math.sqrt(float(dx @ dx)) * math.sqrt(float(dy @ dy))
    if denom == 0.0:
        return math.nan
    return float(dx @ dy) / denom


def _correlation_matrix(columns: dict[str, list[float | None]]) -> CorrelationMatrix:
    # Pairwise-complete: each pair uses only the rows where both are present.
    names = list(columns)
    k = len(names)
    values = np.full((k, k), math.nan)
    arrays = {
        name: np.array([math.nan if v is None else v for v in col], dtype=float)
        for name, col in columns.items()
    }
    present = {name: ~np.isnan(arr) for name, arr in arrays.items()}
    for i in range(k):
        values[i, i] = 1.0
        for j in range(i + 1, k):
            both = present[names[i]] & present[names[j]]
            r = _pearson(arrays[names[i]][both], arrays[names[j]][both])
            values[i, j] = values[j, i] = r
    return CorrelationMatrix(names=names, values=values)


def stats(corpus: Corpus) -> EdaSummary:
    """Compute the full EDA summary: class balance, per-identity weighted
    toxicity, subtype histograms, and the two Pearson correlation matrices
    (target vs reactions; target vs subtypes vs identities).

    Absent cells are excluded pairwise, never imputed as zero.
    """
    if len(corpus) == 0:
        raise DataError("cannot summarize an empty corpus")

    n_toxic = sum(binarize_target(c.target) for c in corpus)
    n = len(corpus)

    edges = [i / HISTOGRAM_BINS for i in range(HISTOGRAM_BINS + 1)]
    histograms: dict[str, list[int]] = {}
    for name in SUBTYPE_COLUMNS:
        values = [c.subtype_scores[name] for c in corpus if name in c.subtype_scores]
        counts, _ = np.histogram(values, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
        histograms[name] = [int(v) for v in counts]

    reaction_columns: dict[str, list[float | None]] = {
        "target": [c.target for c in corpus]
    }
    for name in REACTION_COLUMNS:
        reaction_columns[name] = [
            float(c.reactions[name]) if c.reactions and name in c.reactions else None
            for c in corpus
        ]

    identity_columns: dict[str, list[float | None]] = {
        "target": [c.target for c in corpus]
    }
    for name in SUBTYPE_COLUMNS:
        identity_columns[name] = [c.subtype_scores.get(name) for c in corpus]
    for name in corpus.identity_registry:
        identity_columns[name] = [c.identity_scores.get(name) for c in corpus]

    return EdaSummary(
        n_rows=n,
        n_toxic=n_toxic,
        n_nontoxic=n - n_toxic,
        toxic_fraction=n_toxic / n,
        nontoxic_fraction=(n - n_toxic) / n,
        weighted_toxicity={
            name: weighted_toxicity(corpus, name) for name in corpus.identity_registry
        },
        subtype_histograms=histograms,
        histogram_edges=edges,
        reaction_correlations=_correlation_matrix(reaction_columns),
        identity_correlations=_correlation_matrix(identity_columns),
        n_rejected_rows=corpus.ingest_stats.n_rejected if corpus.ingest_stats else 0,
    )


@dataclass
class PredictionFile:
    """Parsed id,score rows plus a provenance label for the report header."""

    scores: dict[str, float]
    provenance: str = "unknown"


def write_predictions(
    ids: Sequence[str],
    scores: Sequence[float],
    dest,
    provenance: str = "logreg",
) -> None:
    """Export predictions as CSV `id,score` with a provenance comment line."""
    if isinstance(dest, (str, Path)):
        stream: IO[str] = open(dest, "w", encoding="utf-8", newline="")
        owns = True
    else:
        stream, owns = dest, False
    try:
        stream.write(f"# provenance={provenance}\n")
        stream.write("id,score\n")
        for comment_id, score in zip(ids, scores):
            stream.write(f"{comment_id},{score:.6f}\n")
    finally:
        if owns:
            stream.close()


def read_prediction_file(source) -> PredictionFile:
    """Parse a prediction CSV: optional `# provenance=` line, `id,score` header,
    then one row per scored comment.  Duplicate ids and scores outside [0, 1]
    are errors with their row number."""
    if isinstance(source, (str, Path)):
        stream: IO[str] = open(source, "r", encoding="utf-8", newline="")
        owns = True
    else:
        stream, owns = source, False
    try:
        provenance = "unknown"
        first = stream.readline()
        if first.startswith("# provenance="):
            provenance = first.removeprefix("# provenance=").strip()
            first = stream.readline()
        header = [h.strip() for h in first.strip().split(",")]
        if header != ["id", "score"]:
            raise SchemaError(f"prediction file must start with 'id,score', got {first.strip()!r}")
        scores: dict[str, float] = {}
        for row_no, row in enumerate(csv.reader(stream), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise SchemaError(f"prediction row {row_no}: expected 2 cells, got {len(row)}")
            comment_id = row[0].strip()
            if comment_id in scores:
                raise DataError(f"prediction row {row_no}: duplicate id {comment_id!r}")
            try:
                score = float(row[1])
            except ValueError:
                raise DataError(
                    f"prediction row {row_no}: unparsable score {row[1]!r}"
                ) from None
            if not 0.0 <= score <= 1.0:
                raise DataError(f"prediction row {row_no}: score outside [0, 1]: {score}")
            scores[comment_id] = score
        return PredictionFile(scores=scores, provenance=provenance)
    finally:
        if owns:
            stream.close()


def import_predictions(
    source,
    corpus: Corpus,
    membership_threshold: float = DEFAULT_MEMBERSHIP_THRESHOLD,
) -> list[ScoredExample]:
    """Join a prediction file against a corpus.

    Every file id must exist in the corpus; the result follows corpus order
    and carries the binarized label plus the comment's subgroup memberships
    at the given threshold.
    """
    pf = source if isinstance(source, PredictionFile) else read_prediction_file(source)
    unknown = [i for i in pf.scores if i not in corpus]
    if unknown:
        shown = ", ".join(repr(u) for u in unknown[:5])
        more = f" (+{len(unknown) - 5} more)" if len(unknown) > 5 else ""
        raise DataError(f"prediction ids not in corpus: {shown}{more}")
    registry = corpus.identity_registry
    out: list[ScoredExample] = []
    for c in corpus:
        if c.id not in pf.scores:
            continue
        memberships = frozenset(
            name
            for name in registry
            if name in c.identity_scores and c.identity_scores[name] >= membership_threshold
        )
        out.append(
            ScoredExample(
                id=c.id,
                label=binarize_target(c.target),
                score=pf.scores[c.id],
                subgroups=memberships,
            )
        )
    return out


def evaluate(
    scored: Sequence[ScoredExample],
    subgroups: Sequence[str],
    cfg: ScoreConfig | None = None,
    error_rate_threshold: float | None = None,
    ctf_score_fn: Callable[[str], float] | None = None,
    ctf_texts: Iterable[str] | None = None,
    ctf_generator: CounterfactualGenerator | None = None,
) -> BiasReport:
    """Build the full bias report for a set of scored examples.

    Rows keep the given subgroup order; subgroups failing the minimum-count
    gates are flagged missing and excluded from the generalized-mean score.
    Error-rate gaps are appended when a threshold is given, and the mean
    counterfactual gap when a scorer plus texts are given.
    """
    if not scored:
        raise DataError("no scored examples to evaluate")
    cfg = cfg or ScoreConfig()
    overall = fairmetrics.roc_auc(scored)

    rows: list[SubgroupReportRow] = []
    complete: dict[str, SubgroupAucs] = {}
    for name in subgroups:
        members = [e for e in scored if name in e.subgroups]
        n_pos = sum(e.label for e in members)
        row = SubgroupReportRow(
            name=name,
            n_members=len(members),
            n_positive=n_pos,
            n_negative=len(members) - n_pos,
            subgroup_auc=fairmetrics.subgroup_auc(
                scored, name, cfg.min_subgroup_pos, cfg.min_subgroup_neg
            ),
            bpsn_auc=fairmetrics.bpsn_auc(
                scored, name, cfg.min_subgroup_pos, cfg.min_subgroup_neg
            ),
            bnsp_auc=fairmetrics.bnsp_auc(
                scored, name, cfg.min_subgroup_pos, cfg.min_subgroup_neg
            ),
        )
        rows.append(row)
        if not row.missing:
            complete[name] = SubgroupAucs(row.subgroup_auc, row.bpsn_auc, row.bnsp_auc)

    generalized = fairmetrics.final_score(overall, complete, cfg) if complete else None

    error_rates = None
    if error_rate_threshold is not None:
        error_rates = fairmetrics.fped_fned(scored, list(subgroups), error_rate_threshold)

    mean_gap: float | None = None
    n_ctf = 0
    if ctf_score_fn is not None and ctf_texts is not None:
        mean_gap, n_ctf = fairmetrics.mean_ctf_gap(ctf_score_fn, ctf_texts, ctf_generator)

    return BiasReport(
        overall_auc=overall,
        rows=rows,
        generalized_mean_auc=generalized,
        score_config=cfg,
        error_rates=error_rates,
        mean_ctf_gap=mean_gap,
        n_ctf_texts=n_ctf,
    )


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.4f}"


def render_report(report: BiasReport, fmt: str = "table") -> str:
    """Render a BiasReport as a plain table or as JSON.

    Both formats are byte-deterministic for a given report.
    """
    if fmt == "json":
        return _report_json(report)
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")

    name_w = max([len("subgroup")] + [len(r.name) for r in report.rows])
    lines = ["bias audit report", "=" * len("bias audit report"), ""]
    header = f"{'subgroup':<{name_w}}  {'n':>6}  {'subgroup_auc':>12}  {'bpsn_auc':>8}  {'bnsp_auc':>8}"
    lines.append(header)
    lines.append("-" * len(header))
    for r in report.rows:
        flag = "  (missing)" if r.missing else ""
        lines.append(
            f"{r.name:<{name_w}}  {r.n_members:>6}  {_fmt(r.subgroup_auc):>12}  "
            f"{_fmt(r.bpsn_auc):>8}  {_fmt(r.bnsp_auc):>8}{flag}"
        )
    lines.append("")
    lines.append(f"overall_auc           {report.overall_auc:.4f}")
    excluded = [r.name for r in report.rows if r.missing]
    included = len(report.rows) - len(excluded)
    note = f"power mean p={report.score_config.power:g} over {included} subgroup(s)"
    if excluded:
        note += f"; missing excluded: {', '.join(excluded)}"
    lines.append(f"generalized_mean_auc  {_fmt(report.generalized_mean_auc)}  ({note})")

    if report.error_rates is not None:
        er = report.error_rates
        lines.append("")
        lines.append(f"error rate gaps at threshold {er.threshold:g}")
        sub_header = f"{'subgroup':<{name_w}}  {'n':>6}  {'fpr':>8}  {'fnr':>8}"
        lines.append(sub_header)
        lines.append("-" * len(sub_header))
        lines.append(
            f"{'<overall>':<{name_w}}  {'':>6}  {er.overall_fpr:>8.4f}  {er.overall_fnr:>8.4f}"
        )
        for row in er.rows:
            lines.append(
                f"{row.subgroup:<{name_w}}  {row.n_members:>6}  {_fmt(row.fpr):>8}  {_fmt(row.fnr):>8}"
            )
        lines.append(f"fped  {er.fped:.4f}")
        lines.append(f"fned  {er.fned:.4f}")

    if report.n_ctf_texts or report.mean_ctf_gap is not None:
        lines.append("")
        lines.append(
            f"mean_ctf_gap  {_fmt(report.mean_ctf_gap)}  (over {report.n_ctf_texts} text(s))"
        )
    lines.append("")
    return "\n".join(lines)


def _report_json(report: BiasReport) -> str:
    cfg = report.score_config
    payload = {
        "overall_auc": report.overall_auc,
        "generalized_mean_auc": report.generalized_mean_auc,
        "score_config": {
            "weight_overall": cfg.weight_overall,
            "weight_subgroup": cfg.weight_subgroup,
            "weight_bpsn": cfg.weight_bpsn,
            "weight_bnsp": cfg.weight_bnsp,
            "power": cfg.power,
            "min_subgroup_pos": cfg.min_subgroup_pos,
            "min_subgroup_neg": cfg.min_subgroup_neg,
        },
        "subgroups": [
            {
                "name": r.name,
                "n_members": r.n_members,
                "n_positive": r.n_positive,
                "n_negative": r.n_negative,
                "subgroup_auc": r.subgroup_auc,
                "bpsn_auc": r.bpsn_auc,
                "bnsp_auc": r.bnsp_auc,
                "missing": r.missing,
            }
            for r in report.rows
        ],
    }
    if report.error_rates is not None:
        er = report.error_rates
        payload["error_rates"] = {
            "threshold": er.threshold,
            "overall_fpr": er.overall_fpr,
            "overall_fnr": er.overall_fnr,
            "fped": er.fped,
            "fned": er.fned,
            "subgroups": [
                {"name": row.subgroup, "n_members": row.n_members, "fpr": row.fpr, "fnr": row.fnr}
                for row in er.rows
            ],
        }
    else:
        payload["error_rates"] = None
    payload["mean_ctf_gap"] = report.mean_ctf_gap
    payload["n_ctf_texts"] = report.n_ctf_texts
    return json.dumps(payload, indent=2) + "\n"


def render_stats(summary: EdaSummary, fmt: str = "table") -> str:
    """Render an EdaSummary as a plain text report or as JSON."""
    if fmt == "json":
        return _stats_json(summary)
    if fmt != "table":
        raise ValueError(f"unknown stats format {fmt!r}")

    lines = ["corpus statistics", "=" * len("corpus statistics"), ""]
    lines.append(f"rows            {summary.n_rows}")
    if summary.n_rejected_rows:
        lines.append(f"rejected rows   {summary.n_rejected_rows}")
    lines.append(
        f"non-toxic       {summary.n_nontoxic}  ({summary.nontoxic_fraction:.4f})"
    )
    lines.append(f"toxic           {summary.n_toxic}  ({summary.toxic_fraction:.4f})")

    lines.append("")
    lines.append("weighted toxicity by identity (descending)")
    ranked = sorted(
        summary.weighted_toxicity.items(),
        key=lambda kv: (-(kv[1] if kv[1] is not None else -1.0), kv[0]),
    )
    name_w = max([len("identity")] + [len(n) for n, _ in ranked]) if ranked else len("identity")
    for name, value in ranked:
        lines.append(f"  {name:<{name_w}}  {_fmt(value)}")
    if not ranked:
        lines.append("  <no identity columns present>")

    lines.append("")
    lines.append(f"subtype score histograms ({HISTOGRAM_BINS} bins over [0, 1])")
    for name, counts in summary.subtype_histograms.items():
        lines.append(f"  {name:<18}  {' '.join(f'{c:>6}' for c in counts)}")

    for title, matrix in (
        ("reaction correlations (pearson)", summary.reaction_correlations),
        ("identity correlations (pearson)", summary.identity_correlations),
    ):
        lines.append("")
        lines.append(title)
        col_w = max(len(n) for n in matrix.names)
        lines.append("  " + " " * col_w + "  " + "  ".join(f"{n:>{max(len(n), 7)}}" for n in matrix.names))
        for i, row_name in enumerate(matrix.names):
            cells = []
            for j, col_name in enumerate(matrix.names):
                v = matrix.values[i, j]
                cells.append(f"{'n/a' if math.isnan(v) else f'{v:.4f}':>{max(len(col_name), 7)}}")
            lines.append(f"  {row_name:<{col_w}}  " + "  ".join(cells))
    lines.append("")
    return "\n".join(lines)


def _stats_json(summary: EdaSummary) -> str:
    def matrix_payload(matrix: CorrelationMatrix):
        return {
            "names": matrix.names,
            "values": [
                [None if math.isnan(v) else float(v) for v in row] for row in matrix.values
            ],
        }

    payload = {
        "n_rows": summary.n_rows,
        "n_rejected_rows": summary.n_rejected_rows,
        "class_distribution": {
            "n_nontoxic": summary.n_nontoxic,
            "n_toxic": summary.n_toxic,
            "nontoxic_fraction": summary.nontoxic_fraction,
            "toxic_fraction": summary.toxic_fraction,
        },
        "weighted_toxicity": summary.weighted_toxicity,
        "histogram_edges": summary.histogram_edges,
        "subtype_histograms": summary.subtype_histograms,
        "reaction_correlations": matrix_payload(summary.reaction_correlations),
        "identity_correlations": matrix_payload(summary.identity_correlations),
    }
    return json.dumps(payload, indent=2) + "\n"
