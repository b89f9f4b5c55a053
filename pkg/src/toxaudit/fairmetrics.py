"""Classification and identity-bias metrics over scored examples.

The core statistic is ROC-AUC computed by the rank method with midranks, so
tied scores earn exactly half credit: AUC = P(score+ > score-) + 0.5 *
P(score+ = score-).  On top of it sit the per-subgroup bias views:

  subgroup AUC   restricted to subgroup members; low values mean the model
                 cannot separate toxic from non-toxic inside the subgroup
  BPSN AUC       background positives vs subgroup negatives; low values
                 diagnose false-positive bias against the subgroup
  BNSP AUC       subgroup positives vs background negatives; low values
                 diagnose false-negative bias

plus the generalized-mean final score, threshold-based FPED/FNED error-rate
gaps, the counterfactual token-substitution gap, and pinned AUC.

Undersized subgroups yield None (a missing-metric signal) rather than a
fabricated number.  All operations are pure over immutable inputs and their
results do not depend on execution order.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import UndefinedMetricError

DEFAULT_SCORE_POWER = -5.0
DEFAULT_ERROR_RATE_THRESHOLD = 0.5

_PINNED_RETRY_BUDGET = 10


@dataclass(frozen=True)
class ScoredExample:
    """The unit every metric consumes: true label, model score, memberships."""

    id: str
    label: int
    score: float
    subgroups: frozenset[str] = frozenset()

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score outside [0, 1]: {self.score}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


@dataclass
class ConfusionCounts:
    """Threshold-dependent confusion counts; rates are None when undefined."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def fpr(self) -> float | None:
        denom = self.fp + self.tn
        return self.fp / denom if denom else None

    @property
    def fnr(self) -> float | None:
        denom = self.fn + self.tp
        return self.fn / denom if denom else None


@dataclass
class ScoreConfig:
    """Weights and power for the combined bias score.

    The four weights default to 0.25 each and sum to 1; the negative default
    power makes the generalized mean dominated by the worst subgroup.
    """

    weight_overall: float = 0.25
    weight_subgroup: float = 0.25
    weight_bpsn: float = 0.25
    weight_bnsp: float = 0.25
    power: float = DEFAULT_SCORE_POWER
    min_subgroup_pos: int = 1
    min_subgroup_neg: int = 1


@dataclass
class SubgroupAucs:
    """The three per-subgroup submetrics feeding the final score."""

    subgroup_auc: float
    bpsn_auc: float
    bnsp_auc: float


@dataclass
class SubgroupReportRow:
    name: str
    n_members: int
    n_positive: int
    n_negative: int
    subgroup_auc: float | None
    bpsn_auc: float | None
    bnsp_auc: float | None

    @property
    def missing(self) -> bool:
        return None in (self.subgroup_auc, self.bpsn_auc, self.bnsp_auc)


@dataclass
class SubgroupErrorRates:
    subgroup: str
    n_members: int
    fpr: float | None
    fnr: float | None


@dataclass
class ErrorRateGaps:
    """FPED/FNED: summed absolute deviations from the overall FPR/FNR."""

    fped: float
    fned: float
    overall_fpr: float
    overall_fnr: float
    threshold: float
    rows: list[SubgroupErrorRates] = field(default_factory=list)


@dataclass
class BiasReport:
    """Per-subgroup metric rows plus overall AUC and the combined score."""

    overall_auc: float
    rows: list[SubgroupReportRow]
    generalized_mean_auc: float | None
    score_config: ScoreConfig
    error_rates: ErrorRateGaps | None = None
    mean_ctf_gap: float | None = None
    n_ctf_texts: int = 0


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their run."""
    order = np.argsort(scores, kind="mergesort")
    sorted_scores = scores[order]
    ranks = np.empty(len(scores), dtype=float)
    i = 0
    n = len(scores)
    while i < n:
        j = i
        while j + 1 < n and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    return ranks


def roc_auc(examples: Sequence[ScoredExample]) -> float:
    """Area under the ROC curve via the rank (Mann-Whitney) method.

    Equals the probability that a random positive outscores a random
    negative, with half credit for ties; O(n log n).
    """
    labels = np.fromiter((e.label for e in examples), dtype=int, count=len(examples))
    scores = np.fromiter((e.score for e in examples), dtype=float, count=len(examples))
    n_pos = int((labels == 1).sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError(
            f"AUC undefined with {n_pos} positive and {n_neg} negative examples"
        )
    pos_rank_sum = float(_midranks(scores)[labels == 1].sum())
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def subgroup_auc(
    examples: Sequence[ScoredExample],
    subgroup: str,
    min_pos: int = 1,
    min_neg: int = 1,
) -> float | None:
    """ROC-AUC restricted to subgroup members; None when undersized."""
    members = [e for e in examples if subgroup in e.subgroups]
    n_pos = sum(e.label for e in members)
    n_neg = len(members) - n_pos
    if n_pos < max(min_pos, 1) or n_neg < max(min_neg, 1):
        return None
    return roc_auc(members)


def bpsn_auc(
    examples: Sequence[ScoredExample],
    subgroup: str,
    min_pos: int = 1,
    min_neg: int = 1,
) -> float | None:
    """ROC-AUC over background positives plus subgroup negatives.

    A low value means non-toxic mentions of the identity are scored like
    toxic background comments: false-positive bias.
    """
    bg_pos = [e for e in examples if e.label == 1 and subgroup not in e.subgroups]
    sg_neg = [e for e in examples if e.label == 0 and subgroup in e.subgroups]
    if len(bg_pos) < 1 or len(sg_neg) < max(min_neg, 1):
        return None
    return roc_auc(bg_pos + sg_neg)


def bnsp_auc(
    examples: Sequence[ScoredExample],
    subgroup: str,
    min_pos: int = 1,
    min_neg: int = 1,
) -> float | None:
    """ROC-AUC over subgroup positives plus background negatives.

    A low value means toxic mentions of the identity are scored like
    non-toxic background comments: false-negative bias.
    """
    sg_pos = [e for e in examples if e.label == 1 and subgroup in e.subgroups]
    bg_neg = [e for e in examples if e.label == 0 and subgroup not in e.subgroups]
    if len(sg_pos) < max(min_pos, 1) or len(bg_neg) < 1:
        return None
    return roc_auc(sg_pos + bg_neg)


def power_mean(values: Iterable[float], p: float) -> float:
    """Generalized mean (mean of v^p)^(1/p); p = 0 is the geometric mean."""
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("power mean of an empty sequence")
    if p <= 0 and np.any(vals <= 0):
        raise ValueError("non-positive values are outside the domain for p <= 0")
    if p == 0:
        return float(np.exp(np.mean(np.log(vals))))
    return float(np.mean(vals**p) ** (1.0 / p))


def final_score(
    overall_auc: float,
    per_subgroup: Mapping[str, SubgroupAucs],
    cfg: ScoreConfig | None = None,
) -> float:
    """Weighted combination of overall AUC and the three power-mean families.

    score = w0 * overall + sum over the three submetric families of
    w_a * power_mean(family values across subgroups, p).
    """
    cfg = cfg or ScoreConfig()
    if not per_subgroup:
        raise ValueError("no subgroup submetrics to aggregate")
    triples = list(per_subgroup.values())
    return float(
        cfg.weight_overall * overall_auc
        + cfg.weight_subgroup * power_mean([t.subgroup_auc for t in triples], cfg.power)
        + cfg.weight_bpsn * power_mean([t.bpsn_auc for t in triples], cfg.power)
        + cfg.weight_bnsp * power_mean([t.bnsp_auc for t in triples], cfg.power)
    )


def confusion_at(examples: Iterable[ScoredExample], threshold: float) -> ConfusionCounts:
    """Tally confusion counts predicting toxic iff score >= threshold."""
    tp = fp = tn = fn = 0
    for e in examples:
        predicted = e.score >= threshold
        if e.label == 1:
            tp, fn = tp + predicted, fn + (not predicted)
        else:
            fp, tn = fp + predicted, tn + (not predicted)
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def fped_fned(
    examples: Sequence[ScoredExample],
    subgroups: Sequence[str],
    threshold: float = DEFAULT_ERROR_RATE_THRESHOLD,
) -> ErrorRateGaps:
    """False-positive / false-negative equality differences at a threshold.

    FPED sums |overall FPR - subgroup FPR| over the subgroups, FNED the
    analogue for FNR.  Subgroups whose rate is undefined (no members of the
    relevant class) are skipped in the sum and reported with a None rate.
    """
    overall = confusion_at(examples, threshold)
    if overall.fpr is None or overall.fnr is None:
        raise UndefinedMetricError("overall FPR/FNR undefined: single-class data")
    fped = fned = 0.0
    rows: list[SubgroupErrorRates] = []
    for name in subgroups:
        members = [e for e in examples if name in e.subgroups]
        conf = confusion_at(members, threshold)
        rows.append(SubgroupErrorRates(name, len(members), conf.fpr, conf.fnr))
        if conf.fpr is not None:
            fped += abs(overall.fpr - conf.fpr)
        if conf.fnr is not None:
            fned += abs(overall.fnr - conf.fnr)
    return ErrorRateGaps(
        fped=fped,
        fned=fned,
        overall_fpr=overall.fpr,
        overall_fnr=overall.fnr,
        threshold=threshold,
        rows=rows,
    )


# Interchangeable identity-term groups for counterfactual substitution.
DEFAULT_SUBSTITUTION_GROUPS: tuple[tuple[str, ...], ...] = (
    ("gay", "straight", "lesbian", "bisexual"),
    ("black", "white", "asian", "latino"),
    ("muslim", "christian", "jewish", "hindu", "buddhist", "atheist"),
    ("man", "woman"),
    ("male", "female"),
    ("transgender", "cisgender"),
)


@dataclass
class CounterfactualGenerator:
    """Produces identity-term substitution variants of a short text.

    Each variant replaces every occurrence of one identity term present in
    the text with one alternative from the same group; variants are emitted
    in table order with duplicates removed.
    """

    term_groups: Sequence[Sequence[str]] = DEFAULT_SUBSTITUTION_GROUPS
    max_tokens: int = 10

    def counterfactuals(self, text: str) -> list[str]:
        tokens = text.split()
        lowered = [t.lower() for t in tokens]
        variants: list[str] = []
        seen: set[str] = set()
        for group in self.term_groups:
            for term in group:
                if term not in lowered:
                    continue
                for alt in group:
                    if alt == term:
                        continue
                    variant = " ".join(
                        alt if low == term else orig for orig, low in zip(tokens, lowered)
                    )
                    if variant != text and variant not in seen:
                        seen.add(variant)
                        variants.append(variant)
        return variants


def ctf_gap(
    score_fn: Callable[[str], float],
    text: str,
    generator: CounterfactualGenerator | None = None,
) -> float | None:
    """Mean absolute score change under identity-term substitution.

    Returns None when the text contains no substitutable identity terms,
    so the caller can exclude it from aggregates instead of counting a
    spurious zero.
    """
    generator = generator or CounterfactualGenerator()
    if len(text.split()) > generator.max_tokens:
        raise ValueError(f"text longer than {generator.max_tokens} tokens")
    variants = generator.counterfactuals(text)
    if not variants:
        return None
    base = score_fn(text)
    return float(np.mean([abs(base - score_fn(v)) for v in variants]))


def mean_ctf_gap(
    score_fn: Callable[[str], float],
    texts: Iterable[str],
    generator: CounterfactualGenerator | None = None,
) -> tuple[float | None, int]:
    """Average ctf_gap over the texts that have counterfactuals.

    Texts longer than the generator's token limit are skipped.  Returns
    (mean gap, number of contributing texts); mean is None when nothing
    contributed.
    """
    generator = generator or CounterfactualGenerator()
    gaps = []
    for text in texts:
        if len(text.split()) > generator.max_tokens:
            continue
        gap = ctf_gap(score_fn, text, generator)
        if gap is not None:
            gaps.append(gap)
    if not gaps:
        return None, 0
    return float(np.mean(gaps)), len(gaps)


def load_substitutions(path: str | Path) -> CounterfactualGenerator:
    """Load substitution groups from a text file: one comma-separated group per line."""
    groups: list[tuple[str, ...]] = []
    with open(path, "r", encoding="utf-8") as stream:
        for n, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            terms = tuple(t.strip().lower() for t in line.split(",") if t.strip())
            if len(terms) < 2:
                raise ValueError(f"line {n}: a substitution group needs at least two terms")
            groups.append(terms)
    if not groups:
        raise ValueError("substitution file contains no groups")
    return CounterfactualGenerator(term_groups=tuple(groups))


def pinned_auc(
    examples: Sequence[ScoredExample],
    subgroup: str,
    sample_size: int,
    seed: int,
) -> float | None:
    """AUC of a subgroup sample pinned to an equal-size full-dataset sample.

    Both samples are seeded uniform draws without replacement; their
    concatenation may contain the same example twice, which is intended.
    When a draw comes out single-class it is retried a bounded number of
    times before reporting a missing metric.  A sample_size larger than the
    subgroup is clamped with a warning.
    """
    if sample_size < 1:
        raise ValueError("sample_size must be positive")
    members = [e for e in examples if subgroup in e.subgroups]
    if not members:
        return None
    size = sample_size
    if size > len(members):
        warnings.warn(
            f"pinned_auc sample_size {size} clamped to subgroup size {len(members)}",
            RuntimeWarning,
            stacklevel=2,
        )
        size = len(members)
    size = min(size, len(examples))
    rng = random.Random(seed)
    pool = list(examples)
    for _ in range(_PINNED_RETRY_BUDGET):
        pinned = rng.sample(members, size) + rng.sample(pool, size)
        if len({e.label for e in pinned}) == 2:
            return roc_auc(pinned)
    return None
