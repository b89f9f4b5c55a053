#!/usr/bin/env python3
"""Regenerate the committed test fixtures and golden report files.

Everything here is seeded, so rerunning the script must reproduce the
committed files byte for byte.  The prediction file mimics an externally
produced score export with a planted false-positive bias on one identity.
"""

from __future__ import annotations

import random
from pathlib import Path

from toxaudit import SynthSpec, synth_corpus, write_csv
from toxaudit.fairmetrics import ScoreConfig
from toxaudit.report import evaluate, import_predictions, render_report, write_predictions

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"

CORPUS_SEED = 20240601
PREDICTION_SEED = 777
FIXTURE_SUBGROUPS = ["muslim", "female", "atheist"]


def make_corpus():
    spec = SynthSpec(
        n_comments=500,
        toxic_fraction=0.16,
        identity_bias_table={"muslim": (0.55, 0.12), "female": (0.30, 0.30)},
        seed=CORPUS_SEED,
    )
    return synth_corpus(spec)


def make_scores(corpus):
    """Deterministic stand-in for an external model: tracks the target but
    systematically over-scores comments mentioning one identity."""
    rng = random.Random(PREDICTION_SEED)
    scores = []
    for c in corpus:
        boost = 0.22 if c.identity_scores.get("muslim", 0.0) >= 0.5 else 0.0
        raw = 0.10 + 0.60 * c.target + boost + rng.uniform(-0.08, 0.08)
        scores.append(min(max(raw, 0.0), 1.0))
    return scores


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    corpus = make_corpus()
    write_csv(corpus, DATA_DIR / "fixture_corpus.csv")

    scores = make_scores(corpus)
    write_predictions(
        corpus.ids(), scores, DATA_DIR / "fixture_predictions.csv", provenance="external-fixture"
    )

    scored = import_predictions(DATA_DIR / "fixture_predictions.csv", corpus)
    report = evaluate(
        scored,
        FIXTURE_SUBGROUPS,
        ScoreConfig(),
        error_rate_threshold=0.5,
    )
    for fmt, name in (("table", "golden_report.txt"), ("json", "golden_report.json")):
        (DATA_DIR / name).write_text(render_report(report, fmt), encoding="utf-8")
    print(f"wrote fixtures to {DATA_DIR}")


if __name__ == "__main__":
    main()
