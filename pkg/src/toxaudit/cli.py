"""Command-line front end.

Subcommands: stats, train, predict, evaluate, grid-search, synth.  Output
format follows the --out extension (.json is machine-readable, anything else
is a plain table).  Exit code 0 on success; expected failures print a single
`error: ...` line on stderr and exit 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import corpus as corpus_mod
from . import logreg, report, textprep, tfidf
from .config import AppConfig
from .corpus import Corpus, SplitSpec, SynthSpec
from .errors import ConfigError, DataError, ToxauditError
from .logreg import LogRegModel, TrainConfig
from .report import DEFAULT_REPORT_SUBGROUPS
from .textprep import CleanConfig
from .tfidf import Vocabulary

_GRID_KEYS = ("learning_rate", "batch_size", "epochs", "class_weights", "l2", "seed")


def _load_config(path: str | None) -> AppConfig:
    return AppConfig.load(path) if path else AppConfig()


def _load_corpus(path: str, cfg: AppConfig) -> Corpus:
    corpus = corpus_mod.parse_csv(path, cfg.schema())
    if len(corpus) == 0:
        raise DataError(f"{path}: no usable rows")
    return corpus


def _out_format(path: str) -> str:
    return "json" if Path(path).suffix == ".json" else "table"


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as stream:
        stream.write(text)


def _clean_docs(corpus: Corpus, clean_cfg: CleanConfig) -> list[list[str]]:
    return [textprep.tokenize(textprep.clean(c.text, clean_cfg)) for c in corpus]


def make_text_scorer(
    model: LogRegModel, vocab: Vocabulary, clean_cfg: CleanConfig
) -> Callable[[str], float]:
    """Raw text to toxic probability: clean, tokenize, vectorize, predict."""

    def score(text: str) -> float:
        doc = textprep.tokenize(textprep.clean(text, clean_cfg))
        return logreg.predict_proba(model, tfidf.transform(doc, vocab))

    return score


def _resolve_subgroups(
    explicit: str | None, cfg: AppConfig, registry: Sequence[str]
) -> list[str]:
    """Explicit list > config list > default set intersected with the registry."""
    raw = explicit if explicit is not None else cfg.subgroups
    if raw:
        names = [s.strip() for s in raw.split(",") if s.strip()]
        unknown = [n for n in names if n not in registry]
        if unknown:
            known = ", ".join(registry) or "<none>"
            raise DataError(
                f"unknown subgroup(s) {', '.join(unknown)}; known identities: {known}"
            )
        return names
    defaults = [n for n in DEFAULT_REPORT_SUBGROUPS if n in registry]
    return defaults or list(registry)


def _vocab_path(model_path: str, override: str | None) -> str:
    return override if override else model_path + ".vocab"


# --- subcommands ---


def _cmd_stats(args) -> int:
    cfg = _load_config(args.config)
    corpus = _load_corpus(args.input, cfg)
    summary = report.stats(corpus)
    _write_text(args.out, report.render_stats(summary, _out_format(args.out)))
    print(f"stats: {summary.n_rows} rows ({summary.n_toxic} toxic) -> {args.out}")
    if args.figures:
        from . import figures

        written = figures.render_stats_figures(summary, args.figures)
        print(f"stats: wrote {len(written)} figure(s) to {args.figures}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args.config)
    corpus = _load_corpus(args.input, cfg)
    spec = SplitSpec(train_fraction=cfg.train_fraction, seed=args.split_seed)
    train_corpus, test_corpus = corpus_mod.split(corpus, spec)

    clean_cfg = cfg.clean_config()
    docs = _clean_docs(train_corpus, clean_cfg)
    vocab = tfidf.fit(docs, cfg.max_features)
    features = tfidf.transform_all(docs, vocab)
    labels = [corpus_mod.binarize_target(c.target) for c in train_corpus]

    model = logreg.train((features, labels), cfg.train_config())
    logreg.save_model(model, args.model_out)
    tfidf.save_vocabulary(vocab, _vocab_path(args.model_out, args.vocab_out))
    if args.train_out:
        corpus_mod.write_csv(train_corpus, args.train_out)
    if args.test_out:
        corpus_mod.write_csv(test_corpus, args.test_out)
    print(
        f"train: {len(train_corpus)} comments, {vocab.dimension} features, "
        f"final loss {model.loss_trace[-1]:.6f} -> {args.model_out}"
    )
    return 0


def _load_model_and_vocab(model_path: str, vocab_override: str | None):
    model = logreg.load_model(model_path)
    vocab = tfidf.load_vocabulary(_vocab_path(model_path, vocab_override))
    if vocab.dimension != model.dimension:
        raise DataError(
            f"vocabulary dimension {vocab.dimension} does not match model dimension {model.dimension}"
        )
    return model, vocab


def _cmd_predict(args) -> int:
    cfg = _load_config(args.config)
    model, vocab = _load_model_and_vocab(args.model, args.vocab)
    corpus = _load_corpus(args.input, cfg)
    docs = _clean_docs(corpus, cfg.clean_config())
    features = tfidf.transform_all(docs, vocab)
    scores = logreg.predict_many(model, features)
    report.write_predictions(corpus.ids(), scores, args.out, provenance="logreg")
    print(f"predict: scored {len(corpus)} comments -> {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    corpus = _load_corpus(args.input, cfg)
    scored = report.import_predictions(args.predictions, corpus, cfg.membership_threshold)
    subgroups = _resolve_subgroups(args.subgroups, cfg, corpus.identity_registry)

    ctf_score_fn = None
    ctf_texts = None
    if cfg.include_ctf:
        if not args.model:
            raise ConfigError("include_ctf requires --model to score counterfactuals")
        model, vocab = _load_model_and_vocab(args.model, args.vocab)
        ctf_score_fn = make_text_scorer(model, vocab, cfg.clean_config())
        scored_ids = {e.id for e in scored}
        ctf_texts = [c.text for c in corpus if c.id in scored_ids]

    bias_report = report.evaluate(
        scored,
        subgroups,
        cfg.score_config(),
        error_rate_threshold=cfg.error_rate_threshold if cfg.include_error_rates else None,
        ctf_score_fn=ctf_score_fn,
        ctf_texts=ctf_texts,
        ctf_generator=cfg.ctf_generator() if cfg.include_ctf else None,
    )
    _write_text(args.out, report.render_report(bias_report, _out_format(args.out)))
    gm = bias_report.generalized_mean_auc
    print(
        f"evaluate: overall_auc {bias_report.overall_auc:.4f}, "
        f"generalized_mean_auc {'n/a' if gm is None else f'{gm:.4f}'} -> {args.out}"
    )
    if args.figures:
        from . import figures

        written = figures.render_report_figures(bias_report, args.figures)
        print(f"evaluate: wrote {len(written)} figure(s) to {args.figures}")
    return 0


def _parse_grid_line(line: str, base: TrainConfig, where: str) -> TrainConfig:
    cfg = TrainConfig(
        learning_rate=base.learning_rate,
        batch_size=base.batch_size,
        epochs=base.epochs,
        class_weights=base.class_weights,
        seed=base.seed,
        adam=base.adam,
        l2=base.l2,
    )
    for token in line.replace(",", " ").split():
        if "=" not in token:
            raise ConfigError(f"{where}: expected key=value, got {token!r}")
        key, _, value = token.partition("=")
        if key not in _GRID_KEYS:
            raise ConfigError(f"{where}: unknown grid key {key!r} (known: {', '.join(_GRID_KEYS)})")
        if key == "class_weights":
            cfg.class_weights = logreg.parse_class_weights(value)
        elif key in ("batch_size", "epochs", "seed"):
            setattr(cfg, key, int(value))
        else:
            setattr(cfg, key, float(value))
    return cfg


def _load_grid(path: str | None, base: TrainConfig) -> list[TrainConfig]:
    if path is None:
        # lr sweep crossed with balanced/uniform class weights
        grid = []
        for lr in (1e-2, 1e-3, 1e-4):
            for weights in ("balanced", None):
                grid.append(
                    TrainConfig(
                        learning_rate=lr,
                        batch_size=base.batch_size,
                        epochs=base.epochs,
                        class_weights=weights,
                        seed=base.seed,
                        adam=base.adam,
                        l2=base.l2,
                    )
                )
        return grid
    grid = []
    with open(path, "r", encoding="utf-8") as stream:
        for n, raw in enumerate(stream, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            grid.append(_parse_grid_line(line, base, f"{path}, line {n}"))
    if not grid:
        raise ConfigError(f"{path}: grid file contains no configurations")
    return grid


def _describe_config(cfg: TrainConfig) -> str:
    return (
        f"learning_rate={cfg.learning_rate:g} class_weights={logreg.format_class_weights(cfg.class_weights)} "
        f"epochs={cfg.epochs} batch_size={cfg.batch_size} l2={cfg.l2:g} seed={cfg.seed}"
    )


def _cmd_grid_search(args) -> int:
    cfg = _load_config(args.config)
    corpus = _load_corpus(args.input, cfg)
    spec = SplitSpec(train_fraction=cfg.train_fraction, seed=args.split_seed)
    train_corpus, val_corpus = corpus_mod.split(corpus, spec)

    clean_cfg = cfg.clean_config()
    train_docs = _clean_docs(train_corpus, clean_cfg)
    vocab = tfidf.fit(train_docs, cfg.max_features)
    train_features = tfidf.transform_all(train_docs, vocab)
    train_labels = [corpus_mod.binarize_target(c.target) for c in train_corpus]
    val_features = tfidf.transform_all(_clean_docs(val_corpus, clean_cfg), vocab)
    val_labels = [corpus_mod.binarize_target(c.target) for c in val_corpus]

    grid = _load_grid(args.grid, cfg.train_config())
    best, table = logreg.grid_search(
        (train_features, train_labels), (val_features, val_labels), grid
    )

    if _out_format(args.out) == "json":
        import json

        payload = {
            "best": _describe_config(best),
            "rows": [
                {"config": _describe_config(c), "validation_auc": None if auc != auc else auc}
                for c, auc in table
            ],
        }
        _write_text(args.out, json.dumps(payload, indent=2) + "\n")
    else:
        lines = ["grid search (validation overall AUC)", ""]
        for c, auc in table:
            shown = "diverged" if auc != auc else f"{auc:.4f}"
            lines.append(f"{shown:>9}  {_describe_config(c)}")
        lines.append("")
        lines.append(f"best: {_describe_config(best)}")
        lines.append("")
        _write_text(args.out, "\n".join(lines))
    print(f"grid-search: {len(table)} configuration(s) -> {args.out}")
    return 0


def _parse_bias(values: list[str]) -> dict[str, tuple[float, float]]:
    table: dict[str, tuple[float, float]] = {}
    for item in values:
        parts = item.split(":")
        if len(parts) != 3:
            raise ConfigError(f"--bias expects IDENTITY:TOXIC_RATE:NONTOXIC_RATE, got {item!r}")
        table[parts[0]] = (float(parts[1]), float(parts[2]))
    return table


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        n_comments=args.n,
        toxic_fraction=args.toxic_fraction,
        identity_bias_table=_parse_bias(args.bias or []),
        seed=args.seed,
    )
    corpus = corpus_mod.synth_corpus(spec)
    corpus_mod.write_csv(corpus, args.out)
    n_toxic = sum(corpus_mod.binarize_target(c.target) for c in corpus)
    print(f"synth: {len(corpus)} comments ({n_toxic} toxic) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toxaudit",
        description="Train a TF-IDF logistic-regression toxicity classifier and audit "
        "prediction scores for identity bias.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus statistics report")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", help="train the classifier on the train split")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--model-out", required=True)
    p.add_argument("--vocab-out", help="vocabulary path (default: MODEL_OUT.vocab)")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--train-out", help="write the train split as CSV")
    p.add_argument("--test-out", help="write the held-out split as CSV")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="score a corpus with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--vocab", help="vocabulary path (default: MODEL.vocab)")
    p.add_argument("--input", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="bias-audit a prediction file against a corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--subgroups", help="comma-separated identity list")
    p.add_argument("--config")
    p.add_argument("--model", help="model for counterfactual-gap scoring")
    p.add_argument("--vocab", help="vocabulary path (default: MODEL.vocab)")
    p.add_argument("--out", required=True)
    p.add_argument("--figures", help="directory for rendered figures")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("grid-search", help="sweep training configs by validation AUC")
    p.add_argument("--input", required=True)
    p.add_argument("--grid", help="grid file: one key=value config per line")
    p.add_argument("--config")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_grid_search)

    p = sub.add_parser("synth", help="generate a synthetic fixture corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--toxic-fraction", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--bias",
        action="append",
        metavar="IDENTITY:TOXIC_RATE:NONTOXIC_RATE",
        help="identity term appearance rates (repeatable)",
    )
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ToxauditError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
