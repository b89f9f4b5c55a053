"""Flat key-value configuration shared by all CLI subcommands.

The file format is one `key = value` pair per line, with `#` comments and
blank lines ignored.  Every tunable default in the pipeline is a key here;
unknown keys are errors so typos cannot silently fall back to defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from . import fairmetrics, textprep
from .corpus import CsvSchema
from .errors import ConfigError
from .fairmetrics import CounterfactualGenerator, ScoreConfig
from .logreg import AdamHyper, TrainConfig, parse_class_weights
from .textprep import CleanConfig
from .tfidf import DEFAULT_MAX_FEATURES


@dataclass
class AppConfig:
    # corpus
    membership_threshold: float = 0.5
    train_fraction: float = 0.8
    id_column: str = "id"
    text_column: str = "comment_text"
    target_column: str = "target"
    # text cleaning
    strip_html: bool = True
    keep_alpha_only: bool = True
    stopwords_file: str = ""
    contractions_file: str = ""
    # features
    max_features: int = DEFAULT_MAX_FEATURES
    # training
    learning_rate: float = 1e-4
    batch_size: int = 100
    epochs: int = 5
    class_weights: str = "balanced"
    l2: float = 0.0
    train_seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    # bias score
    weight_overall: float = 0.25
    weight_subgroup: float = 0.25
    weight_bpsn: float = 0.25
    weight_bnsp: float = 0.25
    power: float = -5.0
    min_subgroup_pos: int = 1
    min_subgroup_neg: int = 1
    # report extras
    subgroups: str = ""
    include_error_rates: bool = False
    error_rate_threshold: float = 0.5
    include_ctf: bool = False
    ctf_max_tokens: int = 10
    ctf_substitutions_file: str = ""

    @classmethod
    def load(cls, path: str | Path) -> "AppConfig":
        cfg = cls()
        known = {f.name: f.type for f in fields(cls)}
        with open(path, "r", encoding="utf-8") as stream:
            for n, raw in enumerate(stream, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}, line {n}: expected key = value, got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                if key not in known:
                    raise ConfigError(f"{path}, line {n}: unknown config key {key!r}")
                try:
                    setattr(cfg, key, _coerce(value, getattr(cls, key, None), key))
                except ValueError as exc:
                    raise ConfigError(f"{path}, line {n}: {exc}") from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if not 0.0 <= self.membership_threshold <= 1.0:
            raise ConfigError("membership_threshold must lie in [0, 1]")
        try:
            parse_class_weights(self.class_weights)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # --- converters into the per-module config objects ---

    def schema(self) -> CsvSchema:
        return CsvSchema(
            id_column=self.id_column,
            text_column=self.text_column,
            target_column=self.target_column,
        )

    def clean_config(self) -> CleanConfig:
        stopwords = (
            textprep.load_stopwords(self.stopwords_file)
            if self.stopwords_file
            else CleanConfig().stopword_list
        )
        contractions = (
            textprep.load_contractions(self.contractions_file)
            if self.contractions_file
            else CleanConfig().contraction_map
        )
        return CleanConfig(
            stopword_list=stopwords,
            contraction_map=contractions,
            strip_html=self.strip_html,
            keep_alpha_only=self.keep_alpha_only,
        )

    def train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            class_weights=parse_class_weights(self.class_weights),
            seed=self.train_seed if seed is None else seed,
            adam=AdamHyper(self.adam_beta1, self.adam_beta2, self.adam_epsilon),
            l2=self.l2,
        )

    def score_config(self) -> ScoreConfig:
        return ScoreConfig(
            weight_overall=self.weight_overall,
            weight_subgroup=self.weight_subgroup,
            weight_bpsn=self.weight_bpsn,
            weight_bnsp=self.weight_bnsp,
            power=self.power,
            min_subgroup_pos=self.min_subgroup_pos,
            min_subgroup_neg=self.min_subgroup_neg,
        )

    def ctf_generator(self) -> CounterfactualGenerator:
        if self.ctf_substitutions_file:
            generator = fairmetrics.load_substitutions(self.ctf_substitutions_file)
            generator.max_tokens = self.ctf_max_tokens
            return generator
        return CounterfactualGenerator(max_tokens=self.ctf_max_tokens)

    def subgroup_list(self) -> list[str] | None:
        """Explicit subgroups from config, or None to use the default set."""
        if not self.subgroups:
            return None
        return [s.strip() for s in self.subgroups.split(",") if s.strip()]


def _coerce(value: str, default, key: str):
    if isinstance(default, bool):
        low = value.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"{key} expects true/false, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value
