"""Deterministic text cleaning and tokenization.

The cleaning pipeline runs in a fixed order: HTML-tag strip, lowercase,
contraction expansion, punctuation removal, stopword removal, and finally
removal of tokens that are not purely a-z.  The output of clean() is the
space-joined surviving tokens, which makes clean idempotent.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Mapping

from ._wordlists import DEFAULT_CONTRACTIONS, DEFAULT_STOPWORDS

TokenSeq = list[str]

_HTML_TAG_RE = re.compile(r"<[^>]*>")
# Everything that is not a letter, digit or whitespace becomes a space;
# underscores count as punctuation even though \w keeps them.
_PUNCT_RE = re.compile(r"[^\w\s]|_")
_ALPHA_RE = re.compile(r"[a-z]+")


@dataclass
class CleanConfig:
    """Cleaning pipeline switches.

    An empty stopword_list disables stopword removal.
    """

    stopword_list: frozenset[str] = DEFAULT_STOPWORDS
    contraction_map: Mapping[str, str] = field(default_factory=lambda: dict(DEFAULT_CONTRACTIONS))
    strip_html: bool = True
    keep_alpha_only: bool = True


@lru_cache(maxsize=8)
def _contraction_pattern(keys: tuple[str, ...]) -> re.Pattern[str]:
    # Longest key first so "can't've" beats "can't" at the same position.
    ordered = sorted(keys, key=lambda k: (-len(k), k))
    alternatives = "|".join(re.escape(k) for k in ordered)
    return re.compile(rf"(?<![a-zA-Z])({alternatives})(?![a-zA-Z])", re.IGNORECASE)


def expand_contractions(text: str, contraction_map: Mapping[str, str] | None = None) -> str:
    """Replace every maximal case-insensitive contraction match by its expansion.

    Total function: text without matches is returned unchanged.  Typographic
    apostrophes are normalized to ASCII before matching.
    """
    contractions = DEFAULT_CONTRACTIONS if contraction_map is None else contraction_map
    if not contractions:
        return text
    text = text.replace("’", "'")
    pattern = _contraction_pattern(tuple(contractions.keys()))
    lookup = {k.lower(): v for k, v in contractions.items()}
    return pattern.sub(lambda m: lookup[m.group(0).lower()], text)


def clean(text: str, cfg: CleanConfig | None = None) -> str:
    """Run the full cleaning pipeline and return space-joined tokens."""
    cfg = cfg or CleanConfig()
    if cfg.strip_html:
        text = _HTML_TAG_RE.sub(" ", text)
    text = text.lower()
    text = expand_contractions(text, cfg.contraction_map)
    text = _PUNCT_RE.sub(" ", text)
    tokens = text.split()
    if cfg.stopword_list:
        tokens = [t for t in tokens if t not in cfg.stopword_list]
    if cfg.keep_alpha_only:
        tokens = [t for t in tokens if _ALPHA_RE.fullmatch(t)]
    return " ".join(tokens)


def tokenize(text: str) -> TokenSeq:
    """Split already-cleaned text on whitespace runs."""
    return text.split()


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Load a stopword override file: one lowercase token per line."""
    words = set()
    with open(path, "r", encoding="utf-8") as stream:
        for line in stream:
            word = line.strip().lower()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)


def load_contractions(path: str | Path) -> dict[str, str]:
    """Load a contraction override file: `contraction=expansion` per line."""
    mapping: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as stream:
        for n, line in enumerate(stream, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {n}: expected key=expansion, got {line!r}")
            key, _, expansion = line.partition("=")
            mapping[key.strip().lower()] = expansion.strip().lower()
    return mapping
