from __future__ import annotations

import random
import re
import string

import pytest

from toxaudit.textprep import (
    CleanConfig,
    clean,
    expand_contractions,
    load_contractions,
    load_stopwords,
    tokenize,
)


class TestExpandContractions:
    def test_basic_expansion(self):
        assert expand_contractions("aren't") == "are not"

    def test_empty_input(self):
        assert expand_contractions("") == ""

    def test_case_insensitive(self):
        assert expand_contractions("Aren't you?") == "are not you?"

    def test_maximal_match_wins(self):
        assert expand_contractions("y'all'd've gone") == "you all would have gone"

    def test_no_match_unchanged(self):
        assert expand_contractions("plain words here") == "plain words here"

    def test_typographic_apostrophe(self):
        assert expand_contractions("aren’t") == "are not"

    def test_word_boundary_respected(self):
        # "shell" must not trigger "she'll"
        assert expand_contractions("shell") == "shell"

    def test_custom_map(self):
        assert expand_contractions("gonna win", {"gonna": "going to"}) == "going to win"


class TestClean:
    def test_pipeline_order(self):
        cfg = CleanConfig(stopword_list=frozenset({"you", "are", "a"}))
        assert clean("<b>You</b> are a GOOD woman!", cfg) == "good woman"

    def test_all_stopwords_removed(self):
        assert clean("the a am are") == ""

    def test_alphanumeric_token_dropped(self):
        assert clean("abc123 hello") == "hello"

    def test_alphanumeric_kept_when_alpha_filter_off(self):
        cfg = CleanConfig(stopword_list=frozenset(), keep_alpha_only=False)
        assert clean("abc123 hello", cfg) == "abc123 hello"

    def test_contraction_then_stopword_interaction(self):
        # "aren't" expands to "are not"; both halves are default stopwords
        assert clean("aren't friendly") == "friendly"

    def test_non_ascii_tokens_dropped(self):
        assert clean("café visit") == "visit"

    def test_html_stripping_optional(self):
        cfg = CleanConfig(stopword_list=frozenset(), strip_html=False)
        assert "b" in clean("<b>word</b>", cfg).split()

    def test_punctuation_becomes_space(self):
        assert clean("good,woman") == "good woman"


def _random_messy_text(rng: random.Random) -> str:
    pool = (
        list(string.ascii_letters)
        + list(string.digits)
        + list(" \t.,!?'\"<>/@#$%^&*()_-")
        + ["é", "ü", "’"]
    )
    n = rng.randint(0, 120)
    return "".join(rng.choice(pool) for _ in range(n))


class TestCleanProperties:
    def test_idempotent(self):
        rng = random.Random(7)
        cfg = CleanConfig()
        for _ in range(300):
            text = _random_messy_text(rng)
            once = clean(text, cfg)
            assert clean(once, cfg) == once

    def test_output_character_contract(self):
        rng = random.Random(8)
        cfg = CleanConfig()
        contract = re.compile(r"([a-z]+( [a-z]+)*)?$")
        for _ in range(300):
            out = clean(_random_messy_text(rng), cfg)
            assert contract.fullmatch(out), out

    def test_no_stopwords_survive(self):
        rng = random.Random(9)
        cfg = CleanConfig()
        for _ in range(200):
            tokens = tokenize(clean(_random_messy_text(rng), cfg))
            assert not set(tokens) & cfg.stopword_list


class TestTokenize:
    def test_basic(self):
        assert tokenize("good woman") == ["good", "woman"]

    def test_empty(self):
        assert tokenize("") == []

    def test_whitespace_runs(self):
        assert tokenize("  a  b ") == ["a", "b"]


class TestOverrideFiles:
    def test_stopword_file(self, tmp_path):
        path = tmp_path / "stop.txt"
        path.write_text("# comment\nfoo\nBAR\n\n", encoding="utf-8")
        words = load_stopwords(path)
        assert words == frozenset({"foo", "bar"})
        cfg = CleanConfig(stopword_list=words)
        assert clean("foo bar baz", cfg) == "baz"

    def test_contraction_file(self, tmp_path):
        path = tmp_path / "contr.txt"
        path.write_text("gonna=going to\nwanna = want to\n", encoding="utf-8")
        mapping = load_contractions(path)
        assert mapping == {"gonna": "going to", "wanna": "want to"}

    def test_contraction_file_bad_line(self, tmp_path):
        path = tmp_path / "contr.txt"
        path.write_text("no-equals-sign\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 1"):
            load_contractions(path)
