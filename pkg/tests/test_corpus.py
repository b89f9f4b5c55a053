from __future__ import annotations

import io
import random

import pytest

from toxaudit import (
    Comment,
    Corpus,
    CsvSchema,
    SplitSpec,
    SynthSpec,
    binarize_target,
    parse_csv,
    split,
    subgroup_members,
    synth_corpus,
    write_csv,
)
from toxaudit.corpus import IDENTITY_CATEGORIES, IDENTITY_COLUMNS
from toxaudit.errors import CsvParseError, DataError, SchemaError

# Full production-style header: 45 columns including ones the parser ignores.
JIGSAW_HEADER = (
    "id,target,comment_text,severe_toxicity,obscene,identity_attack,insult,threat,"
    "asian,atheist,bisexual,black,buddhist,christian,female,heterosexual,hindu,"
    "homosexual_gay_or_lesbian,intellectual_or_learning_disability,jewish,latino,male,"
    "muslim,other_disability,other_gender,other_race_or_ethnicity,other_religion,"
    "other_sexual_orientation,physical_disability,psychiatric_or_mental_illness,"
    "transgender,white,created_date,publication_id,parent_id,article_id,rating,"
    "funny,wow,sad,likes,disagree,sexual_explicit,identity_annotator_count,"
    "toxicity_annotator_count"
)


def jigsaw_row(**cells) -> str:
    columns = JIGSAW_HEADER.split(",")
    return ",".join(str(cells.get(c, "")) for c in columns)


class TestParseCsv:
    def test_minimal_well_formed(self):
        corpus = parse_csv(io.StringIO("id,comment_text,target\n7,hello,0.0\n"))
        assert len(corpus) == 1
        c = corpus.comments[0]
        assert (c.id, c.text, c.target) == ("7", "hello", 0.0)
        assert c.identity_scores == {}
        assert corpus.identity_registry == []

    def test_out_of_range_target_rejected_with_line_number(self):
        text = "id,comment_text,target\n1,ok,0.2\n2,bad,1.2\n3,ok,0.9\n"
        corpus = parse_csv(io.StringIO(text))
        assert len(corpus) == 2
        stats = corpus.ingest_stats
        assert stats.n_rejected == 1
        (line, reason), = stats.rejected
        assert line == 3
        assert "target" in reason

    def test_unparsable_target_rejected(self):
        corpus = parse_csv(io.StringIO("id,comment_text,target\n1,x,oops\n"))
        assert len(corpus) == 0
        assert corpus.ingest_stats.n_rejected == 1

    def test_full_jigsaw_header_yields_24_identities(self):
        rows = [
            jigsaw_row(id=1, comment_text="first comment", target=0.89, insult=0.87),
            jigsaw_row(id=2, comment_text="second comment", target=0.83, female=1.0),
        ]
        corpus = parse_csv(io.StringIO(JIGSAW_HEADER + "\n" + "\n".join(rows) + "\n"))
        assert len(corpus.identity_registry) == 24
        assert set(corpus.identity_registry) == set(IDENTITY_COLUMNS)
        assert corpus.comments[1].identity_scores == {"female": 1.0}
        # the alternate sexual_explicit spelling maps onto the canonical key
        assert "sexually_explicit" not in corpus.comments[0].subtype_scores

    def test_identity_categories_cover_24(self):
        assert sum(len(v) for v in IDENTITY_CATEGORIES.values()) == 24
        assert len(IDENTITY_COLUMNS) == 24

    def test_missing_mandatory_column(self):
        with pytest.raises(SchemaError, match="comment_text"):
            parse_csv(io.StringIO("id,target\n1,0.5\n"))

    def test_malformed_csv_raises_with_line(self):
        text = 'id,comment_text,target\n1,ok,0.5\n2,"broken"quote,0.7\n'
        with pytest.raises(CsvParseError, match="line 3"):
            parse_csv(io.StringIO(text))

    def test_duplicate_ids_rejected_not_fatal(self):
        text = "id,comment_text,target\n1,a,0.1\n1,b,0.2\n"
        corpus = parse_csv(io.StringIO(text))
        assert len(corpus) == 1
        assert corpus.ingest_stats.n_rejected == 1

    def test_missing_identity_cells_are_absent(self):
        text = "id,comment_text,target,muslim\n1,a,0.1,\n2,b,0.2,0.0\n"
        corpus = parse_csv(io.StringIO(text), CsvSchema(identity_columns=("muslim",)))
        assert "muslim" not in corpus.comments[0].identity_scores
        assert corpus.comments[1].identity_scores == {"muslim": 0.0}

    def test_schema_column_remapping(self):
        schema = CsvSchema(id_column="key", text_column="body", target_column="tox")
        corpus = parse_csv(io.StringIO("key,body,tox\nz,words,0.7\n"), schema)
        assert corpus.comments[0].id == "z"
        assert corpus.comments[0].target == 0.7

    def test_round_trip(self, small_synth):
        buffer = io.StringIO()
        write_csv(small_synth, buffer)
        parsed = parse_csv(io.StringIO(buffer.getvalue()))
        assert parsed == small_synth
        buffer2 = io.StringIO()
        write_csv(parsed, buffer2)
        assert buffer2.getvalue() == buffer.getvalue()


class TestBinarizeTarget:
    def test_high_score_is_toxic(self):
        assert binarize_target(0.89) == 1

    def test_zero_is_nontoxic(self):
        assert binarize_target(0.0) == 0

    def test_boundary_is_toxic(self):
        assert binarize_target(0.5) == 1

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            binarize_target(1.01)
        with pytest.raises(ValueError):
            binarize_target(-0.2)

    def test_monotone(self):
        rng = random.Random(4)
        for _ in range(200):
            s1, s2 = sorted((rng.random(), rng.random()))
            assert binarize_target(s1) <= binarize_target(s2)


def _tiny_corpus(n: int) -> Corpus:
    return Corpus([Comment(id=str(i), text=f"c{i}", target=0.0) for i in range(n)], [])


class TestSplit:
    def test_cardinality_and_union(self):
        corpus = _tiny_corpus(10)
        train, test = split(corpus, SplitSpec(0.8, seed=42))
        assert (len(train), len(test)) == (8, 2)
        assert set(train.ids()) | set(test.ids()) == set(corpus.ids())
        assert set(train.ids()) & set(test.ids()) == set()

    def test_deterministic(self):
        corpus = _tiny_corpus(50)
        a = split(corpus, SplitSpec(0.8, seed=42))
        b = split(corpus, SplitSpec(0.8, seed=42))
        assert a[0].ids() == b[0].ids()
        assert a[1].ids() == b[1].ids()

    def test_different_seeds_differ(self):
        corpus = _tiny_corpus(1000)
        one, _ = split(corpus, SplitSpec(0.8, seed=1))
        two, _ = split(corpus, SplitSpec(0.8, seed=2))
        assert set(one.ids()) != set(two.ids())

    def test_partition_property(self):
        rng = random.Random(9)
        corpus = _tiny_corpus(37)
        for _ in range(25):
            frac = rng.uniform(0.05, 0.95)
            seed = rng.getrandbits(32)
            train, test = split(corpus, SplitSpec(frac, seed))
            assert len(train) + len(test) == 37
            assert set(train.ids()).isdisjoint(test.ids())
            assert set(train.ids()) | set(test.ids()) == set(corpus.ids())

    def test_too_small_corpus(self):
        with pytest.raises(DataError):
            split(_tiny_corpus(1), SplitSpec())

    def test_bad_fraction(self):
        with pytest.raises(ValueError):
            split(_tiny_corpus(5), SplitSpec(train_fraction=1.0))


class TestSubgroupMembers:
    def _corpus(self, scores: dict[str, float | None]) -> Corpus:
        comments = [
            Comment(
                id=k,
                text=k,
                target=0.0,
                identity_scores={} if v is None else {"muslim": v},
            )
            for k, v in scores.items()
        ]
        return Corpus(comments, ["muslim"])

    def test_all_zero_scores_empty_slice(self):
        corpus = self._corpus({"a": 0.0, "b": 0.0})
        assert subgroup_members(corpus, "muslim", 0.5).member_ids == frozenset()

    def test_threshold_boundary(self):
        corpus = self._corpus({"a": 0.5, "b": 0.49})
        assert subgroup_members(corpus, "muslim", 0.5).member_ids == {"a"}

    def test_full_score_is_member(self):
        corpus = self._corpus({"a": 1.0})
        assert subgroup_members(corpus, "muslim", 0.5).member_ids == {"a"}

    def test_absent_scores_are_not_members(self):
        corpus = self._corpus({"a": None, "b": 1.0})
        assert subgroup_members(corpus, "muslim", 0.0).member_ids == {"b"}

    def test_unknown_identity_lists_known(self):
        corpus = self._corpus({"a": 1.0})
        with pytest.raises(DataError, match="muslim"):
            subgroup_members(corpus, "jedi", 0.5)

    def test_lower_threshold_is_superset(self, small_synth):
        rng = random.Random(2)
        for _ in range(10):
            lo = rng.uniform(0.01, 0.5)
            hi = rng.uniform(lo, 1.0)
            lo_members = subgroup_members(small_synth, "muslim", lo).member_ids
            hi_members = subgroup_members(small_synth, "muslim", hi).member_ids
            assert hi_members <= lo_members


class TestSynthCorpus:
    def test_exact_toxic_count(self):
        corpus = synth_corpus(SynthSpec(n_comments=100, toxic_fraction=0.08, seed=1))
        assert sum(binarize_target(c.target) for c in corpus) == 8

    def test_identity_cooccurrence_rates(self):
        spec = SynthSpec(
            n_comments=10_000,
            toxic_fraction=0.08,
            identity_bias_table={"muslim": (0.9, 0.1)},
            seed=3,
        )
        corpus = synth_corpus(spec)
        toxic = [c for c in corpus if binarize_target(c.target) == 1]
        nontoxic = [c for c in corpus if binarize_target(c.target) == 0]
        rate_toxic = sum("muslim" in c.identity_scores for c in toxic) / len(toxic)
        rate_nontoxic = sum("muslim" in c.identity_scores for c in nontoxic) / len(nontoxic)
        assert abs(rate_toxic - 0.9) < 0.05
        assert abs(rate_nontoxic - 0.1) < 0.05
        # the identity token really appears in the text when scored
        flagged = next(c for c in corpus if "muslim" in c.identity_scores)
        assert "muslim" in flagged.text.split()

    def test_same_seed_byte_identical(self):
        spec = SynthSpec(n_comments=200, toxic_fraction=0.2, seed=5)
        a, b = io.StringIO(), io.StringIO()
        write_csv(synth_corpus(spec), a)
        write_csv(synth_corpus(spec), b)
        assert a.getvalue() == b.getvalue()

    def test_empty_vocabulary_rejected(self):
        with pytest.raises(ValueError, match="vocabulary"):
            synth_corpus(SynthSpec(n_comments=10, toxic_fraction=0.5, vocabulary=()))

    def test_bad_fraction_rejected(self):
        with pytest.raises(ValueError):
            synth_corpus(SynthSpec(n_comments=10, toxic_fraction=1.5))


class TestCorpusInvariants:
    def test_duplicate_id_rejected_at_construction(self):
        with pytest.raises(DataError, match="duplicate"):
            Corpus([Comment("a", "x", 0.1), Comment("a", "y", 0.2)], [])

    def test_empty_id_rejected(self):
        with pytest.raises(DataError):
            Corpus([Comment("", "x", 0.1)], [])
