"""Comment corpora: CSV ingestion, toxicity labels, splits, subgroup slices,
and synthetic fixture generation.

A corpus row carries a continuous toxicity target in [0, 1], six toxicity
subtype scores, per-identity scores (absent when the raters did not annotate
the row), and optional reaction counts.  A comment counts as toxic when its
target is at least 0.5; identity subgroup membership uses the same >= 0.5
convention by default but the threshold is configurable.

Corpora are immutable after construction and safe to share across threads.
Ingestion is single-threaded streaming: dirty rows are rejected (and counted)
rather than aborting the whole file.
"""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterator, Mapping, Sequence

from .errors import CsvParseError, DataError, SchemaError

TOXICITY_THRESHOLD = 0.5
DEFAULT_MEMBERSHIP_THRESHOLD = 0.5
DEFAULT_TRAIN_FRACTION = 0.8

# The 24 identity attributes, grouped into their five categories.
IDENTITY_CATEGORIES: dict[str, tuple[str, ...]] = {
    "gender": ("male", "female", "transgender", "other_gender"),
    "sex": (
        "heterosexual",
        "homosexual_gay_or_lesbian",
        "bisexual",
        "other_sexual_orientation",
    ),
    "religion": (
        "christian",
        "jewish",
        "muslim",
        "hindu",
        "buddhist",
        "atheist",
        "other_religion",
    ),
    "race": ("black", "white", "asian", "latino", "other_race_or_ethnicity"),
    "disability": (
        "physical_disability",
        "intellectual_or_learning_disability",
        "psychiatric_or_mental_illness",
        "other_disability",
    ),
}

IDENTITY_COLUMNS: tuple[str, ...] = tuple(
    name for names in IDENTITY_CATEGORIES.values() for name in names
)

SUBTYPE_COLUMNS: tuple[str, ...] = (
    "severe_toxicity",
    "obscene",
    "identity_attack",
    "insult",
    "threat",
    "sexually_explicit",
)

# Public corpus dumps disagree on this column's spelling.
SUBTYPE_COLUMN_ALIASES: dict[str, tuple[str, ...]] = {
    "sexually_explicit": ("sexually_explicit", "sexual_explicit"),
}

REACTION_COLUMNS: tuple[str, ...] = ("funny", "wow", "sad", "likes", "disagree")

_MAX_REJECT_DETAILS = 100


@dataclass
class Comment:
    """One corpus row."""

    id: str
    text: str
    target: float
    subtype_scores: dict[str, float] = field(default_factory=dict)
    identity_scores: dict[str, float] = field(default_factory=dict)
    reactions: dict[str, int] | None = None


@dataclass
class IngestStats:
    """Outcome of one parse_csv run; rejected rows keep their line numbers."""

    n_rows: int = 0
    n_accepted: int = 0
    n_rejected: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)

    def note_rejection(self, line: int, reason: str) -> None:
        self.n_rejected += 1
        if len(self.rejected) < _MAX_REJECT_DETAILS:
            self.rejected.append((line, reason))


@dataclass
class Corpus:
    """An ordered, immutable collection of comments plus its identity registry.

    The registry lists exactly the identity columns that were present in the
    source, in a stable order; identity_scores keys of every comment are a
    subset of it.
    """

    comments: list[Comment]
    identity_registry: list[str]
    ingest_stats: IngestStats | None = field(default=None, compare=False)
    _by_id: dict[str, Comment] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        for comment in self.comments:
            if not comment.id:
                raise DataError("comment with empty id")
            if comment.id in self._by_id:
                raise DataError(f"duplicate comment id: {comment.id!r}")
            self._by_id[comment.id] = comment

    def __len__(self) -> int:
        return len(self.comments)

    def __iter__(self) -> Iterator[Comment]:
        return iter(self.comments)

    def by_id(self, comment_id: str) -> Comment:
        return self._by_id[comment_id]

    def __contains__(self, comment_id: str) -> bool:
        return comment_id in self._by_id

    def ids(self) -> list[str]:
        return [c.id for c in self.comments]


@dataclass
class SplitSpec:
    """Seeded train/test split parameters."""

    train_fraction: float = DEFAULT_TRAIN_FRACTION
    seed: int = 0


@dataclass
class SubgroupSlice:
    """Comments whose score for one identity meets the membership threshold."""

    identity: str
    member_ids: frozenset[str]
    membership_threshold: float = DEFAULT_MEMBERSHIP_THRESHOLD


@dataclass
class CsvSchema:
    """Column-name mapping from a CSV header onto the corpus model.

    Subtype columns may list fallback aliases; the first one present in the
    header wins.  Identity and reaction columns absent from the header are
    simply not ingested.
    """

    id_column: str = "id"
    text_column: str = "comment_text"
    target_column: str = "target"
    subtype_columns: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: {
            name: SUBTYPE_COLUMN_ALIASES.get(name, (name,)) for name in SUBTYPE_COLUMNS
        }
    )
    identity_columns: Sequence[str] = IDENTITY_COLUMNS
    reaction_columns: Sequence[str] = REACTION_COLUMNS


def binarize_target(score: float) -> int:
    """Map a continuous toxicity score to a binary label (1 = toxic).

    A comment is toxic exactly when its score is at least 0.5.
    """
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"toxicity score outside [0, 1]: {score}")
    return int(score >= TOXICITY_THRESHOLD)


def _parse_unit_score(cell: str) -> float:
    value = float(cell)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"score outside [0, 1]: {value}")
    return value


def _parse_count(cell: str) -> int:
    value = float(cell)
    if value < 0 or value != int(value):
        raise ValueError(f"not a non-negative count: {cell}")
    return int(value)


def _open_source(source) -> tuple[IO[str], bool]:
    """Normalize path / binary stream / text stream into a text stream."""
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # Binary stream: decode as UTF-8.
    return io.TextIOWrapper(source, encoding="utf-8", newline=""), False


def parse_csv(source, schema: CsvSchema | None = None) -> Corpus:
    """Ingest a UTF-8 CSV with a header row into a Corpus.

    Mandatory columns are id, comment text and target (names per schema).
    Empty identity/subtype/reaction cells are treated as absent, not zero.
    Rows with an unparsable or out-of-range score, a duplicate or empty id,
    or the wrong number of cells are rejected and counted in ingest_stats;
    a structurally broken stream raises CsvParseError with its line number.
    """
    schema = schema or CsvSchema()
    stream, owns = _open_source(source)
    try:
        reader = csv.reader(stream, strict=True)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty CSV: no header row") from None
        except csv.Error as exc:
            raise CsvParseError(str(exc), line=1) from None

        col_index = {name: i for i, name in enumerate(header)}
        for mandatory in (schema.id_column, schema.text_column, schema.target_column):
            if mandatory not in col_index:
                raise SchemaError(
                    f"missing mandatory column {mandatory!r}; header has {header!r}"
                )

        id_i = col_index[schema.id_column]
        text_i = col_index[schema.text_column]
        target_i = col_index[schema.target_column]

        subtype_cols: list[tuple[str, int]] = []
        for canonical, aliases in schema.subtype_columns.items():
            for alias in aliases:
                if alias in col_index:
                    subtype_cols.append((canonical, col_index[alias]))
                    break
        # Registry order follows the header so write_csv/parse_csv round-trips.
        known_identities = set(schema.identity_columns)
        identity_cols = [(n, i) for i, n in enumerate(header) if n in known_identities]
        reaction_cols = [(n, col_index[n]) for n in schema.reaction_columns if n in col_index]
        registry = [name for name, _ in identity_cols]

        stats = IngestStats()
        comments: list[Comment] = []
        seen_ids: set[str] = set()
        width = len(header)

        while True:
            try:
                row = next(reader)
            except StopIteration:
                break
            except UnicodeDecodeError as exc:
                raise CsvParseError(f"not valid UTF-8: {exc}") from None
            except csv.Error as exc:
                raise CsvParseError(str(exc), line=reader.line_num) from None

            if not row:
                continue
            stats.n_rows += 1
            line = reader.line_num
            if len(row) != width:
                stats.note_rejection(line, f"expected {width} cells, got {len(row)}")
                continue

            comment_id = row[id_i].strip()
            if not comment_id:
                stats.note_rejection(line, "empty id")
                continue
            if comment_id in seen_ids:
                stats.note_rejection(line, f"duplicate id {comment_id!r}")
                continue

            try:
                target = _parse_unit_score(row[target_i])
            except ValueError as exc:
                stats.note_rejection(line, f"bad target: {exc}")
                continue

            try:
                subtype_scores = {
                    name: _parse_unit_score(row[i]) for name, i in subtype_cols if row[i] != ""
                }
                identity_scores = {
                    name: _parse_unit_score(row[i]) for name, i in identity_cols if row[i] != ""
                }
                reaction_values = {
                    name: _parse_count(row[i]) for name, i in reaction_cols if row[i] != ""
                }
            except ValueError as exc:
                stats.note_rejection(line, str(exc))
                continue

            seen_ids.add(comment_id)
            comments.append(
                Comment(
                    id=comment_id,
                    text=row[text_i],
                    target=target,
                    subtype_scores=subtype_scores,
                    identity_scores=identity_scores,
                    reactions=reaction_values or None,
                )
            )

        stats.n_accepted = len(comments)
        return Corpus(comments=comments, identity_registry=registry, ingest_stats=stats)
    finally:
        if owns:
            stream.close()


def write_csv(corpus: Corpus, dest) -> None:
    """Serialize a corpus back to CSV; parse_csv(write_csv(c)) round-trips.

    Floats are written with repr so values survive the round trip exactly;
    absent scores become empty cells.
    """
    if isinstance(dest, (str, Path)):
        stream = open(dest, "w", encoding="utf-8", newline="")
        owns = True
    else:
        stream = dest
        owns = False
    try:
        writer = csv.writer(stream, lineterminator="\n")
        header = (
            ["id", "comment_text", "target"]
            + list(SUBTYPE_COLUMNS)
            + list(corpus.identity_registry)
            + list(REACTION_COLUMNS)
        )
        writer.writerow(header)
        for c in corpus:
            row = [c.id, c.text, repr(c.target)]
            row += [
                repr(c.subtype_scores[n]) if n in c.subtype_scores else ""
                for n in SUBTYPE_COLUMNS
            ]
            row += [
                repr(c.identity_scores[n]) if n in c.identity_scores else ""
                for n in corpus.identity_registry
            ]
            reactions = c.reactions or {}
            row += [str(reactions[n]) if n in reactions else "" for n in REACTION_COLUMNS]
            writer.writerow(row)
    finally:
        if owns:
            stream.close()


def split(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Partition a corpus into disjoint train/test subsets.

    Membership comes from a seeded Fisher-Yates shuffle followed by a prefix
    cut of round(train_fraction * N) indices; both subsets keep the source
    ordering.  The train size is clamped so neither side is empty.
    """
    if not 0.0 < spec.train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {spec.train_fraction}")
    n = len(corpus)
    if n < 2:
        raise DataError(f"cannot split a corpus of {n} comment(s)")

    n_train = int(spec.train_fraction * n + 0.5)
    n_train = min(max(n_train, 1), n - 1)

    indices = list(range(n))
    random.Random(spec.seed).shuffle(indices)
    train_idx = sorted(indices[:n_train])
    test_idx = sorted(indices[n_train:])

    registry = list(corpus.identity_registry)
    train = Corpus([corpus.comments[i] for i in train_idx], registry)
    test = Corpus([corpus.comments[i] for i in test_idx], list(registry))
    return train, test


def subgroup_members(
    corpus: Corpus,
    identity: str,
    threshold: float = DEFAULT_MEMBERSHIP_THRESHOLD,
) -> SubgroupSlice:
    """Slice out the comments whose score for `identity` is >= threshold.

    Rows without a score for the identity are non-members (absent is not 0).
    """
    if identity not in corpus.identity_registry:
        known = ", ".join(corpus.identity_registry) or "<none>"
        raise DataError(f"unknown identity {identity!r}; known identities: {known}")
    members = frozenset(
        c.id
        for c in corpus
        if identity in c.identity_scores and c.identity_scores[identity] >= threshold
    )
    return SubgroupSlice(identity=identity, member_ids=members, membership_threshold=threshold)


# Filler vocabulary for synthetic corpora: neutral everyday words.
DEFAULT_SYNTH_VOCABULARY: tuple[str, ...] = (
    "about", "after", "again", "amount", "answer", "apple", "article", "author",
    "because", "before", "better", "board", "bridge", "bring", "brother", "building",
    "camera", "change", "city", "coffee", "comment", "country", "course", "daily",
    "detail", "dinner", "doctor", "driver", "early", "evening", "every", "family",
    "father", "field", "forest", "friend", "garden", "glass", "group", "happen",
    "history", "house", "idea", "island", "journey", "kitchen", "language", "letter",
    "light", "listen", "little", "market", "matter", "meeting", "member", "message",
    "minute", "moment", "money", "morning", "mother", "mountain", "movie", "music",
    "nature", "never", "night", "number", "office", "often", "opinion", "orange",
    "order", "paper", "parent", "people", "person", "picture", "place", "plan",
    "point", "police", "power", "price", "problem", "project", "public", "question",
    "radio", "reason", "report", "river", "school", "season", "sentence", "service",
    "silver", "sister", "sport", "station", "story", "street", "student", "summer",
    "system", "table", "teacher", "thing", "think", "today", "together", "tomorrow",
    "travel", "voice", "water", "weather", "window", "winter", "woman", "word",
    "world", "write", "yellow", "young",
)

# Mild insult tokens that mark the toxic class in synthetic corpora.
_TOXIC_MARKER_WORDS: tuple[str, ...] = ("stupid", "idiot", "pathetic", "garbage", "loser")

# Per-comment probability that each of the marker slots fires.
_TOXIC_MARKER_RATE = 0.55
_NONTOXIC_MARKER_RATE = 0.06
_MARKER_SLOTS = 3


@dataclass
class SynthSpec:
    """Parameters for a deterministic synthetic corpus.

    identity_bias_table maps an identity name to its appearance rate in
    (toxic, non-toxic) comments; when the term appears it is inserted into
    the text and the row gets an identity score of 1.0.
    """

    n_comments: int
    toxic_fraction: float
    identity_bias_table: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    vocabulary: Sequence[str] = DEFAULT_SYNTH_VOCABULARY
    seed: int = 0


def synth_corpus(spec: SynthSpec) -> Corpus:
    """Generate a seeded synthetic corpus with a controlled class imbalance.

    Exactly round(n_comments * toxic_fraction) comments are toxic.  Toxic
    comments carry insult-marker tokens at a higher rate than non-toxic ones,
    so the classes are learnable but deliberately not separable.  Identity
    terms co-occur with toxicity at the configured rates, which is what lets
    tests plant a false-positive identity bias.
    """
    if spec.n_comments < 1:
        raise ValueError("n_comments must be positive")
    if not 0.0 <= spec.toxic_fraction <= 1.0:
        raise ValueError(f"toxic_fraction outside [0, 1]: {spec.toxic_fraction}")
    if not spec.vocabulary:
        raise ValueError("vocabulary must be non-empty")
    for identity, (rate_toxic, rate_nontoxic) in spec.identity_bias_table.items():
        if not (0.0 <= rate_toxic <= 1.0 and 0.0 <= rate_nontoxic <= 1.0):
            raise ValueError(f"appearance rates for {identity!r} outside [0, 1]")

    rng = random.Random(spec.seed)
    vocabulary = list(spec.vocabulary)
    n = spec.n_comments
    n_toxic = int(spec.toxic_fraction * n + 0.5)

    toxic_flags = [True] * n_toxic + [False] * (n - n_toxic)
    rng.shuffle(toxic_flags)

    registry = list(spec.identity_bias_table.keys())
    comments: list[Comment] = []
    for i, toxic in enumerate(toxic_flags):
        target = rng.uniform(0.5, 1.0) if toxic else rng.uniform(0.0, 0.49)
        tokens = rng.choices(vocabulary, k=rng.randint(6, 12))

        marker_rate = _TOXIC_MARKER_RATE if toxic else _NONTOXIC_MARKER_RATE
        for _ in range(_MARKER_SLOTS):
            if rng.random() < marker_rate:
                tokens.append(rng.choice(_TOXIC_MARKER_WORDS))

        identity_scores: dict[str, float] = {}
        for identity, (rate_toxic, rate_nontoxic) in spec.identity_bias_table.items():
            if rng.random() < (rate_toxic if toxic else rate_nontoxic):
                tokens.append(identity)
                identity_scores[identity] = 1.0

        rng.shuffle(tokens)
        has_identity = bool(identity_scores)
        subtype_scores = {
            "severe_toxicity": target * rng.uniform(0.0, 0.5),
            "obscene": target * rng.uniform(0.0, 0.7),
            "identity_attack": target * (rng.uniform(0.3, 0.9) if has_identity else rng.uniform(0.0, 0.15)),
            "insult": target * (rng.uniform(0.6, 1.0) if toxic else rng.uniform(0.0, 0.8)),
            "threat": target * rng.uniform(0.0, 0.4),
            "sexually_explicit": target * rng.uniform(0.0, 0.3),
        }
        reactions = {
            "funny": rng.randint(0, 5),
            "wow": rng.randint(0, 3),
            "sad": rng.randint(0, 2 + int(6 * target)),
            "likes": rng.randint(0, 25),
            "disagree": rng.randint(0, 1 + int(4 * target)),
        }
        comments.append(
            Comment(
                id=f"s{i:06d}",
                text=" ".join(tokens),
                target=target,
                subtype_scores=subtype_scores,
                identity_scores=identity_scores,
                reactions=reactions,
            )
        )

    return Corpus(comments=comments, identity_registry=registry)
