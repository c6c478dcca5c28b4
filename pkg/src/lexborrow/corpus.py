"""Annotated corpus data model, CoNLL-style I/O and corpus statistics."""

from __future__ import annotations

import io
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence


class BorrowingType(str, Enum):
    ENG = "ENG"
    OTHER = "OTHER"


BORROWING_TYPES = (BorrowingType.ENG, BorrowingType.OTHER)

# Label-set order matters: it fixes weight columns and the Viterbi tie-break.
TAGS = ("O", "B-ENG", "I-ENG", "B-OTHER", "I-OTHER")
TAG_SET = frozenset(TAGS)


class ParseError(ValueError):
    """Raised for malformed corpus, embedding or wordlist input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"{message} at line {line}")


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    pos: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if self.pos is not None:
            object.__setattr__(self, "pos", tuple(self.pos))

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True)
class Dataset:
    sentences: tuple[LabeledSentence, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    @property
    def token_count(self) -> int:
        return sum(len(s) for s in self.sentences)


def concat(datasets: Iterable[Dataset], name: str = "") -> Dataset:
    sentences: list[LabeledSentence] = []
    for d in datasets:
        sentences.extend(d.sentences)
    return Dataset(sentences, name)


@dataclass(frozen=True)
class ColumnSchema:
    """Column layout of a token-per-line file.

    ``delimiter=None`` splits on any whitespace; the default tab delimiter falls
    back to a whitespace split for lines that contain no tab.
    """

    columns: tuple[str, ...] = ("token", "tag")
    delimiter: str | None = "\t"

    def __post_init__(self):
        if "token" not in self.columns:
            raise ValueError("schema needs a token column")
        unknown = set(self.columns) - {"token", "tag", "pos"}
        if unknown:
            raise ValueError(f"unknown column names: {sorted(unknown)}")

    @property
    def column_count(self) -> int:
        return len(self.columns)

    def split(self, line: str) -> list[str]:
        if self.delimiter is None:
            return line.split()
        fields = line.split(self.delimiter)
        if len(fields) < self.column_count and self.delimiter == "\t":
            fields = line.split()
        return fields


DEFAULT_SCHEMA = ColumnSchema()
POS_SCHEMA = ColumnSchema(("token", "pos", "tag"))


def _text_lines(stream) -> Iterable[str]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if isinstance(stream, io.TextIOBase):
        yield from stream
        return
    for raw in stream:
        yield raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw


def read_conll(stream, schema: ColumnSchema = DEFAULT_SCHEMA, name: str = "") -> Dataset:
    """Parse a token-per-line stream (bytes or text) into a :class:`Dataset`.

    Blank lines separate sentences; runs of blank lines count as one break and
    a trailing sentence without a final blank line is kept.
    """
    cols = schema.columns
    tok_i = cols.index("token")
    tag_i = cols.index("tag") if "tag" in cols else None
    pos_i = cols.index("pos") if "pos" in cols else None

    sentences: list[LabeledSentence] = []
    tokens: list[str] = []
    tags: list[str] = []
    pos: list[str] = []

    def flush():
        if tokens:
            sentences.append(LabeledSentence(tokens, tags, pos if pos_i is not None else None))
        return [], [], []

    for lineno, line in enumerate(_text_lines(stream), start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            tokens, tags, pos = flush()
            continue
        fields = schema.split(line)
        if len(fields) < schema.column_count:
            raise ParseError(
                f"expected {schema.column_count} fields, found {len(fields)}", lineno
            )
        token = fields[tok_i].strip()
        if not token:
            raise ParseError("empty token", lineno)
        if tag_i is None:
            tag = "O"
        else:
            tag = fields[tag_i].strip()
            if tag not in TAG_SET:
                raise ParseError(f"unknown tag {tag}", lineno)
        tokens.append(token)
        tags.append(tag)
        if pos_i is not None:
            pos.append(fields[pos_i].strip())
    flush()
    return Dataset(sentences, name)


def load_conll(path, schema: ColumnSchema = DEFAULT_SCHEMA, name: str | None = None) -> Dataset:
    with open(path, "rb") as f:
        return read_conll(f, schema, name if name is not None else str(path))


def write_conll(dataset: Dataset, schema: ColumnSchema = DEFAULT_SCHEMA) -> bytes:
    """Serialize to UTF-8 bytes; every sentence is followed by one blank line."""
    delim = schema.delimiter if schema.delimiter is not None else "\t"
    out = io.StringIO()
    for sent in dataset:
        for i, token in enumerate(sent.tokens):
            row = []
            for col in schema.columns:
                if col == "token":
                    row.append(token)
                elif col == "tag":
                    row.append(sent.tags[i])
                else:
                    row.append(sent.pos[i] if sent.pos is not None else "_")
            out.write(delim.join(row))
            out.write("\n")
        out.write("\n")
    return out.getvalue().encode("utf-8")


def save_conll(dataset: Dataset, path, schema: ColumnSchema = DEFAULT_SCHEMA) -> None:
    with open(path, "wb") as f:
        f.write(write_conll(dataset, schema))


@dataclass(frozen=True)
class Violation:
    sentence: int
    kind: str  # "length_mismatch" | "empty_sentence" | "invalid_bio"
    message: str
    severity: str = "error"


def validate(dataset: Dataset) -> list[Violation]:
    found = []
    for si, sent in enumerate(dataset):
        if len(sent.tokens) != len(sent.tags) or (
            sent.pos is not None and len(sent.pos) != len(sent.tokens)
        ):
            found.append(Violation(si, "length_mismatch",
                                   f"{len(sent.tokens)} tokens but {len(sent.tags)} tags"))
        if not sent.tokens:
            found.append(Violation(si, "empty_sentence", "sentence has no tokens"))
        prev = "O"
        for i, tag in enumerate(sent.tags):
            if tag.startswith("I-") and prev[2:] != tag[2:]:
                found.append(Violation(si, "invalid_bio", f"invalid {tag} at position {i}",
                                       severity="warning"))
            prev = tag
    return found


@dataclass
class CorpusStats:
    token_count: int
    span_count_per_type: dict[BorrowingType, int]
    unique_borrowing_count: int
    density_per_1000: float
    oov_unique_rate: float | None = None
    oov_span_rate: float | None = None
    sentence_count: int = 0

    @property
    def span_count(self) -> int:
        return sum(self.span_count_per_type.values())

    def to_dict(self) -> dict:
        return {
            "sentences": self.sentence_count,
            "tokens": self.token_count,
            "ENG": self.span_count_per_type[BorrowingType.ENG],
            "OTHER": self.span_count_per_type[BorrowingType.OTHER],
            "unique": self.unique_borrowing_count,
            "density_per_1000": self.density_per_1000,
            "oov_unique_rate": self.oov_unique_rate,
            "oov_span_rate": self.oov_span_rate,
        }


def borrowing_surfaces(dataset: Dataset) -> list[tuple[str, BorrowingType]]:
    """Case-folded surface string and type of every span, after conlleval repair."""
    from .bio import decode_tags

    found = []
    for sent in dataset:
        for span in decode_tags(sent.tags):
            surface = " ".join(sent.tokens[span.start:span.end]).casefold()
            found.append((surface, span.type))
    return found


def corpus_stats(dataset: Dataset, reference: Dataset | None = None) -> CorpusStats:
    tokens = dataset.token_count
    if tokens == 0:
        raise ValueError("density undefined: dataset has no tokens")
    surfaces = borrowing_surfaces(dataset)
    per_type = Counter(t for _, t in surfaces)
    counts = {t: per_type.get(t, 0) for t in BORROWING_TYPES}
    unique = {s for s, _ in surfaces}

    oov_unique = oov_span = None
    if reference is not None:
        known = {s for s, _ in borrowing_surfaces(reference)}
        if unique:
            oov_unique = sum(1 for s in unique if s not in known) / len(unique)
            oov_span = sum(1 for s, _ in surfaces if s not in known) / len(surfaces)
        else:
            oov_unique = oov_span = 0.0

    return CorpusStats(
        token_count=tokens,
        span_count_per_type=counts,
        unique_borrowing_count=len(unique),
        density_per_1000=1000.0 * len(surfaces) / tokens,
        oov_unique_rate=oov_unique,
        oov_span_rate=oov_span,
        sentence_count=len(dataset),
    )


def read_tokens(stream) -> list[list[str]]:
    """First column of a token-per-line stream, grouped into sentences."""
    sentences, current = [], []
    for line in _text_lines(stream):
        fields = line.split()
        if not fields:
            if current:
                sentences.append(current)
            current = []
        else:
            current.append(fields[0])
    if current:
        sentences.append(current)
    return sentences


def read_wordlist(path_or_stream) -> set[str]:
    """One word per line, UTF-8; case-folded. Blank lines and ``#`` comments skipped."""
    if isinstance(path_or_stream, (str, bytes)) or hasattr(path_or_stream, "__fspath__"):
        with open(path_or_stream, "rb") as f:
            return read_wordlist(f)
    words = set()
    for line in _text_lines(path_or_stream):
        w = line.strip()
        if w and not w.startswith("#"):
            words.add(w.casefold())
    return words


def vocabulary(dataset: Dataset) -> set[str]:
    return {t.casefold() for sent in dataset for t in sent.tokens}


def tag_sequences(dataset: Dataset) -> list[tuple[str, ...]]:
    return [s.tags for s in dataset]


def with_tags(dataset: Dataset, tags: Sequence[Sequence[str]], name: str = "") -> Dataset:
    if len(tags) != len(dataset):
        raise ValueError("tag sequence count does not match sentence count")
    return Dataset(
        [LabeledSentence(s.tokens, t, s.pos) for s, t in zip(dataset, tags)],
        name or dataset.name,
    )
