"""Handcrafted token features for the CRF tagger.

Every template is evaluated at each offset of a symmetric window around the
current token; positions that fall outside the sentence produce ``BOS[o]`` /
``EOS[o]`` boundary attributes instead. Word-embedding attributes are only
emitted for the current token and carry the real-valued vector components.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Sequence

import numpy as np

from .corpus import Dataset, ParseError, _text_lines

QUOTES = frozenset(["`", "'", '"', "“", "”", "«", "»", "‘", "’", "``", "''"])

URL_RE = re.compile(r"^(https?://|www\.)\S+\.\S+", re.IGNORECASE)
EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
TWITTER_RE = re.compile(r"^[@#][A-Za-z0-9_]+$")


class Flag(str, Enum):
    UPPERCASE = "upper"
    TITLECASE = "title"
    QUOTE = "quote"
    URL = "url"
    EMAIL = "email"
    TWITTER = "twitter"


@dataclass(frozen=True)
class FeatureConfig:
    window: int = 2
    bias: bool = True
    token: bool = True
    uppercase: bool = True
    titlecase: bool = True
    char_trigram: bool = True
    quotation: bool = True
    suffix: bool = True
    pos_tag: bool = True
    word_shape: bool = True
    word_embedding: bool = True
    url: bool = True
    email: bool = True
    twitter: bool = True
    boundary: bool = True
    trigram_min_len: int = 3
    suffix_len: int = 3

    def __post_init__(self):
        if self.window < 0:
            raise ValueError("window must be >= 0")
        if self.suffix_len < 1:
            raise ValueError("suffix_len must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def only(cls, *templates: str, window: int = 2) -> "FeatureConfig":
        """Config with every template off except ``templates``."""
        switches = {f.name: False for f in fields(cls) if f.type in ("bool", bool)}
        for t in templates:
            if t not in switches:
                raise ValueError(f"unknown template {t!r}")
            switches[t] = True
        return cls(window=window, **switches)


_FLAG_SWITCH = {
    Flag.UPPERCASE: "uppercase",
    Flag.TITLECASE: "titlecase",
    Flag.QUOTE: "quotation",
    Flag.URL: "url",
    Flag.EMAIL: "email",
    Flag.TWITTER: "twitter",
}


def word_shape(text: str) -> str:
    out = []
    prev, run = None, 0
    for ch in text:
        if ch.isalpha():
            m = "X" if ch.isupper() else "x"
        elif ch.isdigit():
            m = "d"
        else:
            m = ch
        run = run + 1 if m == prev else 1
        prev = m
        if run <= 4:
            out.append(m)
    return "".join(out)


def char_trigrams(text: str) -> list[str]:
    """Distinct 3-character substrings in order of first occurrence."""
    seen = {}
    for i in range(len(text) - 2):
        seen.setdefault(text[i:i + 3], None)
    return list(seen)


def _is_cased(ch: str) -> bool:
    return ch.isupper() or ch.islower()


def classify_token_flags(text: str) -> set[Flag]:
    flags = set()
    if text.isupper():
        flags.add(Flag.UPPERCASE)
    if text and text[0].isupper() and all(not c.isupper() for c in text[1:] if _is_cased(c)):
        flags.add(Flag.TITLECASE)
    if text in QUOTES:
        flags.add(Flag.QUOTE)
    if URL_RE.match(text):
        flags.add(Flag.URL)
    if EMAIL_RE.match(text):
        flags.add(Flag.EMAIL)
    if TWITTER_RE.match(text):
        flags.add(Flag.TWITTER)
    return flags


@dataclass
class EmbeddingTable:
    dimension: int
    vectors: dict[str, np.ndarray]

    def __post_init__(self):
        for word, vec in self.vectors.items():
            if len(vec) != self.dimension:
                raise ValueError(f"vector for {word!r} has dimension {len(vec)}, "
                                 f"expected {self.dimension}")

    def __len__(self):
        return len(self.vectors)

    def lookup(self, word: str):
        vec = self.vectors.get(word)
        if vec is None:
            vec = self.vectors.get(word.lower())
        return vec

    def fingerprint(self) -> str:
        h = hashlib.sha256(str(self.dimension).encode())
        for word in sorted(self.vectors):
            h.update(word.encode("utf-8") + b"\0")
            h.update(np.asarray(self.vectors[word], dtype="<f8").tobytes())
        return h.hexdigest()


def load_embeddings(stream) -> EmbeddingTable:
    """Read word2vec text format: optional ``count dim`` header, then ``word v1 .. vd``."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    for lineno, line in enumerate(_text_lines(stream), start=1):
        parts = line.rstrip("\r\n").split(" ")
        parts = [p for p in parts if p]
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            dim = int(parts[1])
            continue
        word, values = parts[0], parts[1:]
        if dim is None:
            dim = len(values)
        if len(values) != dim:
            raise ParseError(f"expected {dim} values, found {len(values)}", lineno)
        try:
            vectors[word] = np.array([float(v) for v in values])
        except ValueError:
            raise ParseError("non-numeric embedding value", lineno) from None
    return EmbeddingTable(dim or 0, vectors)


def _fmt(offset: int) -> str:
    return f"+{offset}" if offset > 0 else str(offset)


def _token_attributes(text: str, pos: str | None, o: str, config: FeatureConfig, out: list):
    if config.token:
        out.append((f"w[{o}]={text}", 1.0))
    flags = classify_token_flags(text)
    for flag, switch in _FLAG_SWITCH.items():
        if flag in flags and getattr(config, switch):
            out.append((f"{flag.value}[{o}]", 1.0))
    if config.char_trigram and len(text) >= config.trigram_min_len:
        for tri in char_trigrams(text):
            out.append((f"tri[{o}]={tri}", 1.0))
    if config.suffix:
        out.append((f"suffix{config.suffix_len}[{o}]={text[-config.suffix_len:]}", 1.0))
    if config.pos_tag and pos is not None:
        out.append((f"pos[{o}]={pos}", 1.0))
    if config.word_shape:
        out.append((f"shape[{o}]={word_shape(text)}", 1.0))


def _windowed(config: FeatureConfig) -> bool:
    return any(getattr(config, name) for name in (
        "token", "uppercase", "titlecase", "char_trigram", "quotation", "suffix",
        "pos_tag", "word_shape", "url", "email", "twitter"))


def extract_token_attributes(
    tokens: Sequence[str],
    i: int,
    config: FeatureConfig = FeatureConfig(),
    embeddings: EmbeddingTable | None = None,
    pos: Sequence[str] | None = None,
) -> list[tuple[str, float]]:
    """Attributes ``(name, value)`` for position ``i``.

    ``tokens`` may also be a :class:`~lexborrow.corpus.LabeledSentence`, in
    which case its POS column is used.
    """
    if hasattr(tokens, "tokens"):
        pos = tokens.pos if pos is None else pos
        tokens = tokens.tokens
    n = len(tokens)
    if not 0 <= i < n:
        raise IndexError(f"position {i} outside sentence of length {n}")
    out: list[tuple[str, float]] = []
    if config.bias:
        out.append(("bias", 1.0))
    windowed = _windowed(config)
    for off in range(-config.window, config.window + 1):
        j = i + off
        o = _fmt(off)
        if j < 0 or j >= n:
            if config.boundary and windowed:
                out.append((f"{'BOS' if j < 0 else 'EOS'}[{o}]", 1.0))
            continue
        _token_attributes(tokens[j], pos[j] if pos is not None else None, o, config, out)
    if config.word_embedding and embeddings is not None:
        vec = embeddings.lookup(tokens[i])
        if vec is not None:
            for d, v in enumerate(vec):
                out.append((f"emb[0]=d{d}", float(v)))
    return out


def sentence_attributes(tokens, config=FeatureConfig(), embeddings=None, pos=None):
    if hasattr(tokens, "tokens"):
        pos = tokens.pos if pos is None else pos
        tokens = tokens.tokens
    return [extract_token_attributes(tokens, i, config, embeddings, pos) for i in range(len(tokens))]


class AttributeVocabulary:
    """Dense mapping from attribute name to weight row."""

    def __init__(self, names: Sequence[str] = ()):
        self._index: dict[str, int] = {}
        self.frozen = False
        for name in names:
            self.add(name)

    def add(self, name: str) -> int | None:
        idx = self._index.get(name)
        if idx is None and not self.frozen:
            idx = self._index[name] = len(self._index)
        return idx

    def get(self, name: str) -> int | None:
        return self._index.get(name)

    def __getitem__(self, name: str) -> int:
        return self._index[name]

    def __contains__(self, name) -> bool:
        return name in self._index

    def __len__(self):
        return len(self._index)

    def names(self) -> list[str]:
        return list(self._index)

    def as_dict(self) -> dict[str, int]:
        return dict(self._index)

    def freeze(self) -> "AttributeVocabulary":
        self.frozen = True
        return self

    def __eq__(self, other):
        return isinstance(other, AttributeVocabulary) and self._index == other._index


def build_vocabulary(dataset: Dataset, config: FeatureConfig = FeatureConfig(),
                     embeddings: EmbeddingTable | None = None) -> AttributeVocabulary:
    if len(dataset) == 0 or dataset.token_count == 0:
        raise ValueError("cannot build a vocabulary from an empty dataset")
    vocab = AttributeVocabulary()
    for sent in dataset:
        for attrs in sentence_attributes(sent, config, embeddings):
            for name, _ in attrs:
                vocab.add(name)
    return vocab.freeze()


@dataclass
class SparseFeatures:
    """CSR-style features of one or more sentences stacked row-wise."""

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    lengths: np.ndarray

    @property
    def n_positions(self) -> int:
        return len(self.indptr) - 1

    def matrix(self, n_attributes: int):
        from scipy.sparse import csr_matrix

        return csr_matrix((self.values, self.indices, self.indptr),
                          shape=(self.n_positions, n_attributes))


def vectorize(sentences, vocab: AttributeVocabulary, config: FeatureConfig,
              embeddings: EmbeddingTable | None = None, grow: bool = False) -> SparseFeatures:
    """Map attributes of every position to vocabulary indices.

    Without ``grow``, attributes missing from the vocabulary are dropped.
    """
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    lengths = []
    for sent in sentences:
        attrs_per_pos = sentence_attributes(sent, config, embeddings)
        lengths.append(len(attrs_per_pos))
        for attrs in attrs_per_pos:
            for name, value in attrs:
                idx = vocab.add(name) if grow else vocab.get(name)
                if idx is not None:
                    indices.append(idx)
                    values.append(value)
            indptr.append(len(indices))
    return SparseFeatures(
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(values, dtype=np.float64),
        np.asarray(lengths, dtype=np.int64),
    )
