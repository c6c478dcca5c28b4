"""Candidate flagging and article/sentence selection for annotation.

A token is a borrowing candidate when the CRF places it inside a predicted
span, when it appears in an English wordlist, or when it was never seen in
the training corpus. Tokens with no letters are never candidates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .bio import decode_tags


class Reason(str, Enum):
    MODEL = "MODEL"
    WORDLIST = "WORDLIST"
    OOV = "OOV"


@dataclass
class SelectionResources:
    """Lookup resources. ``None`` disables the corresponding rule."""

    english_wordlist: set[str] | None = None
    training_vocabulary: set[str] | None = None
    model: object | None = None
    embeddings: object | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.english_wordlist is not None:
            self.english_wordlist = {w.casefold() for w in self.english_wordlist}
        if self.training_vocabulary is not None:
            self.training_vocabulary = {w.casefold() for w in self.training_vocabulary}


@dataclass
class CandidateReport:
    reasons: list[frozenset[Reason]]

    @property
    def count(self) -> int:
        return sum(1 for r in self.reasons if r)

    def candidates(self) -> list[int]:
        return [i for i, r in enumerate(self.reasons) if r]


def is_word(token: str) -> bool:
    return any(ch.isalpha() for ch in token)


def detect_candidates(sentence: Sequence[str], resources: SelectionResources) -> CandidateReport:
    tokens = list(sentence.tokens if hasattr(sentence, "tokens") else sentence)
    in_span = [False] * len(tokens)
    if resources.model is not None and tokens:
        from .crf import tag

        (tags,) = tag(resources.model, [tokens], resources.embeddings)
        for span in decode_tags(tags):
            for i in range(span.start, span.end):
                in_span[i] = True
    reasons = []
    for token, flagged in zip(tokens, in_span):
        found = set()
        if is_word(token):
            folded = token.casefold()
            if flagged:
                found.add(Reason.MODEL)
            if resources.english_wordlist is not None and folded in resources.english_wordlist:
                found.add(Reason.WORDLIST)
            if (resources.training_vocabulary is not None
                    and folded not in resources.training_vocabulary):
                found.add(Reason.OOV)
        reasons.append(frozenset(found))
    return CandidateReport(reasons)


def select_sentences(sentences: Sequence[Sequence[str]], resources: SelectionResources) -> list[int]:
    return [i for i, s in enumerate(sentences) if detect_candidates(s, resources).count > 0]


def article_candidate_count(sentences, resources: SelectionResources) -> int:
    return sum(detect_candidates(s, resources).count for s in sentences)


def select_articles(articles: Sequence[tuple[str, Sequence]], resources: SelectionResources,
                    threshold: int = 5) -> list[str]:
    """Ids of articles with strictly more than ``threshold`` candidates."""
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    return [aid for aid, sentences in articles
            if article_candidate_count(sentences, resources) > threshold]


def read_articles(stream) -> list[tuple[str, list[list[str]]]]:
    """Parse one tokenized sentence per line, with ``# article: <id>`` headers.

    Sentences before the first header belong to an article with id ``""``.
    """
    from .corpus import _text_lines

    articles: list[tuple[str, list[list[str]]]] = []
    current_id, current = None, []
    for line in _text_lines(stream):
        stripped = line.strip()
        if stripped.startswith("# article:"):
            if current_id is not None or current:
                articles.append((current_id or "", current))
            current_id, current = stripped[len("# article:"):].strip(), []
        elif stripped:
            current.append(stripped.split())
    if current_id is not None or current:
        articles.append((current_id or "", current))
    return articles
