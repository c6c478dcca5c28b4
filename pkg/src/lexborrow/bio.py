"""Span <-> BIO conversion with conlleval-style repair of invalid sequences."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .corpus import BorrowingType


class RepairMode(str, Enum):
    CONLLEVAL = "conlleval"
    DISCARD = "discard"


class InvalidSpanError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Span:
    start: int
    end: int
    type: BorrowingType

    def __post_init__(self):
        object.__setattr__(self, "type", BorrowingType(self.type))

    def __len__(self):
        return self.end - self.start


def encode_spans(length: int, spans: Sequence[Span]) -> list[str]:
    tags = ["O"] * length
    last_end = 0
    for span in sorted(spans, key=lambda s: (s.start, s.end)):
        if not 0 <= span.start < span.end <= length:
            raise InvalidSpanError(f"span {span} out of range for length {length}")
        if span.start < last_end:
            raise InvalidSpanError(f"span {span} overlaps a previous span")
        t = span.type.value
        tags[span.start] = "B-" + t
        for i in range(span.start + 1, span.end):
            tags[i] = "I-" + t
        last_end = span.end
    return tags


def _split(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, _, label = tag.partition("-")
    return prefix, label


def decode_tags(tags: Sequence[str], mode: RepairMode = RepairMode.CONLLEVAL) -> list[Span]:
    """Extract spans from a possibly invalid BIO sequence.

    In CONLLEVAL mode an ``I-X`` that does not continue an ``X`` chunk opens a
    new chunk. In DISCARD mode it is dropped, together with any ``I-X`` run
    that depends on it.
    """
    mode = RepairMode(mode)
    spans = []
    start = None
    cur = None
    for i, tag in enumerate(tags):
        prefix, label = _split(tag)
        if prefix == "I" and cur == label:
            continue
        if cur is not None:
            spans.append(Span(start, i, cur))
            start = cur = None
        if prefix == "B" or (prefix == "I" and mode is RepairMode.CONLLEVAL):
            start, cur = i, label
    if cur is not None:
        spans.append(Span(start, len(tags), cur))
    return spans


def repair(tags: Sequence[str]) -> list[str]:
    return encode_spans(len(tags), decode_tags(tags, RepairMode.CONLLEVAL))
