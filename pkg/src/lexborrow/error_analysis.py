"""Cross-model error analysis against a shared gold standard.

Predictions from several models are aligned with the gold corpus. Outcomes
are kept at two granularities: per span (exact boundary matching) and per
token (repaired BIO tags), because the interesting counts differ between the
two views.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .bio import RepairMode, Span, decode_tags, repair
from .corpus import Dataset
from .evaluation import AlignmentError


class Outcome(str, Enum):
    TP = "TP"
    FN = "FN"
    FP = "FP"
    TYPE_CONFUSION = "TYPE_CONFUSION"


class ErrorCategory(str, Enum):
    ALL_UPPERCASE = "ALL_UPPERCASE"
    SENTENCE_INITIAL_TITLECASE = "SENTENCE_INITIAL_TITLECASE"
    SPANISH_HOMOGRAPH = "SPANISH_HOMOGRAPH"
    OTHER = "OTHER"


@dataclass(frozen=True, order=True)
class SpanRef:
    sentence: int
    span: Span


@dataclass(frozen=True, order=True)
class TokenRef:
    sentence: int
    index: int


@dataclass
class OutcomeMatrix:
    gold: Dataset
    model_names: list[str]
    gold_tags: list[list[str]]
    pred_tags: list[list[list[str]]]  # [model][sentence][token]
    gold_spans: list[SpanRef]
    outcomes: list[tuple[Outcome, ...]]  # parallel to gold_spans, one entry per model
    false_positives: list[list[SpanRef]]  # per model

    @property
    def n_models(self) -> int:
        return len(self.model_names)

    def tokens(self):
        """Yield ``(TokenRef, gold tag, per-model predicted tags)``."""
        for si, gtags in enumerate(self.gold_tags):
            for ti, g in enumerate(gtags):
                yield TokenRef(si, ti), g, [p[si][ti] for p in self.pred_tags]

    def model_counts(self, m: int) -> Counter:
        c = Counter(o[m] for o in self.outcomes)
        c[Outcome.FP] = len(self.false_positives[m])
        return c


def align_outputs(gold: Dataset, predictions: Sequence[Dataset],
                  names: Sequence[str] | None = None) -> OutcomeMatrix:
    names = list(names) if names is not None else [p.name or f"model{i}"
                                                   for i, p in enumerate(predictions)]
    for name, pred in zip(names, predictions):
        if len(pred) != len(gold):
            raise AlignmentError(f"{name}: {len(pred)} sentences, gold has {len(gold)}")
        for si, (g, p) in enumerate(zip(gold, pred)):
            if tuple(g.tokens) != tuple(p.tokens):
                raise AlignmentError(f"{name}: tokens differ from gold in sentence {si}", si)

    gold_tags = [repair(s.tags) for s in gold]
    pred_tags = [[repair(s.tags) for s in pred] for pred in predictions]
    gold_spans, outcomes = [], []
    false_positives: list[list[SpanRef]] = [[] for _ in predictions]
    for si, sent in enumerate(gold):
        g_spans = decode_tags(sent.tags, RepairMode.CONLLEVAL)
        bounds = {(s.start, s.end) for s in g_spans}
        per_model = []
        for m, pred in enumerate(predictions):
            p_spans = decode_tags(pred[si].tags, RepairMode.CONLLEVAL)
            by_bounds = {(s.start, s.end): s for s in p_spans}
            per_model.append(by_bounds)
            false_positives[m].extend(SpanRef(si, s) for s in p_spans
                                      if (s.start, s.end) not in bounds)
        for span in g_spans:
            row = []
            for by_bounds in per_model:
                hit = by_bounds.get((span.start, span.end))
                if hit is None:
                    row.append(Outcome.FN)
                elif hit.type == span.type:
                    row.append(Outcome.TP)
                else:
                    row.append(Outcome.TYPE_CONFUSION)
            gold_spans.append(SpanRef(si, span))
            outcomes.append(tuple(row))
    return OutcomeMatrix(gold, names, gold_tags, pred_tags, gold_spans, outcomes, false_positives)


@dataclass
class CommonErrors:
    missed_by_all: list[SpanRef]
    false_positive_by_all: list[tuple[int, int, int]]  # (sentence, start, end) token runs
    missed_tokens: list[TokenRef] = field(default_factory=list)
    type_confused_tokens: list[TokenRef] = field(default_factory=list)

    @property
    def missed_span_token_count(self) -> int:
        return sum(len(r.span) for r in self.missed_by_all)

    @property
    def false_positive_token_count(self) -> int:
        return sum(end - start for _, start, end in self.false_positive_by_all)


def common_errors(matrix: OutcomeMatrix) -> CommonErrors:
    """Errors shared by every model.

    ``missed_by_all`` holds gold spans whose tokens every model tagged ``O``;
    ``missed_tokens`` is the token-level counterpart (gold-span tokens that
    every model tagged ``O``, whether or not the rest of the span was found).
    """
    if matrix.n_models < 1:
        raise ValueError("need at least one model")
    missed = []
    for ref in matrix.gold_spans:
        s, sp = ref.sentence, ref.span
        if all(p[s][i] == "O" for p in matrix.pred_tags for i in range(sp.start, sp.end)):
            missed.append(ref)
    runs = []
    missed_tokens, confused = [], []
    for si, gtags in enumerate(matrix.gold_tags):
        start = None
        for ti in range(len(gtags) + 1):
            hit = (ti < len(gtags) and gtags[ti] == "O"
                   and all(p[si][ti] != "O" for p in matrix.pred_tags))
            if hit and start is None:
                start = ti
            elif not hit and start is not None:
                runs.append((si, start, ti))
                start = None
        for ti, g in enumerate(gtags):
            if g == "O":
                continue
            preds = [p[si][ti] for p in matrix.pred_tags]
            if all(t == "O" for t in preds):
                missed_tokens.append(TokenRef(si, ti))
            elif all(t != "O" and t[2:] != g[2:] for t in preds):
                confused.append(TokenRef(si, ti))
    return CommonErrors(missed, runs, missed_tokens, confused)


@dataclass
class UniqueAnswers:
    unique_correct: list[TokenRef]
    unique_incorrect_fp: list[TokenRef]
    unique_correct_O: list[TokenRef]


def unique_answers(matrix: OutcomeMatrix, model_index: int) -> UniqueAnswers:
    """Token-level answers given by ``model_index`` and by no other model."""
    if matrix.n_models < 2:
        raise ValueError("unique answers need at least two models")
    if not 0 <= model_index < matrix.n_models:
        raise IndexError(f"model index {model_index} out of range")
    m = model_index
    correct, fp, correct_o = [], [], []
    for ref, g, preds in matrix.tokens():
        others = preds[:m] + preds[m + 1:]
        mine = preds[m]
        if g != "O":
            if mine == g and all(o != g for o in others):
                correct.append(ref)
        elif mine != "O" and all(o == "O" for o in others):
            fp.append(ref)
        elif mine == "O" and all(o != "O" for o in others):
            correct_o.append(ref)
    return UniqueAnswers(correct, fp, correct_o)


def _has_cased(text: str) -> bool:
    return any(c.isupper() or c.islower() for c in text)


def _titlecase(token: str) -> bool:
    return bool(token) and token[0].isupper() and not any(c.isupper() for c in token[1:])


def categorize_error(span_tokens: Sequence[str], sentence_position: int,
                     spanish_lexicon: set[str] = frozenset()) -> ErrorCategory:
    """First matching category in declaration order; ``OTHER`` otherwise."""
    if not span_tokens:
        raise ValueError("empty span")
    text = "".join(span_tokens)
    if _has_cased(text) and all(not c.islower() for c in text):
        return ErrorCategory.ALL_UPPERCASE
    if sentence_position == 0 and _titlecase(span_tokens[0]):
        return ErrorCategory.SENTENCE_INITIAL_TITLECASE
    if spanish_lexicon and all(t.casefold() in spanish_lexicon for t in span_tokens):
        return ErrorCategory.SPANISH_HOMOGRAPH
    return ErrorCategory.OTHER


def _context(matrix: OutcomeMatrix, ref: SpanRef, width: int = 5) -> str:
    toks = matrix.gold[ref.sentence].tokens
    s, e = ref.span.start, ref.span.end
    left = toks[max(0, s - width):s]
    right = toks[e:e + width]
    return " ".join([*left, "[" + " ".join(toks[s:e]) + "]", *right])


def analysis_report(matrix: OutcomeMatrix, spanish_lexicon: set[str] = frozenset()) -> dict:
    """Structured summary used by the ``compare`` command."""
    common = common_errors(matrix)
    per_model = {}
    for m, name in enumerate(matrix.model_names):
        c = matrix.model_counts(m)
        entry = {o.value: c.get(o, 0) for o in Outcome}
        if matrix.n_models >= 2:
            u = unique_answers(matrix, m)
            entry.update(unique_correct=len(u.unique_correct),
                         unique_incorrect_fp=len(u.unique_incorrect_fp),
                         unique_correct_O=len(u.unique_correct_O))
        per_model[name] = entry
    categories = Counter()
    missed_listing = []
    for ref in common.missed_by_all:
        toks = matrix.gold[ref.sentence].tokens[ref.span.start:ref.span.end]
        cat = categorize_error(toks, ref.span.start, spanish_lexicon)
        categories[cat] += 1
        missed_listing.append({"sentence": ref.sentence, "start": ref.span.start,
                               "end": ref.span.end, "type": ref.span.type.value,
                               "text": " ".join(toks), "category": cat.value,
                               "context": _context(matrix, ref)})
    fp_listing = []
    for si, s, e in common.false_positive_by_all:
        toks = matrix.gold[si].tokens
        fp_listing.append({"sentence": si, "start": s, "end": e, "text": " ".join(toks[s:e]),
                           "category": "UNCATEGORIZED",
                           "context": _context(matrix, SpanRef(si, Span(s, e, "ENG")))})
    return {
        "models": per_model,
        "common": {
            "missed_spans": len(common.missed_by_all),
            "missed_span_tokens": common.missed_span_token_count,
            "missed_tokens": len(common.missed_tokens),
            "false_positive_runs": len(common.false_positive_by_all),
            "false_positive_tokens": common.false_positive_token_count,
            "type_confused_tokens": len(common.type_confused_tokens),
        },
        "missed_categories": {c.value: categories.get(c, 0) for c in ErrorCategory},
        "missed_by_all": missed_listing,
        "false_positive_by_all": fp_listing,
    }


def format_report(report: dict) -> str:
    lines = ["Per-model outcomes"]
    keys = list(next(iter(report["models"].values())).keys()) if report["models"] else []
    lines.append(f"{'model':<24}" + "".join(f"{k:>20}" for k in keys))
    for name, entry in report["models"].items():
        lines.append(f"{name:<24}" + "".join(f"{entry[k]:>20}" for k in keys))
    lines.append("")
    lines.append("Errors common to all models")
    for k, v in report["common"].items():
        lines.append(f"  {k:<24}{v:>8}")
    lines.append("")
    lines.append("Missed-by-all categories")
    for k, v in report["missed_categories"].items():
        lines.append(f"  {k:<28}{v:>8}")
    if report["missed_by_all"]:
        lines.append("")
        lines.append("Missed by all models")
        for item in report["missed_by_all"]:
            lines.append(f"  [{item['sentence']}:{item['start']}-{item['end']}] {item['type']:<6}"
                         f"{item['category']:<28}{item['context']}")
    if report["false_positive_by_all"]:
        lines.append("")
        lines.append("False positives of all models")
        for item in report["false_positive_by_all"]:
            lines.append(f"  [{item['sentence']}:{item['start']}-{item['end']}] {item['context']}")
    return "\n".join(lines)
