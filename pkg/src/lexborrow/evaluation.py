"""Span-exact scoring, multi-run aggregation and agreement/significance statistics."""

from __future__ import annotations

import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bio import RepairMode, Span, decode_tags
from .corpus import BORROWING_TYPES, Dataset

ALL = "ALL"
LABEL_ORDER = (ALL,) + tuple(t.value for t in BORROWING_TYPES)
METRICS = ("precision", "recall", "f1")


class AlignmentError(ValueError):
    def __init__(self, message: str, sentence: int | None = None):
        self.sentence = sentence
        super().__init__(message)


@dataclass
class Counts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other: "Counts"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self


@dataclass
class MatchCounts:
    per_type: dict[str, Counts] = field(
        default_factory=lambda: {t.value: Counts() for t in BORROWING_TYPES})

    @property
    def all(self) -> Counts:
        total = Counts()
        for c in self.per_type.values():
            total += c
        return total

    def __getitem__(self, label: str) -> Counts:
        return self.all if label == ALL else self.per_type[label]

    def __iadd__(self, other: "MatchCounts"):
        for label, c in other.per_type.items():
            self.per_type.setdefault(label, Counts())
            self.per_type[label] += c
        return self


def match_spans(gold: Sequence[Span], pred: Sequence[Span]) -> MatchCounts:
    """Exact (start, end, type) matching; partial overlaps earn nothing."""
    counts = MatchCounts()
    g, p = set(gold), set(pred)
    for s in g & p:
        counts.per_type[s.type.value].tp += 1
    for s in p - g:
        counts.per_type[s.type.value].fp += 1
    for s in g - p:
        counts.per_type[s.type.value].fn += 1
    return counts


def prf(counts: Counts) -> tuple[float, float, float]:
    """Precision, recall and F1 in percent. Empty denominators give 0."""
    p = 100.0 * counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = 100.0 * counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    return p, r, f1_score(p, r)


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0


@dataclass
class EvalReport:
    scores: dict[str, tuple[float, float, float]]
    counts: MatchCounts
    repair_mode: RepairMode = RepairMode.CONLLEVAL

    def metric(self, label: str, name: str) -> float:
        return self.scores[label][METRICS.index(name)]

    def to_dict(self) -> dict:
        out = {"repair_mode": self.repair_mode.value, "labels": {}}
        for label in LABEL_ORDER:
            p, r, f = self.scores[label]
            c = self.counts[label]
            out["labels"][label] = {"precision": round(p, 2), "recall": round(r, 2),
                                    "f1": round(f, 2), "tp": c.tp, "fp": c.fp, "fn": c.fn}
        return out

    def format_table(self) -> str:
        lines = [f"{'Label':<8}{'Precision':>10}{'Recall':>10}{'F1':>10}{'TP':>7}{'FP':>7}{'FN':>7}"]
        for label in LABEL_ORDER:
            p, r, f = self.scores[label]
            c = self.counts[label]
            lines.append(f"{label:<8}{p:>10.2f}{r:>10.2f}{f:>10.2f}{c.tp:>7}{c.fp:>7}{c.fn:>7}")
        return "\n".join(lines)


def report_from_counts(counts: MatchCounts, mode=RepairMode.CONLLEVAL) -> EvalReport:
    scores = {label: prf(counts[label]) for label in LABEL_ORDER}
    return EvalReport(scores, counts, RepairMode(mode))


def check_alignment(gold: Dataset, pred: Dataset, name: str = "predictions") -> None:
    if len(gold) != len(pred):
        raise AlignmentError(f"{name}: {len(pred)} sentences, gold has {len(gold)}")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if tuple(g.tokens) != tuple(p.tokens):
            raise AlignmentError(f"{name}: tokens differ from gold in sentence {i}", i)


def evaluate(gold: Dataset, pred: Dataset, mode: RepairMode = RepairMode.CONLLEVAL) -> EvalReport:
    check_alignment(gold, pred)
    counts = MatchCounts()
    for g, p in zip(gold, pred):
        counts += match_spans(decode_tags(g.tags, mode), decode_tags(p.tags, mode))
    return report_from_counts(counts, mode)


@dataclass
class RunAggregate:
    mean: dict[str, dict[str, float]]
    std: dict[str, dict[str, float]]
    n_runs: int

    def to_dict(self) -> dict:
        return {"runs": self.n_runs, "labels": {
            label: {m: {"mean": round(self.mean[label][m], 2), "std": round(self.std[label][m], 2)}
                    for m in METRICS} for label in self.mean}}

    def format_table(self) -> str:
        lines = [f"{'Label':<8}" + "".join(f"{m.capitalize():>18}" for m in METRICS)]
        for label in self.mean:
            cells = "".join(f"{self.mean[label][m]:>11.2f} ± {self.std[label][m]:>4.1f}"
                            for m in METRICS)
            lines.append(f"{label:<8}{cells}")
        return "\n".join(lines)


def aggregate_runs(reports: Sequence[EvalReport]) -> RunAggregate:
    if not reports:
        raise ValueError("no reports to aggregate")
    labels = list(reports[0].scores)
    mean, std = {}, {}
    for label in labels:
        mean[label], std[label] = {}, {}
        for m in METRICS:
            values = [r.metric(label, m) for r in reports]
            # exact rational arithmetic: identical runs give a std of exactly 0
            mean[label][m] = float(statistics.fmean(values))
            std[label][m] = float(statistics.stdev(values)) if len(values) > 1 else 0.0
    return RunAggregate(mean, std, len(reports))


def rankdata(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share their mean rank."""
    a = np.asarray(values, dtype=float)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a))
    sorted_a = a[order]
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _rank_sum_distribution(n: int, k: int) -> np.ndarray:
    """Number of k-subsets of {1..n} for each possible sum (index = sum)."""
    max_sum = n * (n + 1) // 2
    # ways[j][s]: subsets of size j with sum s over the ranks processed so far
    ways = np.zeros((k + 1, max_sum + 1), dtype=object)
    ways[0, 0] = 1
    for r in range(1, n + 1):
        for j in range(min(k, r), 0, -1):
            ways[j, r:] = ways[j, r:] + ways[j - 1, :max_sum + 1 - r]
    return ways[k]


EXACT_LIMIT = 24


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided Wilcoxon rank-sum test.

    Returns the rank sum of ``a`` and the two-sided p-value. Without ties and
    with at most ``EXACT_LIMIT`` observations in total, p is exact; otherwise a
    normal approximation with tie and continuity corrections is used.
    """
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    ranks = rankdata(list(a) + list(b))
    w = float(ranks[:n1].sum())
    n = n1 + n2
    ties = len(set(ranks)) < n

    if not ties and n <= EXACT_LIMIT:
        dist = _rank_sum_distribution(n, n1)
        total = sum(dist)
        w_int = int(round(w))
        lower = sum(dist[:w_int + 1])
        upper = sum(dist[w_int:])
        p = 2 * min(lower, upper) / total
        return w, float(min(1.0, p))

    mu = n1 * (n + 1) / 2.0
    tie_counts = Counter(ranks).values()
    tie_term = sum(t ** 3 - t for t in tie_counts) / (n * (n - 1)) if n > 1 else 0.0
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return w, 1.0
    z = max(abs(w - mu) - 0.5, 0.0) / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2))
    return w, float(min(1.0, max(p, np.nextafter(0, 1))))


def cohens_kappa(a: Sequence[str], b: Sequence[str]) -> float:
    """Token-level Cohen's kappa between two tag sequences."""
    if len(a) != len(b):
        raise ValueError(f"annotations differ in length: {len(a)} vs {len(b)}")
    if not a:
        raise ValueError("empty annotations")
    n = len(a)
    p_o = sum(x == y for x, y in zip(a, b)) / n
    ca, cb = Counter(a), Counter(b)
    p_e = sum(ca[t] * cb[t] for t in set(ca) | set(cb)) / (n * n)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else 0.0
    return (p_o - p_e) / (1 - p_e)


def dataset_kappa(a: Dataset, b: Dataset) -> float:
    check_alignment(a, b, "second annotation")
    return cohens_kappa([t for s in a for t in s.tags], [t for s in b for t in s.tags])

