"""Independent reference computations used by the tests.

Each oracle is written from the textbook definition and deliberately shares
no code with the package routine it checks.
"""

import itertools
import math

import numpy as np


def conlleval_chunks(tags):
    """Chunks as (start, end, type), following conlleval's start/end-of-chunk rules."""

    def split(tag):
        if tag == "O":
            return "O", ""
        return tag[0], tag[2:]

    def end_of_chunk(prev_tag, tag, prev_type, type_):
        end = False
        if prev_tag == "B" and tag == "B":
            end = True
        if prev_tag == "B" and tag == "O":
            end = True
        if prev_tag == "I" and tag == "B":
            end = True
        if prev_tag == "I" and tag == "O":
            end = True
        if prev_tag != "O" and prev_type != type_:
            end = True
        return end

    def start_of_chunk(prev_tag, tag, prev_type, type_):
        start = False
        if prev_tag == "B" and tag == "B":
            start = True
        if prev_tag == "I" and tag == "B":
            start = True
        if prev_tag == "O" and tag == "B":
            start = True
        if prev_tag == "O" and tag == "I":
            start = True
        if tag != "O" and prev_type != type_:
            start = True
        return start

    chunks = []
    prev_tag, prev_type = "O", ""
    open_start = None
    for i, t in enumerate(list(tags) + ["O"]):
        tag, type_ = split(t)
        if open_start is not None and end_of_chunk(prev_tag, tag, prev_type, type_):
            chunks.append((open_start, i, prev_type))
            open_start = None
        if start_of_chunk(prev_tag, tag, prev_type, type_):
            open_start = i
        prev_tag, prev_type = tag, type_
    return chunks


def brute_force_crf(E, T):
    """All label paths with their scores: list of (path, score)."""
    n, k = E.shape
    out = []
    for path in itertools.product(range(k), repeat=n):
        s = sum(E[i, y] for i, y in enumerate(path))
        s += sum(T[a, b] for a, b in zip(path, path[1:]))
        out.append((path, s))
    return out


def brute_log_partition(E, T):
    scores = np.array([s for _, s in brute_force_crf(E, T)])
    m = scores.max()
    return m + math.log(np.exp(scores - m).sum())


def central_differences(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def rank_sum_exact_p(a, b):
    """Two-sided exact p of the rank sum of ``a`` by enumerating rank subsets."""
    pooled = sorted(list(a) + list(b))
    rank = {v: i + 1 for i, v in enumerate(pooled)}
    w = sum(rank[v] for v in a)
    n, k = len(pooled), len(a)
    le = ge = total = 0
    for combo in itertools.combinations(range(1, n + 1), k):
        s = sum(combo)
        total += 1
        le += s <= w
        ge += s >= w
    return w, min(1.0, 2 * min(le, ge) / total)


def kappa_from_confusion(confusion):
    c = np.asarray(confusion, dtype=float)
    n = c.sum()
    p_o = np.trace(c) / n
    p_e = (c.sum(axis=0) * c.sum(axis=1)).sum() / n ** 2
    return (p_o - p_e) / (1 - p_e)


def viterbi_reference(E, T):
    """Best path by enumeration; ties go to the path smallest when read from the end.

    That is the path a backpointer rule preferring lower label indices selects.
    """
    paths = brute_force_crf(E, T)
    best = max(s for _, s in paths)
    winners = [p for p, s in paths if s == best]
    return list(min(winners, key=lambda p: p[::-1])), best
