"""Linear-chain CRF over the five BIO borrowing tags.

Scores are emission weights (attribute x label) summed over the active
attributes of each position plus a label-pair transition weight between
neighbouring positions. There is no start or stop transition. Inference is
done in log space; training minimizes the negative log-likelihood with an
elastic-net penalty through :func:`lexborrow.optimize.minimize`.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import TAGS, Dataset
from .features import (
    AttributeVocabulary,
    EmbeddingTable,
    FeatureConfig,
    SparseFeatures,
    vectorize,
)
from .optimize import DivergenceError, minimize

LABELS = TAGS
N_LABELS = len(LABELS)
LABEL_INDEX = {t: i for i, t in enumerate(LABELS)}

MAGIC = b"COALAS-CRF\n"
FORMAT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class CrfModel:
    emission: np.ndarray  # (n_attributes, n_labels)
    transition: np.ndarray  # (n_labels, n_labels), [previous, current]
    vocabulary: AttributeVocabulary
    config: FeatureConfig = field(default_factory=FeatureConfig)
    labels: tuple[str, ...] = LABELS
    embedding_fingerprint: str | None = None

    def __post_init__(self):
        self.emission = np.asarray(self.emission, dtype=np.float64)
        self.transition = np.asarray(self.transition, dtype=np.float64)
        k = len(self.labels)
        if self.emission.shape != (len(self.vocabulary), k):
            raise ValueError(f"emission shape {self.emission.shape} does not match "
                             f"({len(self.vocabulary)}, {k})")
        if self.transition.shape != (k, k):
            raise ValueError("transition shape does not match label set")
        self.vocabulary.freeze()

    @classmethod
    def zeros(cls, vocabulary: AttributeVocabulary, config: FeatureConfig = FeatureConfig(),
              **kw) -> "CrfModel":
        return cls(np.zeros((len(vocabulary), N_LABELS)), np.zeros((N_LABELS, N_LABELS)),
                   vocabulary, config, **kw)

    @property
    def n_weights(self) -> int:
        return self.emission.size + self.transition.size

    def flat_weights(self) -> np.ndarray:
        return np.concatenate([self.emission.ravel(), self.transition.ravel()])

    def with_weights(self, w: np.ndarray) -> "CrfModel":
        n = self.emission.size
        return CrfModel(w[:n].reshape(self.emission.shape), w[n:].reshape(self.transition.shape),
                        self.vocabulary, self.config, self.labels, self.embedding_fingerprint)

    @property
    def active_features(self) -> int:
        return int(np.count_nonzero(self.emission) + np.count_nonzero(self.transition))


def features_from_lists(positions: Sequence[Sequence]) -> SparseFeatures:
    """Build features for one sentence from per-position lists.

    Each element is an attribute index or an ``(index, value)`` pair.
    """
    indptr, indices, values = [0], [], []
    for pos in positions:
        for item in pos:
            idx, val = (item, 1.0) if np.isscalar(item) else item
            indices.append(int(idx))
            values.append(float(val))
        indptr.append(len(indices))
    return SparseFeatures(np.asarray(indptr, dtype=np.int64), np.asarray(indices, dtype=np.int64),
                          np.asarray(values, dtype=np.float64), np.asarray([len(positions)]))


def emission_scores(model: CrfModel, features: SparseFeatures) -> np.ndarray:
    """Per-position label scores, shape ``(positions, labels)``."""
    return np.asarray(features.matrix(model.emission.shape[0]) @ model.emission)


def _score_path(E: np.ndarray, T: np.ndarray, y: Sequence[int]) -> float:
    total = 0.0
    prev = None
    for i, label in enumerate(y):
        total += E[i, label]
        if prev is not None:
            total += T[prev, label]
        prev = label
    return float(total)


def _label_ids(tags: Sequence) -> list[int]:
    return [LABEL_INDEX[t] if isinstance(t, str) else int(t) for t in tags]


def sequence_score(model: CrfModel, features: SparseFeatures, tags: Sequence) -> float:
    if features.n_positions != len(tags):
        raise ValueError(f"{features.n_positions} positions but {len(tags)} tags")
    if not len(tags):
        raise ValueError("empty sequence")
    return _score_path(emission_scores(model, features), model.transition, _label_ids(tags))


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = a.max(axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return np.log(np.exp(a - m).sum(axis=axis)) + np.squeeze(m, axis=axis)


def forward_backward_batch(E: np.ndarray, lengths: np.ndarray, T: np.ndarray,
                           pairwise: bool = False):
    """Log-space forward-backward over a padded batch.

    ``E`` has shape ``(batch, max_len, labels)``; entries past each sequence's
    length are ignored. Returns ``(log_partition, marginals, pair)`` where
    ``pair`` is the per-edge pairwise marginal tensor ``(batch, max_len-1, K, K)``
    when ``pairwise`` is set, and otherwise the pairwise marginals summed over
    all edges of the batch, shape ``(K, K)``.
    """
    B, L, K = E.shape
    steps = np.arange(L)
    valid = steps[None, :] < lengths[:, None]  # (B, L)
    alpha = np.empty_like(E)
    alpha[:, 0] = E[:, 0]
    for t in range(1, L):
        nxt = _logsumexp(alpha[:, t - 1, :, None] + T[None], axis=1) + E[:, t]
        alpha[:, t] = np.where(valid[:, t, None], nxt, alpha[:, t - 1])
    beta = np.zeros_like(E)
    for t in range(L - 2, -1, -1):
        nxt = _logsumexp(T[None] + (E[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
        beta[:, t] = np.where(valid[:, t + 1, None], nxt, 0.0)
    last = alpha[np.arange(B), lengths - 1]
    log_z = _logsumexp(last, axis=1)
    marg = np.exp(alpha + beta - log_z[:, None, None])
    marg[~valid] = 0.0
    if L > 1:
        edge = (alpha[:, :-1, :, None] + T[None, None] + (E[:, 1:] + beta[:, 1:])[:, :, None, :]
                - log_z[:, None, None, None])
        p = np.exp(edge)
        p[~valid[:, 1:]] = 0.0
    else:
        p = np.zeros((B, 0, K, K))
    if pairwise:
        return log_z, marg, p
    return log_z, marg, p.sum(axis=(0, 1))


def forward_backward(model: CrfModel, features: SparseFeatures):
    """``(log_partition, marginals (n, K), pairwise marginals (n-1, K, K))``."""
    E = emission_scores(model, features)
    if len(E) == 0:
        raise ValueError("empty sequence")
    log_z, marg, pair = forward_backward_batch(E[None], np.array([len(E)]), model.transition,
                                               pairwise=True)
    return float(log_z[0]), marg[0], pair[0]


def _viterbi_ids(E: np.ndarray, T: np.ndarray) -> list[int]:
    n = len(E)
    delta = E[0].copy()
    back = np.zeros((n, E.shape[1]), dtype=np.int64)
    for t in range(1, n):
        cand = delta[:, None] + T
        back[t] = np.argmax(cand, axis=0)  # first maximum: lowest label index wins ties
        delta = cand[back[t], np.arange(E.shape[1])] + E[t]
    y = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        y.append(int(back[t, y[-1]]))
    return y[::-1]


def viterbi(model: CrfModel, features: SparseFeatures) -> tuple[list[str], float]:
    E = emission_scores(model, features)
    if len(E) == 0:
        raise ValueError("empty sequence")
    y = _viterbi_ids(E, model.transition)
    return [model.labels[i] for i in y], _score_path(E, model.transition, y)


class _Batches:
    """Training sequences grouped by length into padded gather indices."""

    def __init__(self, features: SparseFeatures, gold: np.ndarray, n_attributes: int,
                 bucket_size: int = 256):
        self.X = features.matrix(n_attributes)
        self.n_positions = features.n_positions
        self.gold = gold
        lengths = features.lengths
        starts = np.concatenate([[0], np.cumsum(lengths)[:-1]])
        order = np.argsort(lengths, kind="stable")
        order = order[lengths[order] > 0]
        self.buckets = []
        for b in range(0, len(order), bucket_size):
            sel = order[b:b + bucket_size]
            lens = lengths[sel]
            L = int(lens.max())
            idx = np.full((len(sel), L), self.n_positions, dtype=np.int64)
            for r, (s, n) in enumerate(zip(starts[sel], lens)):
                idx[r, :n] = np.arange(s, s + n)
            self.buckets.append((idx, lens))
        trans = np.zeros((N_LABELS, N_LABELS))
        for s, n in zip(starts, lengths):
            if n > 1:
                np.add.at(trans, (gold[s:s + n - 1], gold[s + 1:s + n]), 1.0)
        self.gold_transitions = trans
        onehot = np.zeros((self.n_positions, N_LABELS))
        onehot[np.arange(self.n_positions), gold] = 1.0
        self.gold_onehot = onehot
        self.XT = self.X.T.tocsr()


def _objective(batches: _Batches, n_attributes: int, w: np.ndarray, c2: float):
    n_em = n_attributes * N_LABELS
    W = w[:n_em].reshape(n_attributes, N_LABELS)
    T = w[n_em:].reshape(N_LABELS, N_LABELS)
    E = np.asarray(batches.X @ W)
    E_pad = np.vstack([E, np.zeros((1, N_LABELS))])
    expected = np.zeros((batches.n_positions + 1, N_LABELS))
    pair_total = np.zeros((N_LABELS, N_LABELS))
    log_z_total = 0.0
    for idx, lens in batches.buckets:
        log_z, marg, pair = forward_backward_batch(E_pad[idx], lens, T)
        log_z_total += log_z.sum()
        pair_total += pair
        mask = idx < batches.n_positions
        expected[idx[mask]] = marg[mask]
    expected = expected[:-1]
    gold_score = E[np.arange(batches.n_positions), batches.gold].sum() + (
        T * batches.gold_transitions).sum()
    nll = log_z_total - gold_score
    grad_W = np.asarray(batches.XT @ (expected - batches.gold_onehot))
    grad_T = pair_total - batches.gold_transitions
    grad = np.concatenate([grad_W.ravel(), grad_T.ravel()])
    return nll + c2 * w.dot(w), grad + 2.0 * c2 * w


def _prepare(data: Sequence[tuple[SparseFeatures, Sequence]]) -> tuple[SparseFeatures, np.ndarray]:
    indptr, indices, values, lengths, gold = [np.zeros(1, dtype=np.int64)], [], [], [], []
    offset = 0
    for feats, tags in data:
        if feats.n_positions != len(tags):
            raise ValueError("features and tags differ in length")
        indptr.append(feats.indptr[1:] + offset)
        offset += feats.indptr[-1]
        indices.append(feats.indices)
        values.append(feats.values)
        lengths.append(feats.n_positions)
        gold.extend(_label_ids(tags))
    merged = SparseFeatures(np.concatenate(indptr), np.concatenate(indices or [np.zeros(0, int)]),
                            np.concatenate(values or [np.zeros(0)]), np.asarray(lengths))
    return merged, np.asarray(gold, dtype=np.int64)


def objective_and_gradient(model: CrfModel, data: Sequence[tuple[SparseFeatures, Sequence]],
                           c2: float = 0.0) -> tuple[float, np.ndarray]:
    """Negative log-likelihood plus ``c2 * ||w||^2`` and its gradient.

    The gradient is flat, emission weights first (row-major) then transitions;
    :meth:`CrfModel.with_weights` reverses the layout.
    """
    if not data:
        raise ValueError("no training sequences")
    merged, gold = _prepare(data)
    n_attr = model.emission.shape[0]
    return _objective(_Batches(merged, gold, n_attr), n_attr, model.flat_weights(), c2)


@dataclass(frozen=True)
class TrainConfig:
    c1: float = 0.05
    c2: float = 0.01
    max_iterations: int = 200
    tolerance: float = 1e-5
    lbfgs_memory: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.c1 < 0 or self.c2 < 0:
            raise ValueError("regularization coefficients must be non-negative")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


@dataclass
class TrainReport:
    iterations: int
    objective_trace: list[float]
    converged: bool
    active_features: int
    message: str = ""
    n_attributes: int = 0


def train(dataset: Dataset, feature_config: FeatureConfig = FeatureConfig(),
          train_config: TrainConfig = TrainConfig(),
          embeddings: EmbeddingTable | None = None) -> tuple[CrfModel, TrainReport]:
    sentences = [s for s in dataset if len(s)]
    if not sentences:
        raise ValueError("cannot train on an empty dataset")
    vocab = AttributeVocabulary()
    feats = vectorize(sentences, vocab, feature_config, embeddings, grow=True)
    vocab.freeze()
    gold = np.asarray([LABEL_INDEX[t] for s in sentences for t in s.tags], dtype=np.int64)
    n_attr = len(vocab)
    batches = _Batches(feats, gold, n_attr)
    w0 = np.zeros(n_attr * N_LABELS + N_LABELS * N_LABELS)
    try:
        result = minimize(
            lambda w: _objective(batches, n_attr, w, train_config.c2),
            w0,
            c1=train_config.c1,
            memory=train_config.lbfgs_memory,
            max_iterations=train_config.max_iterations,
            tolerance=train_config.tolerance,
        )
    except DivergenceError as exc:
        raise TrainingError(str(exc)) from exc
    model = CrfModel.zeros(vocab, feature_config,
                           embedding_fingerprint=embeddings.fingerprint() if embeddings else None)
    model = model.with_weights(result.x)
    report = TrainReport(result.iterations, result.trace, result.converged,
                         model.active_features, result.message, n_attr)
    return model, report


def tag(model: CrfModel, sentences: Sequence, embeddings: EmbeddingTable | None = None
        ) -> list[list[str]]:
    """Viterbi tags for sentences given as token lists or labeled sentences.

    Features come from the model's stored config; attributes unseen in
    training are ignored. Empty sentences give empty tag lists.
    """
    from .corpus import LabeledSentence

    if model.embedding_fingerprint is not None and embeddings is not None:
        if embeddings.fingerprint() != model.embedding_fingerprint:
            raise ValueError("embedding table differs from the one used in training")
    out = []
    for sent in sentences:
        if not hasattr(sent, "tokens"):
            sent = LabeledSentence(list(sent), ["O"] * len(sent))
        if not len(sent):
            out.append([])
            continue
        feats = vectorize([sent], model.vocabulary, model.config, embeddings)
        out.append(viterbi(model, feats)[0])
    return out


def tag_dataset(model: CrfModel, dataset: Dataset, embeddings=None) -> Dataset:
    from .corpus import with_tags

    return with_tags(dataset, tag(model, list(dataset), embeddings), dataset.name)


# Model file layout (all integers ASCII decimal, newline-terminated):
#   COALAS-CRF
#   <format version>
#   <header length>                      JSON header, UTF-8
#   <header bytes>
#   <payload length>
#   <payload bytes>                      little-endian: int64[nnz] emission flat indices,
#                                        float64[nnz] emission values, float64[K*K] transitions
#   <sha256 hex of header bytes + payload bytes>


def save_model(model: CrfModel, stream) -> None:
    if not (np.isfinite(model.emission).all() and np.isfinite(model.transition).all()):
        raise ValueError("cannot save a model with non-finite weights")
    flat = model.emission.ravel()
    nz = np.flatnonzero(flat)
    header = json.dumps({
        "labels": list(model.labels),
        "config": model.config.to_dict(),
        "vocabulary": model.vocabulary.names(),
        "n_attributes": len(model.vocabulary),
        "nnz": int(len(nz)),
        "embedding_fingerprint": model.embedding_fingerprint,
    }, ensure_ascii=False).encode("utf-8")
    payload = (nz.astype("<i8").tobytes() + flat[nz].astype("<f8").tobytes()
               + model.transition.astype("<f8").tobytes())
    digest = hashlib.sha256(header + payload).hexdigest()
    stream.write(MAGIC)
    stream.write(f"{FORMAT_VERSION}\n{len(header)}\n".encode())
    stream.write(header)
    stream.write(f"{len(payload)}\n".encode())
    stream.write(payload)
    stream.write(f"{digest}\n".encode())


def _read_int_line(stream, what: str) -> int:
    line = stream.readline()
    if not line.endswith(b"\n"):
        raise ModelFormatError(f"truncated model file while reading {what}")
    try:
        return int(line)
    except ValueError:
        raise ModelFormatError(f"malformed {what}") from None


def _read_exact(stream, n: int, what: str) -> bytes:
    data = stream.read(n)
    if len(data) != n:
        raise ModelFormatError(f"truncated model file while reading {what}")
    return data


def load_model(stream) -> CrfModel:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    if stream.read(len(MAGIC)) != MAGIC:
        raise ModelFormatError("not a COALAS-CRF model file")
    version = _read_int_line(stream, "version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported version {version}")
    header = _read_exact(stream, _read_int_line(stream, "header length"), "header")
    payload = _read_exact(stream, _read_int_line(stream, "payload length"), "payload")
    line = stream.readline()
    digest = line.strip().decode("ascii", "replace")
    if not line.endswith(b"\n") or not digest:
        raise ModelFormatError("truncated model file while reading checksum")
    if digest != hashlib.sha256(header + payload).hexdigest():
        raise ModelFormatError("checksum failure")
    meta = json.loads(header.decode("utf-8"))
    labels = tuple(meta["labels"])
    k = len(labels)
    n_attr, nnz = meta["n_attributes"], meta["nnz"]
    if len(payload) != 16 * nnz + 8 * k * k:
        raise ModelFormatError("payload size does not match header")
    nz = np.frombuffer(payload, dtype="<i8", count=nnz)
    vals = np.frombuffer(payload, dtype="<f8", count=nnz, offset=8 * nnz)
    trans = np.frombuffer(payload, dtype="<f8", count=k * k, offset=16 * nnz).reshape(k, k)
    emission = np.zeros(n_attr * k)
    emission[nz] = vals
    return CrfModel(emission.reshape(n_attr, k), trans.copy(),
                    AttributeVocabulary(meta["vocabulary"]), FeatureConfig.from_dict(meta["config"]),
                    labels, meta.get("embedding_fingerprint"))


def save_model_file(model: CrfModel, path) -> None:
    with open(path, "wb") as f:
        save_model(model, f)


def load_model_file(path) -> CrfModel:
    with open(path, "rb") as f:
        return load_model(f)

