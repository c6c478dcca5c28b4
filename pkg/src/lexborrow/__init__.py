"""Detection of unassimilated lexical borrowings in Spanish text."""

from .bio import RepairMode, Span, decode_tags, encode_spans, repair
from .corpus import (
    TAGS,
    BorrowingType,
    ColumnSchema,
    Dataset,
    LabeledSentence,
    corpus_stats,
    load_conll,
    read_conll,
    validate,
    write_conll,
)
from .crf import CrfModel, TrainConfig, load_model, save_model, tag, train
from .evaluation import aggregate_runs, cohens_kappa, evaluate, prf, wilcoxon_rank_sum
from .features import FeatureConfig, load_embeddings

__version__ = "0.1.0"

__all__ = [
    "RepairMode",
    "Span",
    "decode_tags",
    "encode_spans",
    "repair",
    "TAGS",
    "BorrowingType",
    "ColumnSchema",
    "Dataset",
    "LabeledSentence",
    "corpus_stats",
    "load_conll",
    "read_conll",
    "validate",
    "write_conll",
    "CrfModel",
    "TrainConfig",
    "load_model",
    "save_model",
    "tag",
    "train",
    "aggregate_runs",
    "cohens_kappa",
    "evaluate",
    "prf",
    "wilcoxon_rank_sum",
    "FeatureConfig",
    "load_embeddings",
]
