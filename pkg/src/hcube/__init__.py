"""Cross-modal binary hashing over precomputed embeddings.

Two small heads map text and observation embeddings into a shared Hamming
space; retrieval then runs over packed codes with popcount distances.
"""

from .errors import (
    BadMagic,
    BitsMismatch,
    BitsNotWordAligned,
    DataError,
    DimensionMismatch,
    FactorizationFailure,
    FileFormatError,
    HcubeError,
    InvalidValue,
    LengthMismatch,
    MissingTextForLabel,
    NonFiniteEntry,
    NonFiniteLoss,
    NumericError,
    ShapeMismatch,
    TruncatedPayload,
    UnsupportedVersion,
    UsageError,
)
from .bench import BenchReport, run_bench
from .evaluation import (
    CategoryScore,
    EvalReport,
    average_precision,
    comparison_table,
    evaluate_binary,
    evaluate_cosine,
    map_at_k,
)
from .heads import binarize, encode, forward, init_head, load_head, save_head, sigmoid, squash
from .index import (
    PackedCodeIndex,
    SearchResult,
    batch_search,
    cosine_search,
    hamming,
    pack_codes,
    read_index,
    search,
    unpack_codes,
    write_index,
)
from .objective import LossReport, align_loss, bce, coding_rate, div_loss, total_loss_and_grads
from .storage import (
    SynthConfig,
    atomic_write,
    generate_synthetic,
    read_embeddings,
    write_embeddings,
)
from .trainer import EpochStats, TrainLog, initial_heads, make_batches, train, write_train_log
from .types import (
    CodeBatch,
    EmbeddingSet,
    HashHead,
    LogitBatch,
    PairedBatch,
    ProbBatch,
    TrainConfig,
    validate,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagic",
    "BenchReport",
    "BitsMismatch",
    "BitsNotWordAligned",
    "CategoryScore",
    "CodeBatch",
    "DataError",
    "DimensionMismatch",
    "EmbeddingSet",
    "EpochStats",
    "EvalReport",
    "FactorizationFailure",
    "FileFormatError",
    "HashHead",
    "HcubeError",
    "InvalidValue",
    "LengthMismatch",
    "LogitBatch",
    "LossReport",
    "MissingTextForLabel",
    "NonFiniteEntry",
    "NonFiniteLoss",
    "NumericError",
    "PackedCodeIndex",
    "PairedBatch",
    "ProbBatch",
    "SearchResult",
    "ShapeMismatch",
    "SynthConfig",
    "TrainConfig",
    "TrainLog",
    "TruncatedPayload",
    "UnsupportedVersion",
    "UsageError",
    "align_loss",
    "atomic_write",
    "average_precision",
    "batch_search",
    "bce",
    "binarize",
    "coding_rate",
    "comparison_table",
    "cosine_search",
    "div_loss",
    "encode",
    "evaluate_binary",
    "evaluate_cosine",
    "forward",
    "generate_synthetic",
    "hamming",
    "init_head",
    "initial_heads",
    "load_head",
    "make_batches",
    "map_at_k",
    "pack_codes",
    "read_embeddings",
    "read_index",
    "run_bench",
    "save_head",
    "search",
    "sigmoid",
    "squash",
    "total_loss_and_grads",
    "train",
    "unpack_codes",
    "validate",
    "write_embeddings",
    "write_index",
    "write_train_log",
]
