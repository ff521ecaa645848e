"""Core value types shared across the training and retrieval pipeline.

Everything here is immutable after construction: arrays are converted to a
canonical dtype and marked read-only, so instances can be shared freely
across threads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidValue,
    LengthMismatch,
    NonFiniteEntry,
)

MODALITIES = ("text", "observation")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable:
        # copy before locking so a caller's buffer is never mutated
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


def _set(obj, **fields):
    # frozen dataclasses need object.__setattr__ for normalization
    for name, value in fields.items():
        object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class EmbeddingSet:
    """Precomputed encoder outputs: one feature row per item.

    ``rows`` holds the dense features, ``labels`` the per-item class id
    (species) and ``categories`` the per-item supercategory id used for
    split evaluation. ``modality`` tags the set as the query side ("text")
    or the database side ("observation").
    """

    rows: np.ndarray
    labels: np.ndarray
    categories: np.ndarray
    modality: str
    label_names: tuple[str, ...] | None = None
    category_names: tuple[str, ...] | None = None

    def __post_init__(self):
        _set(
            self,
            rows=_freeze(np.asarray(self.rows, dtype=np.float64)),
            labels=_freeze(np.asarray(self.labels, dtype=np.int64)),
            categories=_freeze(np.asarray(self.categories, dtype=np.int64)),
            label_names=tuple(self.label_names) if self.label_names is not None else None,
            category_names=tuple(self.category_names) if self.category_names is not None else None,
        )

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1] if self.rows.ndim == 2 else 0


def validate(es: EmbeddingSet) -> None:
    """Check every EmbeddingSet invariant; raise a structured error on the
    first violation, naming the offending field and index."""
    if es.rows.ndim != 2:
        raise DimensionMismatch(f"rows must be 2-D, got {es.rows.ndim}-D")
    if es.modality not in MODALITIES:
        raise InvalidValue(f"modality must be one of {MODALITIES}, got {es.modality!r}")
    finite = np.isfinite(es.rows)
    if not finite.all():
        i, j = np.argwhere(~finite)[0]
        raise NonFiniteEntry(f"rows[{i},{j}] = {es.rows[i, j]!r} is not finite")
    for name in ("labels", "categories"):
        arr = getattr(es, name)
        if arr.ndim != 1 or arr.shape[0] != es.count:
            raise LengthMismatch(
                f"{name} has length {arr.shape[0] if arr.ndim == 1 else arr.shape}, "
                f"expected {es.count}"
            )


@dataclass(frozen=True)
class PairedBatch:
    """A minibatch of label-paired rows: row i of ``text_feats`` and
    ``obs_feats`` describe the same class."""

    text_feats: np.ndarray
    obs_feats: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        _set(
            self,
            text_feats=_freeze(np.asarray(self.text_feats, dtype=np.float64)),
            obs_feats=_freeze(np.asarray(self.obs_feats, dtype=np.float64)),
            labels=_freeze(np.asarray(self.labels, dtype=np.int64)),
        )
        if self.text_feats.ndim != 2 or self.obs_feats.ndim != 2:
            raise DimensionMismatch("paired batch features must be 2-D")
        b = self.text_feats.shape[0]
        if self.obs_feats.shape[0] != b or self.labels.shape[0] != b:
            raise LengthMismatch(
                f"batch rows disagree: text={b}, obs={self.obs_feats.shape[0]}, "
                f"labels={self.labels.shape[0]}"
            )
        if b < 2:
            raise InvalidValue(f"batch size must be >= 2, got {b}")

    @property
    def size(self) -> int:
        return self.text_feats.shape[0]


@dataclass(frozen=True)
class HashHead:
    """Parameters of a shallow projection network mapping ``dim`` features
    to ``bits`` logits.

    ``hidden == 0`` selects a single linear layer (``w1`` is dim x bits);
    otherwise the head is dim -> hidden -> bits with a smooth rectifier in
    between, and ``w2``/``b2`` hold the output layer.
    """

    dim: int
    bits: int
    hidden: int
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray | None = None
    b2: np.ndarray | None = None

    def __post_init__(self):
        _set(self, w1=_freeze(np.asarray(self.w1, dtype=np.float64)),
             b1=_freeze(np.asarray(self.b1, dtype=np.float64)))
        if self.w2 is not None:
            _set(self, w2=_freeze(np.asarray(self.w2, dtype=np.float64)),
                 b2=_freeze(np.asarray(self.b2, dtype=np.float64)))
        out1 = self.hidden if self.hidden > 0 else self.bits
        if self.w1.shape != (self.dim, out1) or self.b1.shape != (out1,):
            raise DimensionMismatch(
                f"layer 1 shapes {self.w1.shape}/{self.b1.shape} do not match "
                f"dim={self.dim}, out={out1}"
            )
        if self.hidden > 0:
            if self.w2 is None or self.b2 is None:
                raise DimensionMismatch("hidden > 0 requires an output layer (w2, b2)")
            if self.w2.shape != (self.hidden, self.bits) or self.b2.shape != (self.bits,):
                raise DimensionMismatch(
                    f"layer 2 shapes {self.w2.shape}/{self.b2.shape} do not match "
                    f"hidden={self.hidden}, bits={self.bits}"
                )
        elif self.w2 is not None or self.b2 is not None:
            raise DimensionMismatch("linear head (hidden == 0) must not carry w2/b2")
        for name, arr in self.params().items():
            if not np.isfinite(arr).all():
                raise NonFiniteEntry(f"head parameter {name} contains non-finite entries")

    def params(self) -> dict[str, np.ndarray]:
        out = {"w1": self.w1, "b1": self.b1}
        if self.hidden > 0:
            out["w2"] = self.w2
            out["b2"] = self.b2
        return out

    def with_params(self, params: dict[str, np.ndarray]) -> "HashHead":
        return dataclasses.replace(self, **params)


@dataclass(frozen=True)
class LogitBatch:
    """Pre-binarization head outputs, one row per batch item."""

    values: np.ndarray

    def __post_init__(self):
        _set(self, values=_freeze(np.asarray(self.values, dtype=np.float64)))
        if self.values.ndim != 2:
            raise DimensionMismatch("logits must be 2-D (batch x bits)")
        if not np.isfinite(self.values).all():
            raise NonFiniteEntry("logit batch contains non-finite entries")


@dataclass(frozen=True)
class ProbBatch:
    """Sigmoid-squashed logits; every entry lies in the closed unit interval."""

    values: np.ndarray

    def __post_init__(self):
        _set(self, values=_freeze(np.asarray(self.values, dtype=np.float64)))
        if self.values.ndim != 2:
            raise DimensionMismatch("probabilities must be 2-D (batch x bits)")
        if self.values.size and (self.values.min() < 0.0 or self.values.max() > 1.0):
            bad = np.argwhere((self.values < 0.0) | (self.values > 1.0))[0]
            raise InvalidValue(
                f"probability at {tuple(bad)} = {self.values[tuple(bad)]} outside [0, 1]"
            )


@dataclass(frozen=True)
class CodeBatch:
    """Unpacked binary codes used during training; entries are 0 or 1."""

    bits: int
    values: np.ndarray

    def __post_init__(self):
        _set(self, values=_freeze(np.asarray(self.values, dtype=np.uint8)))
        if self.values.ndim != 2 or self.values.shape[1] != self.bits:
            raise DimensionMismatch(
                f"codes shape {self.values.shape} does not match bits={self.bits}"
            )
        if self.values.size and self.values.max() > 1:
            raise InvalidValue("codes must contain only 0/1 entries")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of a hashing-head training run.

    ``bits`` may be any value >= 2 for training; packing into an index
    additionally requires a multiple of 64. ``lam`` weighs the diversity
    regularizer against the alignment term.
    """

    bits: int = 64
    lam: float = 1.0
    batch_size: int = 256
    learning_rate: float = 1e-3
    epochs: int = 50
    seed: int = 0
    hidden_width: int = 512

    def __post_init__(self):
        if self.bits < 2:
            raise InvalidValue(f"bits must be >= 2, got {self.bits}")
        if self.batch_size < 2:
            raise InvalidValue(f"batch_size must be >= 2, got {self.batch_size}")
        if self.lam < 0:
            raise InvalidValue(f"lambda must be >= 0, got {self.lam}")
        if self.learning_rate <= 0:
            raise InvalidValue(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise InvalidValue(f"epochs must be >= 0, got {self.epochs}")
        if self.hidden_width < 0:
            raise InvalidValue(f"hidden_width must be >= 0, got {self.hidden_width}")
