"""Bit-exact file formats for embeddings plus a synthetic paired-set generator.

HCEM layout (all integers little-endian):

    offset 0   magic "HCEM"
    offset 4   version            u32
    offset 8   count              u64
    offset 16  dim                u32
    offset 20  modality tag       u8   (0 = text, 1 = observation)
    offset 21  labels offset      u64
    offset 29  categories offset  u64
    offset 37  name table offset  u64
    offset 45  payload: count*dim float32, row-major

The labels/categories regions hold count u32 values each. The name table
holds two length-prefixed string lists (label names, then category names);
a zero-length list means "no names recorded".
"""

from __future__ import annotations

import contextlib
import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    InvalidValue,
    NonFiniteEntry,
    TruncatedPayload,
    UnsupportedVersion,
)
from .types import EmbeddingSet, validate

EMBED_MAGIC = b"HCEM"
EMBED_VERSION = 1
_HEADER = struct.Struct("<4sIQIBQQQ")

_MODALITY_TAGS = {"text": 0, "observation": 1}
_TAG_MODALITIES = {v: k for k, v in _MODALITY_TAGS.items()}


@contextlib.contextmanager
def atomic_write(path):
    """Write to a sibling temp file and rename into place on success, so a
    failed run never leaves a partial output behind."""
    path = os.fspath(path)
    tmp = f"{path}.tmp.{os.getpid()}"
    f = open(tmp, "wb")
    try:
        yield f
        f.close()
        os.replace(tmp, path)
    except BaseException:
        f.close()
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


def _u32_column(arr: np.ndarray, name: str) -> bytes:
    if arr.size and (arr.min() < 0 or arr.max() >= 2**32):
        raise InvalidValue(f"{name} values must fit in u32 to be written")
    return np.ascontiguousarray(arr, dtype="<u4").tobytes()


def _pack_names(names) -> bytes:
    names = names or ()
    parts = [struct.pack("<I", len(names))]
    for name in names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
    return b"".join(parts)


def write_embeddings(es: EmbeddingSet, path) -> None:
    """Serialize an embedding set to HCEM; floats are stored at 32-bit
    precision."""
    validate(es)
    payload = np.ascontiguousarray(es.rows, dtype="<f4").tobytes()
    labels = _u32_column(es.labels, "labels")
    categories = _u32_column(es.categories, "categories")
    names = _pack_names(es.label_names) + _pack_names(es.category_names)
    labels_off = _HEADER.size + len(payload)
    categories_off = labels_off + len(labels)
    names_off = categories_off + len(categories)
    header = _HEADER.pack(
        EMBED_MAGIC,
        EMBED_VERSION,
        es.count,
        es.dim,
        _MODALITY_TAGS[es.modality],
        labels_off,
        categories_off,
        names_off,
    )
    with atomic_write(path) as f:
        f.write(header)
        f.write(payload)
        f.write(labels)
        f.write(categories)
        f.write(names)


def _read_names(blob: bytes, offset: int) -> tuple[tuple[str, ...], int]:
    if offset + 4 > len(blob):
        raise TruncatedPayload("name table count incomplete", offset=offset)
    (n,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    names = []
    for _ in range(n):
        if offset + 4 > len(blob):
            raise TruncatedPayload("name length incomplete", offset=offset)
        (ln,) = struct.unpack_from("<I", blob, offset)
        offset += 4
        if offset + ln > len(blob):
            raise TruncatedPayload("name bytes incomplete", offset=offset)
        names.append(blob[offset : offset + ln].decode("utf-8"))
        offset += ln
    return tuple(names), offset


def read_embeddings(path) -> EmbeddingSet:
    """Parse an HCEM file; rejects malformed input rather than truncating,
    and reports the byte offset of any structural problem."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != EMBED_MAGIC:
        raise BadMagic(f"expected {EMBED_MAGIC!r}, found {blob[:4]!r}", offset=0)
    if len(blob) < _HEADER.size:
        raise TruncatedPayload("header incomplete", offset=len(blob))
    (_, version, count, dim, tag, labels_off, categories_off, names_off) = _HEADER.unpack_from(blob, 0)
    if version != EMBED_VERSION:
        raise UnsupportedVersion(f"version {version} not supported", offset=4)
    if tag not in _TAG_MODALITIES:
        raise InvalidValue(f"unknown modality tag {tag} at byte offset 20")
    payload_end = _HEADER.size + count * dim * 4
    if payload_end > len(blob) or payload_end > labels_off:
        raise TruncatedPayload(
            f"payload needs {count * dim * 4} bytes", offset=min(len(blob), labels_off)
        )
    rows = (
        np.frombuffer(blob, dtype="<f4", count=count * dim, offset=_HEADER.size)
        .astype(np.float64)
        .reshape(count, dim)
    )
    for name, off in (("labels", labels_off), ("categories", categories_off)):
        if off + count * 4 > len(blob):
            raise TruncatedPayload(f"{name} table incomplete", offset=off)
    labels = np.frombuffer(blob, dtype="<u4", count=count, offset=labels_off).astype(np.int64)
    categories = np.frombuffer(blob, dtype="<u4", count=count, offset=categories_off).astype(np.int64)
    label_names, after = _read_names(blob, names_off)
    category_names, _ = _read_names(blob, after)
    finite = np.isfinite(rows)
    if not finite.all():
        i, j = np.argwhere(~finite)[0]
        raise NonFiniteEntry(
            f"rows[{i},{j}] is not finite (byte offset {_HEADER.size + (i * dim + j) * 4})"
        )
    es = EmbeddingSet(
        rows=rows,
        labels=labels,
        categories=categories,
        modality=_TAG_MODALITIES[tag],
        label_names=label_names or None,
        category_names=category_names or None,
    )
    validate(es)
    return es


@dataclass(frozen=True)
class SynthConfig:
    """Synthetic paired-embedding benchmark: class means sampled uniformly on
    the unit sphere, observation items spread around them by ``noise``.

    The observation means are a blend between the text means and a fixed
    random rotation of them (``cross_rotation`` in [0, 1]), so the two
    modalities live in related but non-identical spaces and the hashing
    heads have a real alignment to learn. At 0 the spaces coincide; at 1
    they are related only by the rotation and raw cross-modal cosine
    similarity carries no signal.
    """

    n_classes: int = 32
    items_per_class: int = 50
    dim_text: int = 64
    dim_obs: int = 64
    noise: float = 0.1
    seed: int = 0
    n_categories: int = 4
    cross_rotation: float = 0.35

    def __post_init__(self):
        if self.n_classes < 2:
            raise InvalidValue(f"n_classes must be >= 2, got {self.n_classes}")
        if self.noise <= 0:
            raise InvalidValue(f"noise must be > 0, got {self.noise}")
        if self.items_per_class < 1:
            raise InvalidValue("items_per_class must be >= 1")
        if min(self.dim_text, self.dim_obs) < 2:
            raise InvalidValue("feature dimensions must be >= 2")
        if not 1 <= self.n_categories <= self.n_classes:
            raise InvalidValue("n_categories must be in [1, n_classes]")
        if not 0.0 <= self.cross_rotation <= 1.0:
            raise InvalidValue("cross_rotation must be in [0, 1]")


def _unit_rows(m: np.ndarray) -> np.ndarray:
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _random_semi_orthogonal(rng, rows: int, cols: int) -> np.ndarray:
    g = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, _ = np.linalg.qr(g)
    return q if rows >= cols else q.T


def _f32_round(m: np.ndarray) -> np.ndarray:
    # quantize to float32 precision so disk round-trips are exact
    return m.astype(np.float32).astype(np.float64)


def generate_synthetic(cfg: SynthConfig) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Deterministically generate a (text, observation) pair of embedding sets.

    Text has one item per class (the "species name" embedding, the class mean
    itself); observations carry ``items_per_class`` noisy samples per class.
    """
    rng = np.random.default_rng(cfg.seed)
    text_means = _unit_rows(rng.standard_normal((cfg.n_classes, cfg.dim_text)))
    base = np.eye(cfg.dim_obs, cfg.dim_text)
    rot = _random_semi_orthogonal(rng, cfg.dim_obs, cfg.dim_text)
    cross = (1.0 - cfg.cross_rotation) * base + cfg.cross_rotation * rot
    obs_means = _unit_rows(text_means @ cross.T)

    labels = np.arange(cfg.n_classes, dtype=np.int64)
    categories = labels % cfg.n_categories
    label_names = tuple(f"species-{c:03d}" for c in range(cfg.n_classes))
    category_names = tuple(f"group-{c}" for c in range(cfg.n_categories))

    text = EmbeddingSet(
        rows=_f32_round(text_means),
        labels=labels,
        categories=categories,
        modality="text",
        label_names=label_names,
        category_names=category_names,
    )

    obs_labels = np.repeat(labels, cfg.items_per_class)
    spread = rng.standard_normal((obs_labels.size, cfg.dim_obs)) * cfg.noise
    obs_rows = obs_means[obs_labels] + spread
    obs = EmbeddingSet(
        rows=_f32_round(obs_rows),
        labels=obs_labels,
        categories=obs_labels % cfg.n_categories,
        modality="observation",
        label_names=label_names,
        category_names=category_names,
    )
    return text, obs
