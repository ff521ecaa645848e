"""Packed binary code index with Hamming-distance search.

Codes are packed 64 bits per machine word: bit j of a code lands in word
j // 64 at bit position j % 64 (least significant bit first). Distances are
popcounts of XORed words, so a 256-bit code costs 32 bytes and one query
scans the whole index with four XORs plus popcounts per item.

Top-k results are deterministic under ties: equal distances are returned in
ascending index position, independent of batch partitioning or thread
schedule.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    BitsMismatch,
    BitsNotWordAligned,
    InvalidValue,
    LengthMismatch,
    TruncatedPayload,
    UnsupportedVersion,
)
from .types import CodeBatch, _freeze, _set

INDEX_MAGIC = b"HCBC"
INDEX_VERSION = 1
_INDEX_HEADER = struct.Struct("<4sIIQ")

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


def _popcount_swar(words: np.ndarray) -> np.ndarray:
    """Branch-free per-word popcount; used when numpy lacks bitwise_count."""
    x = words.astype(np.uint64, copy=True)
    x -= (x >> np.uint64(1)) & _M1
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return ((x * _H01) >> np.uint64(56)).astype(np.uint8)


if hasattr(np, "bitwise_count"):
    def popcount(words: np.ndarray) -> np.ndarray:
        """Set bits per uint64 word, as uint8 (a word holds at most 64)."""
        return np.bitwise_count(words)
else:  # pragma: no cover - exercised only on older numpy
    popcount = _popcount_swar


def _require_aligned(bits: int) -> int:
    if bits <= 0 or bits % 64 != 0:
        raise BitsNotWordAligned(f"bits must be a positive multiple of 64, got {bits}")
    return bits // 64


def pack_codes(codes: CodeBatch) -> np.ndarray:
    """Pack 0/1 codes into little-endian uint64 words, LSB-first within a word."""
    words_per_code = _require_aligned(codes.bits)
    packed = np.packbits(codes.values, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(-1, words_per_code)


def unpack_codes(words: np.ndarray, bits: int) -> CodeBatch:
    """Inverse of pack_codes."""
    words_per_code = _require_aligned(bits)
    words = np.ascontiguousarray(words, dtype=np.uint64)
    if words.ndim != 2 or words.shape[1] != words_per_code:
        raise BitsMismatch(
            f"words shape {words.shape} does not hold {bits}-bit codes"
        )
    as_bytes = words.view(np.uint8).reshape(words.shape[0], 8 * words_per_code)
    values = np.unpackbits(as_bytes, axis=1, bitorder="little")
    return CodeBatch(bits=bits, values=values.reshape(words.shape[0], bits))


def hamming(words: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Hamming distances between one packed query and every packed row."""
    q = np.asarray(query, dtype=np.uint64).reshape(-1)
    if words.shape[1] != q.shape[0]:
        raise BitsMismatch(
            f"query has {q.shape[0]} words, index rows have {words.shape[1]}"
        )
    counts = popcount(words ^ q)
    # unrolled column adds: numpy's axis-1 reduce is several times slower
    # on rows this short; u16 holds any sum up to 1024 words
    acc = counts[:, 0].astype(np.uint16)
    for j in range(1, counts.shape[1]):
        acc += counts[:, j]
    return acc.astype(np.int64)


@dataclass(frozen=True)
class PackedCodeIndex:
    """Immutable searchable collection of packed codes plus per-item metadata."""

    bits: int
    words: np.ndarray
    ids: np.ndarray
    labels: np.ndarray
    categories: np.ndarray

    def __post_init__(self):
        words_per_code = _require_aligned(self.bits)
        _set(
            self,
            words=_freeze(np.asarray(self.words, dtype=np.uint64)),
            ids=_freeze(np.asarray(self.ids, dtype=np.int64)),
            labels=_freeze(np.asarray(self.labels, dtype=np.int64)),
            categories=_freeze(np.asarray(self.categories, dtype=np.int64)),
        )
        if self.words.ndim != 2 or self.words.shape[1] != words_per_code:
            raise BitsMismatch(
                f"words shape {self.words.shape} does not hold {self.bits}-bit codes"
            )
        n = self.words.shape[0]
        for name in ("ids", "labels", "categories"):
            arr = getattr(self, name)
            if arr.ndim != 1 or arr.shape[0] != n:
                raise LengthMismatch(f"{name} has length {arr.shape}, expected {n}")

    @classmethod
    def from_codes(
        cls,
        codes: CodeBatch,
        labels: np.ndarray | None = None,
        categories: np.ndarray | None = None,
        ids: np.ndarray | None = None,
    ) -> "PackedCodeIndex":
        """Pack codes into an index; omitted metadata defaults to row
        positions for ids and all-zero labels/categories."""
        n = codes.values.shape[0]
        if ids is None:
            ids = np.arange(n, dtype=np.int64)
        if labels is None:
            labels = np.zeros(n, dtype=np.int64)
        if categories is None:
            categories = np.zeros(n, dtype=np.int64)
        return cls(
            bits=codes.bits,
            words=pack_codes(codes),
            ids=ids,
            labels=labels,
            categories=categories,
        )

    @property
    def count(self) -> int:
        return self.words.shape[0]

    @property
    def bytes_per_item(self) -> int:
        return self.bits // 8

    @property
    def payload_bytes(self) -> int:
        """Bytes spent on codes alone, excluding metadata."""
        return self.count * self.bytes_per_item

    def subset(self, mask: np.ndarray) -> "PackedCodeIndex":
        """Row-filtered view (boolean mask or integer positions)."""
        return PackedCodeIndex(
            bits=self.bits,
            words=self.words[mask],
            ids=self.ids[mask],
            labels=self.labels[mask],
            categories=self.categories[mask],
        )


@dataclass(frozen=True)
class SearchResult:
    """Top-k neighbours, best first; ``indices`` are row positions in the
    searched collection, ``ids`` the items' external identifiers."""

    indices: np.ndarray
    ids: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        _set(
            self,
            indices=_freeze(np.asarray(self.indices, dtype=np.int64)),
            ids=_freeze(np.asarray(self.ids, dtype=np.int64)),
            distances=_freeze(np.asarray(self.distances)),
        )


def _stable_topk(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k smallest values, ties broken by ascending index.

    Equivalent to lexsort over (value, index) followed by truncation, but
    O(n) ahead of the final k log k sort.
    """
    n = values.shape[0]
    if k >= n:
        return np.argsort(values, kind="stable")
    boundary = np.partition(values, k - 1)[k - 1]
    below = np.flatnonzero(values < boundary)
    at = np.flatnonzero(values == boundary)[: k - below.size]
    chosen = np.concatenate([below, at])
    return chosen[np.argsort(values[chosen], kind="stable")]


def search(index: PackedCodeIndex, query: np.ndarray, k: int) -> SearchResult:
    """Exhaustive Hamming scan returning the k closest items."""
    if k < 1:
        raise InvalidValue(f"k must be >= 1, got {k}")
    dists = hamming(index.words, query)
    top = _stable_topk(dists, k)
    return SearchResult(indices=top, ids=index.ids[top], distances=dists[top])


def batch_search(
    index: PackedCodeIndex, queries: np.ndarray, k: int, workers: int = 1
) -> list[SearchResult]:
    """Independent per-query searches; results are ordered like the queries
    and identical for any worker count."""
    queries = np.asarray(queries, dtype=np.uint64)
    if queries.ndim != 2:
        raise BitsMismatch("queries must be 2-D (query x words)")
    if workers <= 1 or queries.shape[0] <= 1:
        return [search(index, q, k) for q in queries]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda q: search(index, q, k), queries))


def cosine_norms(vectors: np.ndarray, chunk: int = 65536) -> np.ndarray:
    """Row L2 norms computed in chunks so float32 matrices stay un-copied."""
    out = np.empty(vectors.shape[0], dtype=np.float64)
    for start in range(0, vectors.shape[0], chunk):
        block = vectors[start : start + chunk]
        out[start : start + chunk] = np.sqrt(
            np.einsum("ij,ij->i", block, block, dtype=np.float64)
        )
    return out


def cosine_search(
    vectors: np.ndarray,
    query: np.ndarray,
    k: int,
    ids: np.ndarray | None = None,
    norms: np.ndarray | None = None,
) -> SearchResult:
    """Exhaustive cosine scan with the same ordering contract as ``search``.

    Distances are negated similarities so smaller is better; zero vectors
    get a guarded norm and score 0 against everything.
    """
    if k < 1:
        raise InvalidValue(f"k must be >= 1, got {k}")
    if vectors.ndim != 2:
        raise BitsMismatch("vectors must be 2-D (item x dim)")
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    if q.shape[0] != vectors.shape[1]:
        raise BitsMismatch(
            f"query dim {q.shape[0]} does not match vectors dim {vectors.shape[1]}"
        )
    if norms is None:
        norms = cosine_norms(vectors)
    qn = q / max(float(np.linalg.norm(q)), 1e-12)
    # match the matrix dtype: a float64 query against a float32 database
    # would otherwise upcast (copy) the whole database
    sims = (vectors @ qn.astype(vectors.dtype, copy=False)).astype(
        np.float64
    ) / np.maximum(norms, 1e-12)
    dists = -sims
    top = _stable_topk(dists, k)
    if ids is None:
        result_ids = top
    else:
        result_ids = np.asarray(ids, dtype=np.int64)[top]
    return SearchResult(indices=top, ids=result_ids, distances=dists[top])


def write_index(index: PackedCodeIndex, path) -> None:
    """Serialize: header, packed words, then ids (u64), labels and
    categories (u32), all little-endian."""
    from .storage import atomic_write, _u32_column

    if index.count and index.ids.min() < 0:
        raise InvalidValue("ids must be nonnegative to serialize as u64")
    parts = [
        _INDEX_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, index.bits, index.count),
        np.ascontiguousarray(index.words, dtype="<u8").tobytes(),
        index.ids.astype("<u8").tobytes(),
        _u32_column(index.labels, "labels"),
        _u32_column(index.categories, "categories"),
    ]
    with atomic_write(path) as f:
        f.write(b"".join(parts))


def read_index(path) -> PackedCodeIndex:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != INDEX_MAGIC:
        raise BadMagic(f"expected {INDEX_MAGIC!r}, found {blob[:4]!r}", offset=0)
    if len(blob) < _INDEX_HEADER.size:
        raise TruncatedPayload("header incomplete", offset=len(blob))
    _, version, bits, count = _INDEX_HEADER.unpack_from(blob, 0)
    if version != INDEX_VERSION:
        raise UnsupportedVersion(f"version {version} not supported", offset=4)
    words_per_code = _require_aligned(bits)
    offset = _INDEX_HEADER.size
    sections = [
        ("words", "<u8", count * words_per_code),
        ("ids", "<u8", count),
        ("labels", "<u4", count),
        ("categories", "<u4", count),
    ]
    arrays = {}
    for name, dtype, n in sections:
        end = offset + n * np.dtype(dtype).itemsize
        if end > len(blob):
            raise TruncatedPayload(f"section {name} incomplete", offset=len(blob))
        arrays[name] = np.frombuffer(blob, dtype=dtype, count=n, offset=offset)
        offset = end
    if offset != len(blob):
        raise TruncatedPayload(
            f"{len(blob) - offset} unexpected trailing bytes", offset=offset
        )
    return PackedCodeIndex(
        bits=bits,
        words=arrays["words"].reshape(count, words_per_code),
        ids=arrays["ids"].astype(np.int64),
        labels=arrays["labels"].astype(np.int64),
        categories=arrays["categories"].astype(np.int64),
    )
