"""Throughput comparison: packed Hamming scan vs float cosine scan.

Both sides run the same exhaustive top-k contract over synthetic data; the
point of the measurement is the memory footprint gap (bits/8 bytes per item
against 4*dim), which is also reported as the exact compression ratio.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import InvalidValue
from .index import PackedCodeIndex, batch_search, cosine_norms, cosine_search, search


@dataclass(frozen=True)
class BenchReport:
    n_items: int
    bits: int
    dim: int
    n_queries: int
    k: int
    hamming_seconds: float
    cosine_seconds: float
    speedup: float
    bytes_per_item_binary: int
    bytes_per_item_float: int
    compression_ratio: float

    def summary(self) -> str:
        scanned = self.n_items * self.n_queries / self.hamming_seconds
        return (
            f"items={self.n_items} bits={self.bits} dim={self.dim} k={self.k}\n"
            f"hamming  {self.hamming_seconds / self.n_queries * 1e3:9.2f} ms/query"
            f"  ({scanned:,.0f} codes/sec)\n"
            f"cosine   {self.cosine_seconds / self.n_queries * 1e3:9.2f} ms/query\n"
            f"speedup  {self.speedup:9.2f}x\n"
            f"bytes/item {self.bytes_per_item_binary} vs {self.bytes_per_item_float}"
            f" (ratio {self.compression_ratio:.0f}x)"
        )


def _random_index(rng, n_items: int, bits: int) -> PackedCodeIndex:
    raw = rng.integers(0, 256, size=(n_items, bits // 8), dtype=np.uint8)
    zeros = np.zeros(n_items, dtype=np.int64)
    return PackedCodeIndex(
        bits=bits,
        words=np.ascontiguousarray(raw).view(np.uint64),
        ids=np.arange(n_items, dtype=np.int64),
        labels=zeros,
        categories=zeros,
    )


def run_bench(
    n_items: int = 1_000_000,
    bits: int = 256,
    dim: int = 768,
    n_queries: int = 5,
    k: int = 1000,
    seed: int = 0,
) -> BenchReport:
    """Time top-k searches over random codes and random float32 vectors.

    The float matrix is generated directly in float32 (n_items x dim x 4
    bytes resident); both sides get one untimed warmup query.
    """
    if n_queries < 1:
        raise InvalidValue("n_queries must be >= 1")
    rng = np.random.default_rng(seed)
    index = _random_index(rng, n_items, bits)
    queries = rng.integers(0, 256, size=(n_queries, bits // 8), dtype=np.uint8).view(
        np.uint64
    )
    vectors = rng.standard_normal((n_items, dim), dtype=np.float32)
    qvecs = rng.standard_normal((n_queries, dim), dtype=np.float32)
    norms = cosine_norms(vectors)

    for _ in range(3):  # reach allocator steady state before timing
        search(index, queries[0], k)
    t0 = time.perf_counter()
    for q in queries:
        search(index, q, k)
    hamming_s = time.perf_counter() - t0

    for _ in range(3):
        cosine_search(vectors, qvecs[0], k, norms=norms)
    t0 = time.perf_counter()
    for qv in qvecs:
        cosine_search(vectors, qv, k, norms=norms)
    cosine_s = time.perf_counter() - t0

    bytes_binary = bits // 8
    bytes_float = 4 * dim
    return BenchReport(
        n_items=n_items,
        bits=bits,
        dim=dim,
        n_queries=n_queries,
        k=k,
        hamming_seconds=hamming_s,
        cosine_seconds=cosine_s,
        speedup=cosine_s / hamming_s,
        bytes_per_item_binary=bytes_binary,
        bytes_per_item_float=bytes_float,
        compression_ratio=bytes_float / bytes_binary,
    )


def bench_index(
    index: PackedCodeIndex,
    queries: np.ndarray,
    k: int = 1000,
    dim: int = 768,
    seed: int = 0,
    threads: int = 1,
) -> BenchReport:
    """Time an existing index against given query codes, with a seeded
    random float32 database of the same item count as the cosine side."""
    queries = np.asarray(queries, dtype=np.uint64)
    n_queries = queries.shape[0]
    if n_queries < 1:
        raise InvalidValue("need at least one query")
    rng = np.random.default_rng(seed)
    vectors = rng.standard_normal((index.count, dim), dtype=np.float32)
    qvecs = rng.standard_normal((n_queries, dim), dtype=np.float32)
    norms = cosine_norms(vectors)

    for _ in range(3):  # reach allocator steady state before timing
        batch_search(index, queries[:1], k, workers=threads)
    t0 = time.perf_counter()
    batch_search(index, queries, k, workers=threads)
    hamming_s = time.perf_counter() - t0

    for _ in range(3):
        cosine_search(vectors, qvecs[0], k, norms=norms)
    t0 = time.perf_counter()
    for qv in qvecs:
        cosine_search(vectors, qv, k, norms=norms)
    cosine_s = time.perf_counter() - t0

    return BenchReport(
        n_items=index.count,
        bits=index.bits,
        dim=dim,
        n_queries=n_queries,
        k=k,
        hamming_seconds=hamming_s,
        cosine_seconds=cosine_s,
        speedup=cosine_s / hamming_s,
        bytes_per_item_binary=index.bytes_per_item,
        bytes_per_item_float=4 * dim,
        compression_ratio=4 * dim / index.bytes_per_item,
    )
