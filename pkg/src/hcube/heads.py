"""Shallow hashing heads: features -> logits -> probabilities -> binary codes.

The head is a two-layer perceptron (dim -> hidden -> bits) with a SiLU
rectifier between layers, or a single linear layer when ``hidden == 0``.
All three stage functions are pure and safe to call concurrently on a
shared head.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    TruncatedPayload,
    UnsupportedVersion,
)
from .storage import atomic_write
from .types import CodeBatch, HashHead, LogitBatch, ProbBatch

HEAD_MAGIC = b"HCHD"
HEAD_VERSION = 1


def init_head(dim: int, bits: int, hidden: int = 512, seed=0) -> HashHead:
    """Seeded head initialization: uniform fan-in scaled weights, zero biases.

    Weights of a layer with fan-in f are drawn from U(-1/sqrt(f), 1/sqrt(f)).
    """
    rng = np.random.default_rng(seed)
    out1 = hidden if hidden > 0 else bits
    s1 = 1.0 / np.sqrt(dim)
    w1 = rng.uniform(-s1, s1, size=(dim, out1))
    b1 = np.zeros(out1)
    if hidden > 0:
        s2 = 1.0 / np.sqrt(hidden)
        w2 = rng.uniform(-s2, s2, size=(hidden, bits))
        b2 = np.zeros(bits)
        return HashHead(dim=dim, bits=bits, hidden=hidden, w1=w1, b1=b1, w2=w2, b2=b2)
    return HashHead(dim=dim, bits=bits, hidden=0, w1=w1, b1=b1)


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic sigmoid, branch form for z >= 0 and z < 0."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _silu(x: np.ndarray) -> np.ndarray:
    return x * sigmoid(x)


def _silu_grad(x: np.ndarray) -> np.ndarray:
    s = sigmoid(x)
    return s * (1.0 + x * (1.0 - s))


def _forward_cache(head: HashHead, feats: np.ndarray):
    """Raw forward pass returning logits plus the intermediates backprop needs."""
    x = np.asarray(feats, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != head.dim:
        raise DimensionMismatch(
            f"features have shape {x.shape}, head expects (*, {head.dim})"
        )
    if head.hidden == 0:
        z = x @ head.w1 + head.b1
        return z, (x, None, None)
    h1 = x @ head.w1 + head.b1
    a1 = _silu(h1)
    z = a1 @ head.w2 + head.b2
    return z, (x, h1, a1)


def _backward(head: HashHead, cache, dz: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss w.r.t. head parameters, given dL/dlogits."""
    x, h1, a1 = cache
    if head.hidden == 0:
        return {"w1": x.T @ dz, "b1": dz.sum(axis=0)}
    dw2 = a1.T @ dz
    db2 = dz.sum(axis=0)
    dh1 = (dz @ head.w2.T) * _silu_grad(h1)
    return {"w1": x.T @ dh1, "b1": dh1.sum(axis=0), "w2": dw2, "b2": db2}


def forward(head: HashHead, feats: np.ndarray) -> LogitBatch:
    """Project a feature batch to pre-binarized logits."""
    z, _ = _forward_cache(head, feats)
    return LogitBatch(z)


def squash(z: LogitBatch) -> ProbBatch:
    """Elementwise sigmoid of the logits."""
    return ProbBatch(sigmoid(z.values))


def binarize(p: ProbBatch) -> CodeBatch:
    """Threshold probabilities at 0.5 (inclusive) into 0/1 codes."""
    return CodeBatch(bits=p.values.shape[1], values=(p.values >= 0.5).astype(np.uint8))


def encode(head: HashHead, feats: np.ndarray) -> CodeBatch:
    """Full hashing function: binarize(squash(forward(feats)))."""
    return binarize(squash(forward(head, feats)))


def save_head(head: HashHead, path) -> None:
    """Write an HCHD checkpoint: magic, version, dims, then float32 parameters
    in layer order (w1 row-major, b1, w2 row-major, b2)."""
    parts = [
        HEAD_MAGIC,
        struct.pack("<IIII", HEAD_VERSION, head.dim, head.hidden, head.bits),
    ]
    for arr in head.params().values():
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    with atomic_write(path) as f:
        f.write(b"".join(parts))


def load_head(path) -> HashHead:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != HEAD_MAGIC:
        raise BadMagic(f"expected {HEAD_MAGIC!r}, found {blob[:4]!r}", offset=0)
    if len(blob) < 20:
        raise TruncatedPayload("header incomplete", offset=len(blob))
    version, dim, hidden, bits = struct.unpack_from("<IIII", blob, 4)
    if version != HEAD_VERSION:
        raise UnsupportedVersion(f"version {version} not supported", offset=4)
    out1 = hidden if hidden > 0 else bits
    shapes = [("w1", (dim, out1)), ("b1", (out1,))]
    if hidden > 0:
        shapes += [("w2", (hidden, bits)), ("b2", (bits,))]
    params = {}
    offset = 20
    for name, shape in shapes:
        n = int(np.prod(shape))
        end = offset + 4 * n
        if end > len(blob):
            raise TruncatedPayload(f"parameter {name} incomplete", offset=len(blob))
        params[name] = (
            np.frombuffer(blob, dtype="<f4", count=n, offset=offset)
            .astype(np.float64)
            .reshape(shape)
        )
        offset = end
    if offset != len(blob):
        raise TruncatedPayload(
            f"{len(blob) - offset} unexpected trailing bytes", offset=offset
        )
    return HashHead(dim=dim, bits=bits, hidden=hidden, **params)
