"""Encoder interface plus stand-in encoders for tests and dry runs.

An encoder is any callable taking one input's raw bytes and returning a
1-D feature vector of a fixed dimension. Real model wrappers live outside
this package; nothing here loads weights.
"""

from __future__ import annotations

import hashlib

import numpy as np


class StubEncoder:
    """Deterministic pseudo-features derived from a digest of the content.

    Identical bytes always produce the identical vector, so exports are
    reproducible without any model on disk.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim

    def __call__(self, content: bytes) -> np.ndarray:
        digest = hashlib.blake2b(content, digest_size=8).digest()
        seed = int.from_bytes(digest, "little")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim).astype(np.float32)


class ConstantEncoder:
    """Same vector for every input; useful to exercise plumbing alone."""

    def __init__(self, dim: int, fill: float = 1.0):
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        self.dim = dim
        self.fill = fill

    def __call__(self, content: bytes) -> np.ndarray:
        return np.full(self.dim, self.fill, dtype=np.float32)


ENCODERS = {
    "stub": StubEncoder,
    "constant": ConstantEncoder,
}


def make_encoder(encoder_id: str, dim: int):
    """Look up a built-in encoder by id."""
    try:
        factory = ENCODERS[encoder_id]
    except KeyError:
        raise ValueError(
            f"unknown encoder {encoder_id!r}; built-ins: {sorted(ENCODERS)}"
        ) from None
    return factory(dim)
