"""Standalone HCEM writer.

This mirrors the published byte layout exactly and shares no code with the
consuming pipeline:

    offset 0   magic "HCEM"
    offset 4   version            u32
    offset 8   count              u64
    offset 16  dim                u32
    offset 20  modality tag       u8   (0 = text, 1 = observation)
    offset 21  labels offset      u64
    offset 29  categories offset  u64
    offset 37  name table offset  u64
    offset 45  payload: count*dim float32, row-major

followed by count u32 labels, count u32 categories, and two length-prefixed
UTF-8 string lists (label names, then category names). All integers are
little-endian. The output carries no timestamps, so identical inputs yield
bit-identical files.
"""

from __future__ import annotations

import contextlib
import os
import struct

import numpy as np

EMBED_MAGIC = b"HCEM"
EMBED_VERSION = 1
_HEADER = struct.Struct("<4sIQIBQQQ")
_MODALITY_TAGS = {"text": 0, "observation": 1}


@contextlib.contextmanager
def _atomic_write(path):
    # temp file + rename: a failed export leaves no partial output
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


def _pack_names(names) -> bytes:
    parts = [struct.pack("<I", len(names))]
    for name in names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
    return b"".join(parts)


def write_hcem(
    path,
    rows: np.ndarray,
    labels: np.ndarray,
    categories: np.ndarray,
    modality: str,
    label_names,
    category_names,
) -> None:
    """Serialize one embedding table; floats stored at 32-bit precision."""
    rows = np.ascontiguousarray(rows, dtype="<f4")
    count, dim = rows.shape
    payload = rows.tobytes()
    labels_b = np.ascontiguousarray(labels, dtype="<u4").tobytes()
    categories_b = np.ascontiguousarray(categories, dtype="<u4").tobytes()
    names = _pack_names(tuple(label_names)) + _pack_names(tuple(category_names))
    labels_off = _HEADER.size + len(payload)
    categories_off = labels_off + len(labels_b)
    names_off = categories_off + len(categories_b)
    header = _HEADER.pack(
        EMBED_MAGIC,
        EMBED_VERSION,
        count,
        dim,
        _MODALITY_TAGS[modality],
        labels_off,
        categories_off,
        names_off,
    )
    with _atomic_write(path) as f:
        f.write(header)
        f.write(payload)
        f.write(labels_b)
        f.write(categories_b)
        f.write(names)
