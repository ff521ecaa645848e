"""Run an encoder over manifest entries and write the embedding file.

Items are processed in manifest order; internal batching never reorders
rows. A failing encoder skips that item and records the failure; a change
in the returned dimension aborts the export, because silently mixing
feature spaces would poison every downstream distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionDrift, NothingExported
from .manifest import ExportManifest
from .writer import write_hcem


@dataclass(frozen=True)
class ItemFailure:
    index: int
    path: str
    message: str


@dataclass(frozen=True)
class ExportResult:
    output_path: str
    written: int
    dim: int
    failures: tuple[ItemFailure, ...]


class _Interner:
    """Name -> dense u32 id, first appearance wins."""

    def __init__(self):
        self.ids: dict[str, int] = {}

    def intern(self, name: str) -> int:
        return self.ids.setdefault(name, len(self.ids))

    def names(self) -> tuple[str, ...]:
        return tuple(self.ids)


def _encode_all(manifest: ExportManifest, encoder):
    vectors, kept, failures = [], [], []
    dim = None
    batch: list[tuple[int, bytes]] = []

    def flush():
        nonlocal dim
        for index, content in batch:
            entry = manifest.entries[index]
            try:
                vec = np.asarray(encoder(content), dtype=np.float64)
            except Exception as exc:
                failures.append(ItemFailure(index, entry.path, str(exc)))
                continue
            if vec.ndim != 1:
                raise DimensionDrift(
                    f"{entry.path}: encoder returned shape {vec.shape}, "
                    "expected a 1-D vector"
                )
            if not np.all(np.isfinite(vec)):
                failures.append(
                    ItemFailure(index, entry.path, "encoder returned non-finite values")
                )
                continue
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise DimensionDrift(
                    f"{entry.path}: encoder returned {vec.shape[0]} dims, "
                    f"previous items had {dim}"
                )
            vectors.append(vec)
            kept.append(index)
        batch.clear()

    for index, entry in enumerate(manifest.entries):
        with open(entry.path, "rb") as f:
            batch.append((index, f.read()))
        if len(batch) >= manifest.batch_size:
            flush()
    flush()
    return vectors, kept, failures, dim


def export(manifest: ExportManifest, encoder) -> ExportResult:
    """Encode every manifest entry and write the output file.

    Returns the written-row count plus any per-item failures; raises
    NothingExported when no row survives, so an output file always holds
    at least one row.
    """
    vectors, kept, failures, dim = _encode_all(manifest, encoder)
    if not vectors:
        raise NothingExported(
            f"no rows to write ({len(failures)} of {len(manifest.entries)} items failed)"
        )

    labels_tab, categories_tab = _Interner(), _Interner()
    labels = np.empty(len(kept), dtype=np.int64)
    categories = np.empty(len(kept), dtype=np.int64)
    for row, index in enumerate(kept):
        entry = manifest.entries[index]
        labels[row] = labels_tab.intern(entry.label)
        categories[row] = categories_tab.intern(entry.category)

    write_hcem(
        manifest.output_path,
        np.vstack(vectors),
        labels,
        categories,
        manifest.modality,
        labels_tab.names(),
        categories_tab.names(),
    )
    return ExportResult(
        output_path=manifest.output_path,
        written=len(kept),
        dim=int(dim),
        failures=tuple(failures),
    )
