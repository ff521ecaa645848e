"""Manifest parsing: one input item per line, tab-separated.

Each line names an input file plus its label and category:

    path<TAB>label<TAB>category

Blank lines and lines starting with ``#`` are skipped. Entry order is the
row order of the exported file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .errors import ManifestError

MODALITIES = ("text", "observation")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    category: str

    def __post_init__(self):
        if not self.label or not self.category:
            raise ManifestError(
                f"entry for {self.path!r} has an empty label or category"
            )
        if not os.path.exists(self.path):
            raise ManifestError(f"input file does not exist: {self.path}")


@dataclass(frozen=True)
class ExportManifest:
    """Validated listing of inputs plus the export destination."""

    entries: tuple[ManifestEntry, ...]
    modality: str
    encoder_id: str
    output_path: str
    batch_size: int = 1

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.modality not in MODALITIES:
            raise ManifestError(
                f"modality must be one of {MODALITIES}, got {self.modality!r}"
            )
        if not self.encoder_id:
            raise ManifestError("encoder_id must be non-empty")
        if self.batch_size < 1:
            raise ManifestError(f"batch_size must be >= 1, got {self.batch_size}")


def read_manifest(
    path,
    modality: str,
    encoder_id: str,
    output_path: str,
    batch_size: int = 1,
) -> ExportManifest:
    """Parse a line-delimited manifest file into a validated manifest."""
    entries = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ManifestError(
                    f"line {lineno}: expected 3 tab-separated fields, got {len(parts)}"
                )
            entries.append(ManifestEntry(*parts))
    return ExportManifest(
        entries=tuple(entries),
        modality=modality,
        encoder_id=encoder_id,
        output_path=os.fspath(output_path),
        batch_size=batch_size,
    )
