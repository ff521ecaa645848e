"""Batch encoder runner that writes embedding files for the hcube tools."""

from .encoders import ConstantEncoder, StubEncoder, make_encoder
from .errors import DimensionDrift, ExportError, ManifestError, NothingExported
from .export import ExportResult, ItemFailure, export
from .manifest import MODALITIES, ExportManifest, ManifestEntry, read_manifest
from .writer import EMBED_MAGIC, EMBED_VERSION, write_hcem

__all__ = [
    "ConstantEncoder",
    "StubEncoder",
    "make_encoder",
    "DimensionDrift",
    "ExportError",
    "ManifestError",
    "NothingExported",
    "ExportResult",
    "ItemFailure",
    "export",
    "MODALITIES",
    "ExportManifest",
    "ManifestEntry",
    "read_manifest",
    "EMBED_MAGIC",
    "EMBED_VERSION",
    "write_hcem",
]

__version__ = "0.1.0"
