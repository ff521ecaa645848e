"""Errors raised while building embedding files from a manifest."""


class ExportError(Exception):
    """Base class for every exporter failure."""


class ManifestError(ExportError):
    """The manifest file or its entries are malformed."""


class DimensionDrift(ExportError):
    """The encoder returned vectors of inconsistent dimensions."""


class NothingExported(ExportError):
    """No row could be written (every item failed or the manifest was empty)."""
