import pytest

from hcube_exporter import ManifestEntry


@pytest.fixture
def corpus(tmp_path):
    """Builder for a small on-disk corpus plus its manifest entries."""

    def build(n, label=None, category=None):
        label = label or (lambda i: f"species-{i % 3:03d}")
        category = category or (lambda i: f"group-{i % 2}")
        entries = []
        for i in range(n):
            path = tmp_path / f"item{i}.txt"
            path.write_bytes(f"content number {i}\n".encode())
            entries.append(ManifestEntry(str(path), label(i), category(i)))
        return tuple(entries)

    return build
