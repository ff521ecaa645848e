"""Manifest parsing and validation."""

import pytest

from hcube_exporter import ExportManifest, ManifestEntry, ManifestError, read_manifest


class TestManifestEntry:
    def test_holds_fields(self, tmp_path):
        path = tmp_path / "a.txt"
        path.write_bytes(b"x")
        entry = ManifestEntry(str(path), "species-001", "group-0")
        assert entry.path == str(path)
        assert entry.label == "species-001"
        assert entry.category == "group-0"

    def test_missing_input_file_rejected(self, tmp_path):
        with pytest.raises(ManifestError, match="does not exist"):
            ManifestEntry(str(tmp_path / "gone.txt"), "a", "b")

    @pytest.mark.parametrize("label,category", [("", "group-0"), ("species-001", "")])
    def test_empty_names_rejected(self, tmp_path, label, category):
        path = tmp_path / "a.txt"
        path.write_bytes(b"x")
        with pytest.raises(ManifestError, match="empty label or category"):
            ManifestEntry(str(path), label, category)


class TestExportManifest:
    def test_entries_stored_as_tuple(self, corpus, tmp_path):
        entries = corpus(2)
        manifest = ExportManifest(
            entries=list(entries),
            modality="text",
            encoder_id="stub",
            output_path=str(tmp_path / "out.hcem"),
        )
        assert isinstance(manifest.entries, tuple)
        assert manifest.entries == entries
        assert manifest.batch_size == 1

    def test_unknown_modality_rejected(self, corpus, tmp_path):
        with pytest.raises(ManifestError, match="modality"):
            ExportManifest(corpus(1), "audio", "stub", str(tmp_path / "o"))

    def test_empty_encoder_id_rejected(self, corpus, tmp_path):
        with pytest.raises(ManifestError, match="encoder_id"):
            ExportManifest(corpus(1), "text", "", str(tmp_path / "o"))

    @pytest.mark.parametrize("batch", [0, -3])
    def test_bad_batch_size_rejected(self, corpus, tmp_path, batch):
        with pytest.raises(ManifestError, match="batch_size"):
            ExportManifest(
                corpus(1), "text", "stub", str(tmp_path / "o"), batch_size=batch
            )


class TestReadManifest:
    def write_manifest(self, tmp_path, lines):
        path = tmp_path / "manifest.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    def test_parses_entries_in_file_order(self, corpus, tmp_path):
        entries = corpus(4)
        path = self.write_manifest(
            tmp_path, [f"{e.path}\t{e.label}\t{e.category}" for e in entries]
        )
        manifest = read_manifest(
            path, modality="observation", encoder_id="stub",
            output_path=str(tmp_path / "out.hcem"), batch_size=2,
        )
        assert manifest.entries == entries
        assert manifest.modality == "observation"
        assert manifest.encoder_id == "stub"
        assert manifest.batch_size == 2

    def test_skips_blank_lines_and_comments(self, corpus, tmp_path):
        entries = corpus(2)
        path = self.write_manifest(
            tmp_path,
            [
                "# header comment",
                "",
                f"{entries[0].path}\t{entries[0].label}\t{entries[0].category}",
                "   ",
                f"  # indented comment",
                f"{entries[1].path}\t{entries[1].label}\t{entries[1].category}",
            ],
        )
        manifest = read_manifest(path, "text", "stub", str(tmp_path / "o"))
        assert manifest.entries == entries

    def test_wrong_field_count_reports_line_number(self, corpus, tmp_path):
        entries = corpus(1)
        path = self.write_manifest(
            tmp_path,
            [
                "# comment lines still count toward line numbers",
                f"{entries[0].path}\t{entries[0].label}\t{entries[0].category}",
                f"{entries[0].path}\tonly-two-fields",
            ],
        )
        with pytest.raises(
            ManifestError, match=r"line 3: expected 3 tab-separated fields, got 2"
        ):
            read_manifest(path, "text", "stub", str(tmp_path / "o"))

    def test_entry_validation_applies_to_file_lines(self, tmp_path):
        path = self.write_manifest(
            tmp_path, [f"{tmp_path / 'missing.txt'}\tspecies-001\tgroup-0"]
        )
        with pytest.raises(ManifestError, match="does not exist"):
            read_manifest(path, "text", "stub", str(tmp_path / "o"))
