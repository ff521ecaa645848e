"""Embedding file round-trips, malformed-input rejection, and the synthetic
benchmark generator's learnability guarantee."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from hcube import (
    BadMagic,
    EmbeddingSet,
    InvalidValue,
    NonFiniteEntry,
    SynthConfig,
    TruncatedPayload,
    UnsupportedVersion,
    generate_synthetic,
    read_embeddings,
    write_embeddings,
)
from hcube.storage import EMBED_MAGIC, _HEADER, atomic_write


def _sample_set(seed=0, count=7, dim=5, modality="text", names=True):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((count, dim)).astype(np.float32).astype(np.float64)
    return EmbeddingSet(
        rows=rows,
        labels=rng.integers(0, 4, size=count),
        categories=rng.integers(0, 2, size=count),
        modality=modality,
        label_names=("a", "b", "c", "d") if names else None,
        category_names=("x", "y") if names else None,
    )


def test_round_trip_exact(tmp_path):
    es = _sample_set()
    p = tmp_path / "e.hcem"
    write_embeddings(es, p)
    back = read_embeddings(p)
    assert np.array_equal(back.rows, es.rows)
    assert np.array_equal(back.labels, es.labels)
    assert np.array_equal(back.categories, es.categories)
    assert back.modality == "text"
    assert back.label_names == es.label_names
    assert back.category_names == es.category_names


def test_round_trip_without_names(tmp_path):
    es = _sample_set(names=False, modality="observation")
    p = tmp_path / "n.hcem"
    write_embeddings(es, p)
    back = read_embeddings(p)
    assert back.label_names is None and back.category_names is None
    assert back.modality == "observation"


def test_round_trip_unicode_names(tmp_path):
    es = EmbeddingSet(
        rows=np.zeros((2, 3)),
        labels=[0, 1],
        categories=[0, 0],
        modality="text",
        label_names=("Ærøskøbing", "świerszcz"),
        category_names=("población",),
    )
    p = tmp_path / "u.hcem"
    write_embeddings(es, p)
    assert read_embeddings(p).label_names == ("Ærøskøbing", "świerszcz")


def test_floats_stored_at_32_bit_precision(tmp_path):
    es = EmbeddingSet(
        rows=np.array([[1.0 / 3.0, 2.0 / 3.0]]),
        labels=[0],
        categories=[0],
        modality="text",
    )
    p = tmp_path / "f.hcem"
    write_embeddings(es, p)
    back = read_embeddings(p)
    assert np.array_equal(back.rows, es.rows.astype(np.float32).astype(np.float64))


def test_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.hcem"
    p.write_bytes(b"XXXX" + b"\x00" * 60)
    with pytest.raises(BadMagic) as exc:
        read_embeddings(p)
    assert exc.value.offset == 0


def test_rejects_unsupported_version(tmp_path):
    es = _sample_set()
    p = tmp_path / "v.hcem"
    write_embeddings(es, p)
    blob = bytearray(p.read_bytes())
    struct.pack_into("<I", blob, 4, 9)
    p.write_bytes(bytes(blob))
    with pytest.raises(UnsupportedVersion):
        read_embeddings(p)


def test_rejects_short_payload(tmp_path):
    es = _sample_set()
    p = tmp_path / "cut.hcem"
    write_embeddings(es, p)
    p.write_bytes(p.read_bytes()[: _HEADER.size + 4 * 3])
    with pytest.raises(TruncatedPayload):
        read_embeddings(p)


def test_rejects_nonfinite_payload(tmp_path):
    es = _sample_set(count=2, dim=2)
    p = tmp_path / "inf.hcem"
    write_embeddings(es, p)
    blob = bytearray(p.read_bytes())
    struct.pack_into("<f", blob, _HEADER.size + 4 * 3, float("inf"))
    p.write_bytes(bytes(blob))
    with pytest.raises(NonFiniteEntry) as exc:
        read_embeddings(p)
    assert "offset" in str(exc.value)


def test_rejects_label_out_of_u32_range(tmp_path):
    es = EmbeddingSet(
        rows=np.zeros((1, 2)), labels=[2**32], categories=[0], modality="text"
    )
    with pytest.raises(InvalidValue):
        write_embeddings(es, tmp_path / "big.hcem")
    es2 = EmbeddingSet(
        rows=np.zeros((1, 2)), labels=[-1], categories=[0], modality="text"
    )
    with pytest.raises(InvalidValue):
        write_embeddings(es2, tmp_path / "neg.hcem")


def test_atomic_write_cleans_up_on_failure(tmp_path):
    target = tmp_path / "out.bin"
    with pytest.raises(RuntimeError):
        with atomic_write(target) as f:
            f.write(b"partial")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []


def test_atomic_write_replaces_existing(tmp_path):
    target = tmp_path / "out.bin"
    target.write_bytes(b"old")
    with atomic_write(target) as f:
        f.write(b"new")
    assert target.read_bytes() == b"new"


def test_generator_is_deterministic():
    cfg = SynthConfig(n_classes=4, items_per_class=3, dim_text=6, dim_obs=6, seed=5)
    t1, o1 = generate_synthetic(cfg)
    t2, o2 = generate_synthetic(cfg)
    assert np.array_equal(t1.rows, t2.rows)
    assert np.array_equal(o1.rows, o2.rows)
    t3, _ = generate_synthetic(SynthConfig(
        n_classes=4, items_per_class=3, dim_text=6, dim_obs=6, seed=6))
    assert not np.array_equal(t1.rows, t3.rows)


def test_generator_shapes_and_metadata():
    cfg = SynthConfig(n_classes=6, items_per_class=4, dim_text=10, dim_obs=12,
                      n_categories=3)
    text, obs = generate_synthetic(cfg)
    assert text.count == 6 and text.dim == 10
    assert obs.count == 24 and obs.dim == 12
    assert text.modality == "text" and obs.modality == "observation"
    assert np.array_equal(np.unique(obs.labels), np.arange(6))
    assert np.array_equal(text.categories, text.labels % 3)
    assert len(text.label_names) == 6 and len(text.category_names) == 3


def test_generator_text_means_unit_norm():
    text, _ = generate_synthetic(SynthConfig(n_classes=5, items_per_class=2,
                                             dim_text=16, dim_obs=16))
    norms = np.linalg.norm(text.rows, axis=1)
    # unit up to the float32 quantization of the stored rows
    assert np.allclose(norms, 1.0, atol=1e-6)


def test_generator_degenerate_noise_collapses_items():
    cfg = SynthConfig(n_classes=3, items_per_class=4, dim_text=8, dim_obs=8,
                      noise=1e-12, n_categories=1)
    _, obs = generate_synthetic(cfg)
    for label in range(3):
        rows = obs.rows[obs.labels == label]
        assert np.array_equal(rows, np.tile(rows[0], (4, 1)))


def test_generator_nearest_mean_classification_works():
    # the benchmark must be learnable: nearest empirical class mean >= 99%
    cfg = SynthConfig()  # defaults: 32 classes x 50 items, dims 64/64
    _, obs = generate_synthetic(cfg)
    means = np.stack([obs.rows[obs.labels == c].mean(axis=0)
                      for c in range(cfg.n_classes)])
    sims = obs.rows @ means.T
    predicted = np.argmax(sims / np.linalg.norm(means, axis=1), axis=1)
    accuracy = float(np.mean(predicted == obs.labels))
    assert accuracy >= 0.99


def test_generator_cross_rotation_extremes():
    base = dict(n_classes=4, items_per_class=2, dim_text=8, dim_obs=8, noise=1e-6)
    t0, o0 = generate_synthetic(SynthConfig(**base, cross_rotation=0.0))
    assert np.allclose(t0.rows, o0.rows[::2], atol=1e-5)
    t1, o1 = generate_synthetic(SynthConfig(**base, cross_rotation=1.0))
    assert not np.allclose(t1.rows, o1.rows[::2], atol=0.1)


def test_synth_config_invariants():
    with pytest.raises(InvalidValue):
        SynthConfig(n_classes=1)
    with pytest.raises(InvalidValue):
        SynthConfig(noise=0.0)
    with pytest.raises(InvalidValue):
        SynthConfig(n_categories=33)
    with pytest.raises(InvalidValue):
        SynthConfig(cross_rotation=1.5)


def test_round_trip_through_disk_preserves_synthetic_exactly(tmp_path):
    text, obs = generate_synthetic(SynthConfig(n_classes=3, items_per_class=2,
                                               dim_text=4, dim_obs=4, n_categories=2))
    write_embeddings(text, tmp_path / "t.hcem")
    write_embeddings(obs, tmp_path / "o.hcem")
    assert np.array_equal(read_embeddings(tmp_path / "t.hcem").rows, text.rows)
    assert np.array_equal(read_embeddings(tmp_path / "o.hcem").rows, obs.rows)


def test_header_layout_is_stable(tmp_path):
    es = _sample_set(count=2, dim=3, names=False)
    p = tmp_path / "h.hcem"
    write_embeddings(es, p)
    blob = p.read_bytes()
    assert blob[:4] == EMBED_MAGIC
    _, version, count, dim, tag, labels_off, cats_off, names_off = _HEADER.unpack_from(blob, 0)
    assert (version, count, dim, tag) == (1, 2, 3, 0)
    assert labels_off == _HEADER.size + 2 * 3 * 4
    assert cats_off == labels_off + 2 * 4
    assert names_off == cats_off + 2 * 4
