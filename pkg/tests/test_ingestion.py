import json
import struct

import numpy as np
import pytest

from gaussadapt import load_embeddings, load_labels, load_manifest, write_embeddings, write_labels, write_manifest
from gaussadapt.errors import (
    BadMagic,
    DimensionMismatch,
    JsonError,
    MissingFile,
    NonFiniteValue,
    TruncatedFile,
    VersionMismatch,
    ZeroNormRow,
)

from conftest import unit_rows


def test_embeddings_round_trip_exact_float32(tmp_path):
    rng = np.random.default_rng(0)
    data = rng.normal(size=(3, 4))
    path = tmp_path / "m.adpt"
    write_embeddings(path, data)
    loaded = load_embeddings(path, normalize=False)
    assert loaded.dtype == np.float64
    assert np.array_equal(loaded, data.astype(np.float32).astype(np.float64))


def test_rows_normalized_on_load(tmp_path):
    data = np.array([[3.0, 4.0], [0.5, 0.0]])
    path = tmp_path / "m.adpt"
    write_embeddings(path, data)
    loaded = load_embeddings(path)
    assert np.allclose(np.linalg.norm(loaded, axis=1), 1.0, atol=1e-12)


def test_pre_normalized_flag_passthrough_is_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    rows = unit_rows(rng, (5, 8)).astype(np.float32)
    path = tmp_path / "m.adpt"
    write_embeddings(path, rows, pre_normalized=True)
    loaded = load_embeddings(path)
    # float32 unit rows are within 1e-6 of unit norm: no renormalization.
    assert np.array_equal(loaded, rows.astype(np.float64))


def test_pre_normalized_flag_with_bad_norms_still_normalizes(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.array([[2.0, 0.0]]), pre_normalized=True)
    loaded = load_embeddings(path)
    assert np.allclose(loaded, [[1.0, 0.0]])


def test_truncated_payload_reports_offset(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.ones((4, 4)))
    blob = path.read_bytes()
    path.write_bytes(blob[:-7])
    with pytest.raises(TruncatedFile) as err:
        load_embeddings(path)
    assert str(len(blob) - 7) in str(err.value)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.ones((2, 2)))
    path.write_bytes(path.read_bytes() + b"xx")
    with pytest.raises(TruncatedFile):
        load_embeddings(path)


def test_zero_norm_row(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(ZeroNormRow) as err:
        load_embeddings(path)
    assert "row 1" in str(err.value)


def test_bad_magic(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.ones((1, 2)))
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(BadMagic):
        load_embeddings(path)


def test_version_mismatch(tmp_path):
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.ones((1, 2)))
    blob = bytearray(path.read_bytes())
    struct.pack_into("<I", blob, 4, 99)
    path.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatch):
        load_embeddings(path)


def test_nonfinite_payload_rejected(tmp_path):
    path = tmp_path / "m.adpt"
    header = struct.pack("<4sIIII", b"ADPT", 1, 1, 2, 0)
    payload = np.array([np.inf, 1.0], dtype="<f4").tobytes()
    path.write_bytes(header + payload)
    with pytest.raises(NonFiniteValue):
        load_embeddings(path)
    with pytest.raises(NonFiniteValue):
        write_embeddings(path, np.array([[np.nan, 1.0]]))


def test_golden_bytes_little_endian(tmp_path):
    # Frozen byte-level layout: header fields and payload are
    # little-endian regardless of host order.
    path = tmp_path / "m.adpt"
    write_embeddings(path, np.array([[1.0, -2.0]]))
    expected = (
        b"ADPT"
        + (1).to_bytes(4, "little")
        + (1).to_bytes(4, "little")
        + (2).to_bytes(4, "little")
        + (0).to_bytes(4, "little")
        + struct.pack("<f", 1.0)
        + struct.pack("<f", -2.0)
    )
    assert path.read_bytes() == expected


def test_labels_round_trip_and_unlabeled(tmp_path):
    path = tmp_path / "m.adpl"
    labels = np.array([0, 3, -1, 2])
    write_labels(path, labels)
    assert np.array_equal(load_labels(path), labels)
    blob = path.read_bytes()
    assert blob[:4] == b"ADPL"
    assert len(blob) == 12 + 4 * 4


def test_labels_below_minus_one_rejected(tmp_path):
    path = tmp_path / "m.adpl"
    with pytest.raises(DimensionMismatch):
        write_labels(path, np.array([0, -2]))
    header = struct.pack("<4sII", b"ADPL", 1, 1)
    path.write_bytes(header + np.array([-5], dtype="<i4").tobytes())
    with pytest.raises(DimensionMismatch):
        load_labels(path)


def test_labels_truncation(tmp_path):
    path = tmp_path / "m.adpl"
    write_labels(path, np.arange(5))
    path.write_bytes(path.read_bytes()[:-2])
    with pytest.raises(TruncatedFile):
        load_labels(path)


def write_dataset(tmp_path, n=6, d=4, k=2, with_labels=True, tau=None):
    rng = np.random.default_rng(7)
    write_embeddings(tmp_path / "features.adpt", unit_rows(rng, (n, d)),
                     pre_normalized=True)
    write_embeddings(tmp_path / "prototypes.adpt", np.eye(d)[:k],
                     pre_normalized=True)
    if with_labels:
        write_labels(tmp_path / "labels.adpl",
                     np.arange(n) % k - (np.arange(n) == 0))
    write_manifest(tmp_path / "manifest.json", features="features.adpt",
                   prototypes="prototypes.adpt",
                   labels="labels.adpl" if with_labels else None,
                   class_names=[f"c{i}" for i in range(k)], tau=tau)
    return tmp_path / "manifest.json"


def test_manifest_happy_path(tmp_path):
    manifest = write_dataset(tmp_path, tau=0.05)
    ds = load_manifest(manifest)
    assert (ds.n_samples, ds.dim, ds.n_classes) == (6, 4, 2)
    assert ds.tau == 0.05
    assert ds.class_names == ["c0", "c1"]
    assert ds.labels is not None and ds.labels[0] == -1


def test_manifest_dimension_mismatch_names_both_files(tmp_path):
    manifest = write_dataset(tmp_path)
    rng = np.random.default_rng(8)
    write_embeddings(tmp_path / "prototypes.adpt", unit_rows(rng, (2, 9)),
                     pre_normalized=True)
    with pytest.raises(DimensionMismatch) as err:
        load_manifest(manifest)
    assert "features.adpt" in str(err.value)
    assert "prototypes.adpt" in str(err.value)


def test_manifest_label_count_mismatch(tmp_path):
    manifest = write_dataset(tmp_path)
    write_labels(tmp_path / "labels.adpl", np.zeros(3, dtype=int))
    with pytest.raises(DimensionMismatch):
        load_manifest(manifest)


def test_manifest_label_range_checked(tmp_path):
    manifest = write_dataset(tmp_path)
    write_labels(tmp_path / "labels.adpl", np.full(6, 7))
    with pytest.raises(DimensionMismatch):
        load_manifest(manifest)


def test_manifest_missing_file(tmp_path):
    manifest = write_dataset(tmp_path)
    (tmp_path / "features.adpt").unlink()
    with pytest.raises(MissingFile):
        load_manifest(manifest)
    with pytest.raises(MissingFile):
        load_manifest(tmp_path / "absent.json")


def test_manifest_bad_json(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text("{not json")
    with pytest.raises(JsonError):
        load_manifest(path)
    path.write_text(json.dumps(["not", "an", "object"]))
    with pytest.raises(JsonError):
        load_manifest(path)
    path.write_text(json.dumps({"features": "x.adpt"}))
    with pytest.raises(JsonError):
        load_manifest(path)


def test_manifest_class_names_length_checked(tmp_path):
    manifest = write_dataset(tmp_path)
    doc = json.loads(manifest.read_text())
    doc["class_names"] = ["only-one"]
    manifest.write_text(json.dumps(doc))
    with pytest.raises(JsonError):
        load_manifest(manifest)


def test_manifest_without_labels(tmp_path):
    manifest = write_dataset(tmp_path, with_labels=False)
    ds = load_manifest(manifest)
    assert ds.labels is None
