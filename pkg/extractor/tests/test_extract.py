import json
import struct

import numpy as np
import pytest
from PIL import Image

from vlmextract import SyntheticEncoder, extract
from vlmextract.extract import list_images, read_class_names

from conftest import CLASS_NAMES


def run_extract(image_tree, out_dir, **kwargs):
    root, classes_file = image_tree
    return extract(root, classes_file, out_dir, "synthetic:16", **kwargs)


def parse_embeddings(path):
    blob = path.read_bytes()
    magic, version, n_rows, dim, flags = struct.unpack_from("<4sIIII", blob)
    assert magic == b"ADPT" and version == 1
    assert len(blob) == 20 + 4 * n_rows * dim
    data = np.frombuffer(blob, dtype="<f4", offset=20).reshape(n_rows, dim)
    return data.astype(np.float64), flags


def test_shape_contract(image_tree, tmp_path):
    manifest_path = run_extract(image_tree, tmp_path / "out")
    out = manifest_path.parent
    features, flags = parse_embeddings(out / "features.adpt")
    assert features.shape == (96, 16)
    assert flags & 1  # pre-normalized
    prototypes, _ = parse_embeddings(out / "prototypes.adpt")
    assert prototypes.shape == (4, 16)
    blob = (out / "labels.adpl").read_bytes()
    magic, version, n_rows = struct.unpack_from("<4sII", blob)
    assert magic == b"ADPL" and n_rows == 96
    labels = np.frombuffer(blob, dtype="<i4", offset=12)
    assert set(labels.tolist()) == {0, 1, 2, 3}
    manifest = json.loads(manifest_path.read_text())
    assert manifest["class_names"] == CLASS_NAMES
    assert manifest["tau"] > 0


def test_row_norms_within_tolerance(image_tree, tmp_path):
    manifest_path = run_extract(image_tree, tmp_path / "out")
    out = manifest_path.parent
    for name in ("features.adpt", "prototypes.adpt"):
        rows, _ = parse_embeddings(out / name)
        norms = np.linalg.norm(rows, axis=1)
        assert np.max(np.abs(norms - 1.0)) <= 1e-6


def test_labels_follow_subfolders(image_tree, tmp_path):
    root, classes_file = image_tree
    manifest_path = run_extract(image_tree, tmp_path / "out")
    out = manifest_path.parent
    labels = np.frombuffer((out / "labels.adpl").read_bytes(), dtype="<i4",
                           offset=12)
    paths = [p for p in list_images(root) if p.name != "broken.png"]
    for path, label in zip(paths, labels):
        assert CLASS_NAMES[label] == path.parent.name


def test_flat_directory_is_unlabeled(tmp_path):
    flat = tmp_path / "flat"
    flat.mkdir()
    rng = np.random.default_rng(1)
    for i in range(3):
        Image.fromarray(
            rng.integers(0, 255, size=(8, 8, 3), dtype=np.uint8)
        ).save(flat / f"x{i}.png")
    classes = tmp_path / "classes.txt"
    classes.write_text("red\nblue\n")
    manifest_path = extract(flat, classes, tmp_path / "out", "synthetic:16")
    labels = np.frombuffer(
        (manifest_path.parent / "labels.adpl").read_bytes(), dtype="<i4",
        offset=12,
    )
    assert labels.tolist() == [-1, -1, -1]


def test_decode_failures_recorded_not_dropped(image_tree, tmp_path):
    manifest_path = run_extract(image_tree, tmp_path / "out")
    failures = json.loads(
        (manifest_path.parent / "failures.json").read_text()
    )
    assert len(failures) == 1
    assert failures[0]["path"].endswith("broken.png")
    assert "error" in failures[0]


def test_deterministic_given_tree_and_encoder(image_tree, tmp_path):
    a = run_extract(image_tree, tmp_path / "a").parent
    b = run_extract(image_tree, tmp_path / "b").parent
    for name in ("features.adpt", "prototypes.adpt", "labels.adpl",
                 "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_template_ensemble_averages_then_normalizes(image_tree, tmp_path):
    root, classes_file = image_tree
    templates = ["a photo of a {}.", "a {} object"]
    manifest_path = extract(root, classes_file, tmp_path / "out",
                            "synthetic:16", prompt_templates=templates)
    prototypes, _ = parse_embeddings(
        manifest_path.parent / "prototypes.adpt"
    )
    encoder = SyntheticEncoder(dim=16)
    per_template = [
        encoder.encode_texts([t.format(n) for n in CLASS_NAMES])
        for t in templates
    ]
    expected = np.mean(per_template, axis=0)
    expected /= np.linalg.norm(expected, axis=1, keepdims=True)
    assert np.max(np.abs(prototypes - expected.astype(np.float32))) <= 1e-7


def test_class_file_validation(tmp_path):
    single = tmp_path / "one.txt"
    single.write_text("red\n")
    with pytest.raises(ValueError):
        read_class_names(single)
    dupes = tmp_path / "dupes.txt"
    dupes.write_text("red\nred\n")
    with pytest.raises(ValueError):
        read_class_names(dupes)


def test_empty_directory_errors(tmp_path):
    empty = tmp_path / "none"
    empty.mkdir()
    classes = tmp_path / "classes.txt"
    classes.write_text("red\nblue\n")
    with pytest.raises(ValueError):
        extract(empty, classes, tmp_path / "out", "synthetic:16")


def test_cli_entry(image_tree, tmp_path):
    import subprocess
    import sys

    root, classes_file = image_tree
    out = tmp_path / "cliout"
    proc = subprocess.run(
        [sys.executable, "-m", "vlmextract.cli",
         "--images", str(root), "--classes", str(classes_file),
         "--out", str(out), "--model", "synthetic:16"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "manifest.json").exists()
    proc = subprocess.run(
        [sys.executable, "-m", "vlmextract.cli",
         "--images", str(tmp_path / "missing"), "--classes",
         str(classes_file), "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
