"""Encode an image folder plus class prompts into dataset files.

Images are gathered in sorted relative-path order (deterministic given
the tree). When images sit in subdirectories named after classes, those
names become labels; anything else is marked unlabeled (-1). Images
that fail to decode are logged, skipped, and recorded in a
``failures.json`` sidecar next to the outputs, never silently dropped.

Per class, the prototype is the text embedding of the class name
rendered through each prompt template; multiple templates are averaged
then re-normalized. The manifest carries the encoder's own softmax
temperature.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from PIL import Image

from . import formats

logger = logging.getLogger("vlmextract")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp", ".gif",
                  ".tif", ".tiff"}

DEFAULT_TEMPLATE = "a photo of a {}."


def list_images(images_dir) -> list[Path]:
    root = Path(images_dir)
    paths = [p for p in root.rglob("*")
             if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(paths, key=lambda p: str(p.relative_to(root)))


def read_class_names(class_names_file) -> list[str]:
    names = [line.strip() for line in
             Path(class_names_file).read_text().splitlines()]
    names = [n for n in names if n]
    if len(names) < 2:
        raise ValueError("need at least two class names")
    if len(set(names)) != len(names):
        raise ValueError("class names must be unique")
    return names


def infer_label(path: Path, root: Path, class_index: dict[str, int]) -> int:
    relative = path.relative_to(root)
    if len(relative.parts) >= 2:
        return class_index.get(relative.parts[0], -1)
    return -1


def build_prototypes(encoder, class_names, templates) -> np.ndarray:
    per_template = [
        encoder.encode_texts([template.format(name) for name in class_names])
        for template in templates
    ]
    stacked = np.mean(per_template, axis=0)
    return stacked / np.linalg.norm(stacked, axis=1, keepdims=True)


def extract(images_dir, class_names_file, output_dir, model_id,
            prompt_templates=None, device: str = "cpu",
            batch_size: int = 32, encoder=None) -> Path:
    """Run the extraction; returns the manifest path.

    ``encoder`` overrides ``model_id`` with a prebuilt backend (used by
    tests); otherwise :func:`vlmextract.encoders.make_encoder` resolves
    the identifier.
    """
    from .encoders import make_encoder

    root = Path(images_dir)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    class_names = read_class_names(class_names_file)
    class_index = {name: i for i, name in enumerate(class_names)}
    templates = list(prompt_templates or [DEFAULT_TEMPLATE])
    if encoder is None:
        encoder = make_encoder(model_id, device=device,
                               batch_size=batch_size)

    images, labels, failures = [], [], []
    for path in list_images(root):
        try:
            with Image.open(path) as handle:
                images.append(handle.convert("RGB").copy())
        except Exception as exc:  # decode failures are data, not bugs
            logger.warning("skipping %s: %s", path, exc)
            failures.append({"path": str(path.relative_to(root)),
                             "error": f"{type(exc).__name__}: {exc}"})
            continue
        labels.append(infer_label(path, root, class_index))
    if not images:
        raise ValueError(f"no decodable images under {root}")

    features = encoder.encode_images(images)
    prototypes = build_prototypes(encoder, class_names, templates)

    formats.write_embeddings(out / "features.adpt", features,
                             pre_normalized=True)
    formats.write_embeddings(out / "prototypes.adpt", prototypes,
                             pre_normalized=True)
    formats.write_labels(out / "labels.adpl", np.asarray(labels))
    formats.write_manifest(out / "manifest.json",
                           features="features.adpt",
                           prototypes="prototypes.adpt",
                           labels="labels.adpl",
                           class_names=class_names,
                           tau=encoder.tau)
    (out / "failures.json").write_text(json.dumps(failures, indent=2) + "\n")
    logger.info("encoded %d images (%d failures) into %s",
                len(images), len(failures), out)
    return out / "manifest.json"


def zero_shot_accuracy(features: np.ndarray, prototypes: np.ndarray,
                       labels: np.ndarray, tau: float) -> float:
    """The extractor's own zero-shot scoring, for round-trip checks."""
    logits = features @ prototypes.T / tau
    predictions = np.argmax(logits, axis=1)
    mask = labels >= 0
    if not mask.any():
        raise ValueError("no labeled images to score")
    return float(np.mean(predictions[mask] == labels[mask]))
