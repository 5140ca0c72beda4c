"""Image/text encoder backends.

Two backends share one interface: ``encode_images(pil_images) ->
(N, d)``, ``encode_texts(strings) -> (K, d)`` (both unit-norm rows,
float64) and a ``tau`` property carrying the checkpoint's softmax
temperature.

``TransformersClipEncoder`` wraps a contrastive vision-language
checkpoint through the ``transformers`` library and reads ``tau`` off
its learned logit scale. ``SyntheticEncoder`` is a deterministic,
dependency-free stand-in for offline tests: it embeds an image's mean
color plus a stable hash of its bytes, and embeds a text by the RGB
value of any color word it contains, so color-named classes genuinely
align with color-swatch images.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import ImageColor


def _unit(rows: np.ndarray) -> np.ndarray:
    return rows / np.linalg.norm(rows, axis=-1, keepdims=True)


def _hash_vector(payload: bytes, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
    return np.random.default_rng(seed).normal(size=dim)


class SyntheticEncoder:
    """Deterministic procedural encoder (``--model synthetic:<dim>``)."""

    def __init__(self, dim: int = 16):
        if dim < 4:
            raise ValueError("synthetic encoder needs dim >= 4")
        self.dim = int(dim)
        self.tau = 0.05

    def encode_images(self, images) -> np.ndarray:
        rows = np.empty((len(images), self.dim))
        for i, image in enumerate(images):
            rgb = np.asarray(image.convert("RGB"), dtype=np.float64)
            mean_rgb = rgb.reshape(-1, 3).mean(axis=0) / 255.0
            row = np.zeros(self.dim)
            row[:3] = mean_rgb
            row[3:] = 0.05 * _hash_vector(rgb.tobytes(), self.dim - 3)
            rows[i] = row
        return _unit(rows)

    def encode_texts(self, texts) -> np.ndarray:
        rows = np.empty((len(texts), self.dim))
        for i, text in enumerate(texts):
            rgb = None
            for token in text.replace(".", " ").replace(",", " ").split():
                try:
                    rgb = ImageColor.getrgb(token.lower())
                    break
                except ValueError:
                    continue
            row = np.zeros(self.dim)
            if rgb is not None:
                row[:3] = np.asarray(rgb, dtype=np.float64) / 255.0
            else:
                row[:] = _hash_vector(text.encode(), self.dim)
            rows[i] = row
        return _unit(rows)


class TransformersClipEncoder:
    """Contrastive checkpoint via ``transformers`` (CLIP-style API)."""

    def __init__(self, model_id: str, device: str = "cpu",
                 batch_size: int = 32):
        import torch
        from transformers import CLIPModel, CLIPProcessor

        self._torch = torch
        self.model = CLIPModel.from_pretrained(model_id).to(device).eval()
        self.processor = CLIPProcessor.from_pretrained(model_id)
        self.device = device
        self.batch_size = int(batch_size)
        with torch.no_grad():
            self.tau = float(1.0 / self.model.logit_scale.exp().item())

    def _batches(self, items):
        for start in range(0, len(items), self.batch_size):
            yield items[start:start + self.batch_size]

    def encode_images(self, images) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for batch in self._batches(list(images)):
                inputs = self.processor(images=batch, return_tensors="pt")
                inputs = {k: v.to(self.device) for k, v in inputs.items()}
                feats = self.model.get_image_features(**inputs)
                chunks.append(feats.cpu().double().numpy())
        return _unit(np.concatenate(chunks, axis=0))

    def encode_texts(self, texts) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for batch in self._batches(list(texts)):
                inputs = self.processor(text=batch, return_tensors="pt",
                                        padding=True, truncation=True)
                inputs = {k: v.to(self.device) for k, v in inputs.items()}
                feats = self.model.get_text_features(**inputs)
                chunks.append(feats.cpu().double().numpy())
        return _unit(np.concatenate(chunks, axis=0))


def make_encoder(model_id: str, device: str = "cpu", batch_size: int = 32):
    """Build a backend from a model identifier.

    ``synthetic:<dim>`` selects the procedural encoder; anything else is
    treated as a checkpoint name for the transformers backend.
    """
    if model_id.startswith("synthetic:"):
        suffix = model_id.split(":", 1)[1] or "16"
        return SyntheticEncoder(dim=int(suffix))
    return TransformersClipEncoder(model_id, device=device,
                                   batch_size=batch_size)
