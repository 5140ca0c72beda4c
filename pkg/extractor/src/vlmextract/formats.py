"""Writers for the gaussadapt dataset formats.

Implements the byte-level contract documented in the consumer's
docs/FORMATS.md: little-endian embedding containers (magic ``ADPT``),
label containers (magic ``ADPL``), and the JSON manifest. Files are
written atomically (temp file in the target directory, then rename).
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

EMBEDDING_MAGIC = b"ADPT"
LABEL_MAGIC = b"ADPL"
FORMAT_VERSION = 1
FLAG_PRE_NORMALIZED = 1

_EMB_HEADER = struct.Struct("<4sIIII")
_LAB_HEADER = struct.Struct("<4sII")


def _atomic_write(path, blob: bytes) -> None:
    path = Path(path)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def write_embeddings(path, rows: np.ndarray,
                     pre_normalized: bool = True) -> None:
    rows = np.asarray(rows)
    if rows.ndim != 2:
        raise ValueError(f"expected (N, d) matrix, got shape {rows.shape}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("refusing to write non-finite embeddings")
    payload = np.ascontiguousarray(rows, dtype="<f4")
    flags = FLAG_PRE_NORMALIZED if pre_normalized else 0
    header = _EMB_HEADER.pack(EMBEDDING_MAGIC, FORMAT_VERSION,
                              rows.shape[0], rows.shape[1], flags)
    _atomic_write(path, header + payload.tobytes())


def write_labels(path, labels) -> None:
    labels = np.asarray(labels)
    if labels.ndim != 1 or np.any(labels < -1):
        raise ValueError("labels must be a vector of -1 or class indices")
    header = _LAB_HEADER.pack(LABEL_MAGIC, FORMAT_VERSION, labels.shape[0])
    _atomic_write(path, header + np.ascontiguousarray(
        labels, dtype="<i4").tobytes())


def write_manifest(path, features: str, prototypes: str, labels: str,
                   class_names: list[str], tau: float) -> None:
    doc = {
        "features": features,
        "prototypes": prototypes,
        "labels": labels,
        "class_names": list(class_names),
        "tau": float(tau),
    }
    _atomic_write(path, (json.dumps(doc, indent=2, sort_keys=True)
                         + "\n").encode())
