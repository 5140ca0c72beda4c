"""Binary embedding/label containers and the JSON dataset manifest.

Both containers are little-endian regardless of host byte order. Layout:

* embeddings: 20-byte header ``magic "ADPT" | u32 version=1 | u32 n_rows |
  u32 dim | u32 flags`` followed by ``n_rows * dim`` float32 values,
  row-major. Flag bit 0 declares the rows pre-normalized.
* labels: 12-byte header ``magic "ADPL" | u32 version=1 | u32 n_rows``
  followed by ``n_rows`` signed int32 values; -1 marks an unlabeled row.

Features are stored in 32-bit floats for compactness and widened to
64-bit on load; rows are L2-normalized on load unless flag bit 0 is set
and the stored norms are already within 1e-6 of one (bit-exact
passthrough of extractor output). See docs/FORMATS.md for the full
byte-level description.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import UNIT_NORM_TOL, check_prototypes
from .errors import (
    BadMagic,
    DimensionMismatch,
    JsonError,
    MissingFile,
    NonFiniteValue,
    TruncatedFile,
    VersionMismatch,
    ZeroNormRow,
)

__all__ = [
    "EMBEDDING_MAGIC",
    "LABEL_MAGIC",
    "FORMAT_VERSION",
    "FLAG_PRE_NORMALIZED",
    "write_embeddings",
    "load_embeddings",
    "write_labels",
    "load_labels",
    "Dataset",
    "load_manifest",
    "write_manifest",
]

EMBEDDING_MAGIC = b"ADPT"
LABEL_MAGIC = b"ADPL"
FORMAT_VERSION = 1
FLAG_PRE_NORMALIZED = 1

_EMB_HEADER = struct.Struct("<4sIIII")
_LAB_HEADER = struct.Struct("<4sII")


def write_embeddings(path, data, pre_normalized: bool = False) -> None:
    """Write a (N, d) float matrix as an embedding container."""
    data = np.asarray(data)
    if data.ndim != 2:
        raise DimensionMismatch(f"expected (N, d) matrix, got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise NonFiniteValue(f"refusing to write non-finite values to {path}")
    payload = np.ascontiguousarray(data, dtype="<f4")
    flags = FLAG_PRE_NORMALIZED if pre_normalized else 0
    header = _EMB_HEADER.pack(EMBEDDING_MAGIC, FORMAT_VERSION,
                              data.shape[0], data.shape[1], flags)
    Path(path).write_bytes(header + payload.tobytes())


def load_embeddings(path, normalize: bool = True) -> np.ndarray:
    """Load an embedding container as a float64 (N, d) matrix.

    With ``normalize`` (the default) rows come back unit-norm: stored
    rows already within 1e-6 of unit norm under flag bit 0 pass through
    untouched, anything else is rescaled. ``normalize=False`` returns the
    stored values verbatim (debug dumps of non-feature matrices).
    """
    raw = _read_file(path)
    if len(raw) < _EMB_HEADER.size:
        raise TruncatedFile(
            f"{path}: header needs {_EMB_HEADER.size} bytes, file has "
            f"{len(raw)}"
        )
    magic, version, n_rows, dim, flags = _EMB_HEADER.unpack_from(raw)
    if magic != EMBEDDING_MAGIC:
        raise BadMagic(f"{path}: expected {EMBEDDING_MAGIC!r}, got {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected "
                              f"{FORMAT_VERSION}")
    expected = _EMB_HEADER.size + n_rows * dim * 4
    if len(raw) != expected:
        raise TruncatedFile(
            f"{path}: expected {expected} bytes for {n_rows}x{dim} payload, "
            f"file ends at byte {len(raw)}"
        )
    data = np.frombuffer(raw, dtype="<f4", offset=_EMB_HEADER.size).astype(
        np.float64
    )
    data = data.reshape(n_rows, dim)
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.isfinite(data))[0])
        raise NonFiniteValue(
            f"{path}: non-finite value at row {bad // max(dim, 1)}"
        )
    if not normalize:
        return data
    norms = np.linalg.norm(data, axis=1)
    if np.any(norms == 0.0):
        raise ZeroNormRow(
            f"{path}: row {int(np.flatnonzero(norms == 0.0)[0])} has zero "
            "norm"
        )
    if flags & FLAG_PRE_NORMALIZED and np.max(np.abs(norms - 1.0)) <= UNIT_NORM_TOL:
        return data
    return data / norms[:, None]


def write_labels(path, labels) -> None:
    """Write integer labels (-1 allowed for unlabeled) as a label container."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise DimensionMismatch(f"expected label vector, got {labels.shape}")
    if np.any(labels < -1):
        raise DimensionMismatch("labels must be -1 or class indices")
    payload = np.ascontiguousarray(labels, dtype="<i4")
    header = _LAB_HEADER.pack(LABEL_MAGIC, FORMAT_VERSION, labels.shape[0])
    Path(path).write_bytes(header + payload.tobytes())


def load_labels(path) -> np.ndarray:
    """Load a label container as an int64 vector."""
    raw = _read_file(path)
    if len(raw) < _LAB_HEADER.size:
        raise TruncatedFile(
            f"{path}: header needs {_LAB_HEADER.size} bytes, file has "
            f"{len(raw)}"
        )
    magic, version, n_rows = _LAB_HEADER.unpack_from(raw)
    if magic != LABEL_MAGIC:
        raise BadMagic(f"{path}: expected {LABEL_MAGIC!r}, got {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: version {version}, expected "
                              f"{FORMAT_VERSION}")
    expected = _LAB_HEADER.size + n_rows * 4
    if len(raw) != expected:
        raise TruncatedFile(
            f"{path}: expected {expected} bytes for {n_rows} labels, file "
            f"ends at byte {len(raw)}"
        )
    labels = np.frombuffer(raw, dtype="<i4", offset=_LAB_HEADER.size)
    labels = labels.astype(np.int64)
    if np.any(labels < -1):
        raise DimensionMismatch(f"{path}: label below -1")
    return labels


def _read_file(path) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise MissingFile(str(p))
    return p.read_bytes()


@dataclass(frozen=True)
class Dataset:
    """Validated in-memory view of a manifest's files."""

    X: np.ndarray                     # (N, d) unit-norm features
    protos: np.ndarray                # (K, d) unit-norm prototypes
    labels: np.ndarray | None         # (N,) int64 or None
    class_names: list[str] | None
    tau: float | None                 # manifest override, if any

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return self.protos.shape[0]


def load_manifest(path) -> Dataset:
    """Load a manifest and its referenced files, cross-checking shapes."""
    p = Path(path)
    if not p.is_file():
        raise MissingFile(str(p))
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise JsonError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise JsonError(f"{path}: manifest must be a JSON object")
    for key in ("features", "prototypes"):
        if key not in doc:
            raise JsonError(f"{path}: missing required key {key!r}")
    base = p.parent
    features_path = base / doc["features"]
    protos_path = base / doc["prototypes"]
    X = load_embeddings(features_path)
    protos = check_prototypes(load_embeddings(protos_path))
    if X.shape[1] != protos.shape[1]:
        raise DimensionMismatch(
            f"features {features_path} have d={X.shape[1]} but prototypes "
            f"{protos_path} have d={protos.shape[1]}"
        )
    labels = None
    if doc.get("labels") is not None:
        labels_path = base / doc["labels"]
        labels = load_labels(labels_path)
        if labels.shape[0] != X.shape[0]:
            raise DimensionMismatch(
                f"labels {labels_path} have {labels.shape[0]} rows but "
                f"features {features_path} have {X.shape[0]}"
            )
        if np.any(labels >= protos.shape[0]):
            raise DimensionMismatch(
                f"labels {labels_path} reference class "
                f"{int(labels.max())} but only {protos.shape[0]} prototypes "
                "exist"
            )
    class_names = doc.get("class_names")
    if class_names is not None:
        if (not isinstance(class_names, list)
                or len(class_names) != protos.shape[0]):
            raise JsonError(
                f"{path}: class_names must list exactly {protos.shape[0]} "
                "names"
            )
        class_names = [str(name) for name in class_names]
    tau = doc.get("tau")
    if tau is not None:
        tau = float(tau)
        if not tau > 0:
            raise JsonError(f"{path}: tau must be > 0")
    return Dataset(X, protos, labels, class_names, tau)


def write_manifest(path, features: str, prototypes: str,
                   labels: str | None = None,
                   class_names: list[str] | None = None,
                   tau: float | None = None) -> None:
    """Write a manifest referencing sibling files by relative path."""
    doc: dict = {"features": features, "prototypes": prototypes}
    if labels is not None:
        doc["labels"] = labels
    if class_names is not None:
        doc["class_names"] = list(class_names)
    if tau is not None:
        doc["tau"] = float(tau)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
