"""Per-class fixed-capacity buffers of high-confidence samples.

Each class buffer retains at most ``capacity`` entries. A candidate is
admitted while the buffer has room; once full it must strictly exceed the
lowest stored confidence, in which case it replaces that entry. Ties on
confidence are rejected at admission time; the eviction victim among
equal-confidence minima is the oldest (lowest sequence number), so newer
entries win ties. Buffers are min-heaps keyed by (confidence, seq), giving
O(log L) mutation.

Stored entries keep their full soft label, not just the argmax mass: the
mean and covariance estimators weight each entry by its per-class soft
mass, and the consistency votes read the same quantity.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .core import argmax_lowest, check_simplex
from .errors import ClassIndexOutOfRange
from .zeroshot import confidence as _confidence

__all__ = [
    "BankEntry",
    "InsertOutcome",
    "KnowledgeBank",
    "make_entry",
    "fill_top_l",
]

_CONFIDENCE_RECHECK_TOL = 1e-12


@dataclass(frozen=True)
class BankEntry:
    """One cached sample: feature, soft label at insertion, confidence, seq."""

    feature: np.ndarray
    soft_label: np.ndarray
    confidence: float
    seq: int


@dataclass(frozen=True)
class InsertOutcome:
    status: str  # "inserted" | "replaced" | "rejected"
    evicted_seq: int | None = None

    @property
    def admitted(self) -> bool:
        return self.status != "rejected"


def make_entry(feature, soft_label, seq: int) -> BankEntry:
    """Build an entry, deriving its confidence from the soft label."""
    feature = np.asarray(feature, dtype=np.float64)
    soft_label = check_simplex(soft_label)
    return BankEntry(feature, soft_label, _confidence(soft_label), int(seq))


class KnowledgeBank:
    """K fixed-capacity buffers of :class:`BankEntry` values."""

    def __init__(self, n_classes: int, capacity: int, dim: int):
        if n_classes < 1:
            raise ValueError("need at least one class")
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.n_classes = int(n_classes)
        self.capacity = int(capacity)
        self.dim = int(dim)
        # Heaps of (confidence, seq, entry); the root is the eviction victim.
        self._heaps: list[list[tuple[float, int, BankEntry]]] = [
            [] for _ in range(n_classes)
        ]

    # -- mutation ---------------------------------------------------------

    def try_insert(self, class_k: int, entry: BankEntry) -> InsertOutcome:
        """Offer ``entry`` to buffer ``class_k``; see the admission rule above."""
        heap = self._heap(class_k)
        recomputed = _confidence(entry.soft_label)
        if abs(recomputed - entry.confidence) > _CONFIDENCE_RECHECK_TOL:
            raise ValueError(
                f"entry confidence {entry.confidence!r} does not match its "
                f"soft label (recomputed {recomputed!r})"
            )
        key = (entry.confidence, entry.seq, entry)
        if len(heap) < self.capacity:
            heapq.heappush(heap, key)
            return InsertOutcome("inserted")
        lowest_conf = heap[0][0]
        if entry.confidence > lowest_conf:
            evicted = heapq.heappushpop(heap, key)
            return InsertOutcome("replaced", evicted_seq=evicted[1])
        return InsertOutcome("rejected")

    # -- queries ----------------------------------------------------------

    def entries(self, class_k: int) -> list[BankEntry]:
        """Snapshot of buffer ``class_k``, ordered by ascending seq."""
        heap = self._heap(class_k)
        return [item[2] for item in sorted(heap, key=lambda it: it[1])]

    def class_weight_sum(self, class_k: int) -> float:
        """Sum of the per-class soft mass over buffer ``class_k``."""
        return float(
            sum(e.soft_label[class_k] for e in self.entries(class_k))
        )

    def weighted_feature_sum(self, class_k: int) -> np.ndarray:
        """Soft-mass-weighted feature sum over buffer ``class_k``."""
        entries = self.entries(class_k)
        out = np.zeros(self.dim, dtype=np.float64)
        for e in entries:
            out += e.soft_label[class_k] * e.feature
        return out

    def total_count(self) -> int:
        """Total number of cached samples across all buffers."""
        return sum(len(h) for h in self._heaps)

    def fill_counts(self) -> list[int]:
        return [len(h) for h in self._heaps]

    def min_confidence(self, class_k: int) -> float | None:
        heap = self._heap(class_k)
        return heap[0][0] if heap else None

    def seq_sets(self) -> list[set[int]]:
        """Per-class sets of stored sequence numbers (for oracle comparison)."""
        return [{item[1] for item in heap} for heap in self._heaps]

    def to_debug_dump(self) -> list[list[dict]]:
        """JSON-ready state: K arrays of {seq, confidence, argmax} records.

        Entries are listed by descending confidence, newer first on ties.
        """
        dump = []
        for k in range(self.n_classes):
            items = sorted(
                self._heap(k), key=lambda it: (-it[0], -it[1])
            )
            dump.append(
                [
                    {
                        "seq": item[1],
                        "confidence": item[0],
                        "argmax": argmax_lowest(item[2].soft_label),
                    }
                    for item in items
                ]
            )
        return dump

    def _heap(self, class_k: int):
        if not 0 <= class_k < self.n_classes:
            raise ClassIndexOutOfRange(
                f"class {class_k} outside [0, {self.n_classes})"
            )
        return self._heaps[class_k]


def fill_top_l(candidates, capacity: int, n_classes: int | None = None,
               dim: int | None = None) -> KnowledgeBank:
    """Build a bank holding the top-``capacity`` confident samples per class.

    ``candidates`` is a sequence of (feature, soft_label, confidence)
    triples; each sample's pseudo-class is the argmax of its soft label and
    its seq is its position in the sequence. Ties on confidence keep the
    higher seq. A class claimed by fewer than ``capacity`` samples stores
    all of them; an unclaimed class stays empty.
    """
    candidates = list(candidates)
    if n_classes is None or dim is None:
        if not candidates:
            raise ValueError("cannot infer bank shape from zero candidates")
        first_feature, first_label, _ = candidates[0]
        n_classes = len(np.asarray(first_label))
        dim = len(np.asarray(first_feature))
    bank = KnowledgeBank(n_classes, capacity, dim)
    per_class: list[list[tuple[float, int, BankEntry]]] = [
        [] for _ in range(n_classes)
    ]
    for seq, (feature, soft_label, conf) in enumerate(candidates):
        soft_label = np.asarray(soft_label, dtype=np.float64)
        entry = BankEntry(
            np.asarray(feature, dtype=np.float64),
            soft_label,
            float(conf),
            seq,
        )
        per_class[argmax_lowest(soft_label)].append((float(conf), seq, entry))
    for k in range(n_classes):
        chosen = sorted(per_class[k], key=lambda it: (-it[0], -it[1]))[:capacity]
        for conf, seq, entry in chosen:
            heapq.heappush(bank._heaps[k], (conf, seq, entry))
    return bank
