"""Metrics, ablation and ordering matrices, and the machine-readable report.

Reports are plain JSON objects validated against an embedded schema (see
docs/REPORT.md). Accuracies are fractions; pretty-printed tables show
percentages. Every report records a SHA-256 hash of the features it was
computed from, so rows of one experiment can be checked for provenance.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np
from jsonschema import validate as _validate_schema

from . import iterative, online, transductive
from .core import AdaptConfig, config_to_dict
from .errors import NoLabeledSamples, OrderingRequiresOnline
from .online import RunResult

__all__ = [
    "REPORT_SCHEMA",
    "dataset_hash",
    "score",
    "report_json",
    "run_mode",
    "ablation_matrix",
    "ordering_experiment",
    "aggregate_accuracies",
    "format_report_table",
]

REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "mode", "solver", "config", "n_samples", "n_unlabeled",
        "top1_accuracy", "per_class_accuracy", "zero_shot_accuracy",
        "gain", "bank_fill", "wall_time_ms", "dataset_hash",
    ],
    "properties": {
        "mode": {"enum": ["online", "transductive"]},
        "solver": {"enum": ["closed", "iterative"]},
        "config": {"type": "object"},
        "n_samples": {"type": "integer", "minimum": 0},
        "n_unlabeled": {"type": "integer", "minimum": 0},
        "top1_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "per_class_accuracy": {
            "type": "array",
            "items": {
                "anyOf": [
                    {"type": "number", "minimum": 0, "maximum": 1},
                    {"type": "null"},
                ]
            },
        },
        "zero_shot_accuracy": {"type": "number", "minimum": 0, "maximum": 1},
        "gain": {"type": "number", "minimum": -1, "maximum": 1},
        "bank_fill": {
            "type": "array", "items": {"type": "integer", "minimum": 0},
        },
        "wall_time_ms": {"type": "integer", "minimum": 0},
        "dataset_hash": {"type": "string"},
        "solver_iterations": {
            "anyOf": [{"type": "integer", "minimum": 0}, {"type": "null"}]
        },
    },
    "additionalProperties": False,
}


def dataset_hash(X: np.ndarray) -> str:
    """SHA-256 over the consumed feature matrix, canonicalized.

    Hashes the shape header plus row-major little-endian float64 bytes of
    the features exactly as the adapters see them (post-normalization).
    """
    X = np.ascontiguousarray(np.asarray(X, dtype="<f8"))
    h = hashlib.sha256()
    h.update(b"GADP-FEATURES-v1")
    h.update(np.array(X.shape, dtype="<u8").tobytes())
    h.update(X.tobytes())
    return h.hexdigest()


def score(result: RunResult, labels: np.ndarray, cfg: AdaptConfig,
          features_digest: str, n_classes: int) -> dict:
    """Assemble the report for one finished run.

    Samples labeled -1 are excluded from every accuracy and counted in
    ``n_unlabeled``. Raises :class:`NoLabeledSamples` when nothing is left.
    """
    labels = np.asarray(labels)
    adapted_hits = np.zeros(n_classes, dtype=np.int64)
    class_total = np.zeros(n_classes, dtype=np.int64)
    zero_hits = 0
    scored = 0
    for record in result.records:
        true = int(labels[record.sample_index])
        if true < 0:
            continue
        scored += 1
        class_total[true] += 1
        if record.argmax_class == true:
            adapted_hits[true] += 1
        if int(np.argmax(record.zero_shot)) == true:
            zero_hits += 1
    if scored == 0:
        raise NoLabeledSamples("no labeled samples to score")
    top1 = float(adapted_hits.sum() / scored)
    zero = float(zero_hits / scored)
    per_class = [
        float(adapted_hits[k] / class_total[k]) if class_total[k] else None
        for k in range(n_classes)
    ]
    report = {
        "mode": result.mode,
        "solver": result.solver,
        "config": config_to_dict(cfg),
        "n_samples": scored,
        "n_unlabeled": len(result.records) - scored,
        "top1_accuracy": top1,
        "per_class_accuracy": per_class,
        "zero_shot_accuracy": zero,
        "gain": top1 - zero,
        "bank_fill": [int(c) for c in result.bank_fill],
        "wall_time_ms": int(result.wall_time_ms),
        "dataset_hash": features_digest,
        "solver_iterations": result.solver_iterations,
    }
    _validate_schema(report, REPORT_SCHEMA)
    return report


def report_json(report: dict) -> str:
    """Canonical JSON serialization used by the CLI and the library."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run_mode(X, protos, cfg: AdaptConfig, mode: str, solver: str = "closed",
             max_iters: int = iterative.DEFAULT_MAX_ITERS,
             tol: float = iterative.DEFAULT_TOL) -> RunResult:
    """Dispatch one run by mode and solver."""
    if mode not in ("online", "transductive"):
        raise ValueError(f"unknown mode {mode!r}")
    if solver == "closed":
        runner = online.run if mode == "online" else transductive.run
        return runner(X, protos, cfg)
    if solver != "iterative":
        raise ValueError(f"unknown solver {solver!r}")
    if mode == "online":
        return iterative.run_online_iterative(X, protos, cfg, max_iters, tol)
    return iterative.run_transductive_iterative(X, protos, cfg, max_iters,
                                                tol)


def evaluate_run(X, protos, labels, cfg: AdaptConfig, mode: str,
                 solver: str = "closed",
                 max_iters: int = iterative.DEFAULT_MAX_ITERS,
                 tol: float = iterative.DEFAULT_TOL) -> dict:
    """Run one configuration and score it; the CLI's workhorse."""
    result = run_mode(X, protos, cfg, mode, solver, max_iters, tol)
    return score(result, labels, cfg, dataset_hash(X), protos.shape[0])


ABLATION_ROWS = [
    (False, False, False),
    (False, False, True),
    (False, True, False),
    (False, True, True),
    (True, False, False),
    (True, False, True),
    (True, True, False),
    (True, True, True),
]


def ablation_matrix(X, protos, labels, cfg: AdaptConfig,
                    mode: str = "online") -> list[dict]:
    """All 2^3 combinations of {bank, mean update, covariance update}.

    Row order matches :data:`ABLATION_ROWS`: bank off first, each group
    sweeping covariance fastest. Every row reports against the same
    feature hash.
    """
    digest = dataset_hash(X)
    reports = []
    for use_bank, upd_means, upd_cov in ABLATION_ROWS:
        row_cfg = cfg.replace(use_bank=use_bank, update_means=upd_means,
                              update_covariance=upd_cov)
        result = run_mode(X, protos, row_cfg, mode)
        reports.append(
            score(result, labels, row_cfg, digest, protos.shape[0])
        )
    return reports


ORDERING_ROWS = ["shuffled", "easy_to_hard", "hard_to_easy"]


def ordering_experiment(X, protos, labels, cfg: AdaptConfig,
                        mode: str = "online") -> list[dict]:
    """Shuffled vs confidence-ordered streams (online mode only)."""
    if mode != "online":
        raise OrderingRequiresOnline(
            "input-ordering comparisons require online mode"
        )
    digest = dataset_hash(X)
    reports = []
    for order in ORDERING_ROWS:
        row_cfg = cfg.replace(order=order)
        result = online.run(X, protos, row_cfg)
        reports.append(
            score(result, labels, row_cfg, digest, protos.shape[0])
        )
    return reports


def aggregate_accuracies(reports: list[dict], key: str = "top1_accuracy"):
    """Mean and standard deviation of one metric across seed runs."""
    values = np.array([r[key] for r in reports], dtype=np.float64)
    return {
        "mean": float(values.mean()),
        "std": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
        "n": int(len(values)),
        "seeds": [r["config"]["seed"] for r in reports],
    }


def format_report_table(reports: list[dict], label_fn=None) -> str:
    """Fixed-width table of one report list, accuracies in percent."""
    rows = []
    header = f"{'run':<28} {'acc%':>7} {'zs%':>7} {'gain%':>7} {'time':>8}"
    rows.append(header)
    rows.append("-" * len(header))
    for idx, rep in enumerate(reports):
        if label_fn is not None:
            label = label_fn(rep)
        else:
            label = f"{rep['mode']}/{rep['solver']}#{idx}"
        rows.append(
            f"{label:<28} {100 * rep['top1_accuracy']:>7.2f} "
            f"{100 * rep['zero_shot_accuracy']:>7.2f} "
            f"{100 * rep['gain']:>7.2f} {rep['wall_time_ms']:>6}ms"
        )
    return "\n".join(rows)
