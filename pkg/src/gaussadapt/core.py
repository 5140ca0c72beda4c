"""Shared domain types, numeric conventions, and run configuration.

Conventions used throughout the package:

* all internal arithmetic is 64-bit floating point; binary files store
  features as little-endian 32-bit floats,
* feature vectors and class prototypes are L2-normalized,
* soft labels live on the probability simplex (entries >= 0, sum == 1
  within 1e-9),
* argmax ties break toward the lowest class index.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import ConfigError, DimensionMismatch, SimplexViolation

COVARIANCE_MODES = ("shared", "per_class", "identity")
ORDERS = ("as_given", "easy_to_hard", "hard_to_easy", "shuffled")

SIMPLEX_TOL = 1e-9
UNIT_NORM_TOL = 1e-6

# Online / transductive knowledge-bank capacities used when the caller
# does not pick one explicitly.
DEFAULT_BANK_CAPACITY_ONLINE = 16
DEFAULT_BANK_CAPACITY_TRANSDUCTIVE = 6

# Softmax temperature of the zero-shot scorer. Contrastively pretrained
# encoders typically ship a learned logit scale of 100, i.e. tau = 0.01.
DEFAULT_TAU = 0.01


@dataclass(frozen=True)
class AdaptConfig:
    """Run-wide knobs for the adaptation engines.

    ``bank_capacity`` is the per-class buffer size L. ``alpha`` blends the
    bank-estimated class mean with the prototype prior. ``beta`` is the
    explicit prior strength used only by the iterative reference solver
    (the closed-form path fixes ``alpha`` directly; the two correspond via
    alpha = S / (S + beta) at bank weight sum S).

    ``insert_after_predict`` flips the online loop so the current sample
    is admitted to the bank only after its own prediction; the default
    admits first, matching the sequential update-then-predict loop.
    ``freeze_covariance`` makes the iterative solver estimate the
    covariance once instead of refreshing it every outer iteration.
    """

    bank_capacity: int = DEFAULT_BANK_CAPACITY_ONLINE
    alpha: float = 0.9
    tau: float = DEFAULT_TAU
    covariance_mode: str = "shared"
    order: str = "as_given"
    use_bank: bool = True
    update_means: bool = True
    update_covariance: bool = True
    beta: float = 1.0
    seed: int = 0
    insert_after_predict: bool = False
    freeze_covariance: bool = False

    def replace(self, **kwargs) -> "AdaptConfig":
        return replace(self, **kwargs)


def validate_config(cfg: AdaptConfig) -> None:
    """Raise :class:`ConfigError` naming the first violated field."""
    if not isinstance(cfg.bank_capacity, (int, np.integer)) or isinstance(
        cfg.bank_capacity, bool
    ):
        raise ConfigError("bank_capacity", "must be an integer")
    if cfg.bank_capacity < 1:
        raise ConfigError("bank_capacity", "must be >= 1")
    if not 0.0 <= cfg.alpha <= 1.0:
        raise ConfigError("alpha", "must lie in [0, 1]")
    if not cfg.tau > 0.0:
        raise ConfigError("tau", "must be > 0")
    if cfg.covariance_mode not in COVARIANCE_MODES:
        raise ConfigError(
            "covariance_mode", f"must be one of {COVARIANCE_MODES}"
        )
    if cfg.order not in ORDERS:
        raise ConfigError("order", f"must be one of {ORDERS}")
    for flag in ("use_bank", "update_means", "update_covariance",
                 "insert_after_predict", "freeze_covariance"):
        if not isinstance(getattr(cfg, flag), bool):
            raise ConfigError(flag, "must be a boolean")
    if not cfg.beta > 0.0:
        raise ConfigError("beta", "must be > 0")
    if not isinstance(cfg.seed, (int, np.integer)) or isinstance(cfg.seed, bool):
        raise ConfigError("seed", "must be an integer")
    if not -(2**63) <= cfg.seed < 2**63:
        raise ConfigError("seed", "must fit in 64 bits")


def config_to_dict(cfg: AdaptConfig) -> dict:
    """JSON-ready mapping; round-trips exactly through config_from_dict."""
    out = {}
    for f in fields(AdaptConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, np.integer):
            value = int(value)
        elif isinstance(value, np.floating):
            value = float(value)
        out[f.name] = value
    return out


def config_from_dict(data: dict) -> AdaptConfig:
    known = {f.name for f in fields(AdaptConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    cfg = AdaptConfig(**data)
    validate_config(cfg)
    return cfg


@dataclass(frozen=True)
class PredictionRecord:
    """Per-sample outcome of one adaptation step."""

    sample_index: int
    zero_shot: np.ndarray
    adapted: np.ndarray
    confidence: float
    bank_inserted: bool
    argmax_class: int


def check_simplex(p: np.ndarray, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Assert ``p`` is a probability vector; returns it unchanged."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1:
        raise SimplexViolation(f"expected a vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise SimplexViolation("non-finite entries")
    if np.any(p < 0.0):
        raise SimplexViolation(f"negative mass: min entry {p.min()}")
    total = float(p.sum())
    if abs(total - 1.0) > tol:
        raise SimplexViolation(f"mass sums to {total!r}, not 1")
    return p


def as_features(x, dim: int | None = None) -> np.ndarray:
    """Coerce one feature vector to float64 and check its dimension."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {x.shape}")
    if dim is not None and x.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {x.shape[0]}")
    return x


def check_prototypes(protos: np.ndarray) -> np.ndarray:
    """Validate a (K, d) prototype matrix: unit rows, K >= 2, distinct rows."""
    protos = np.asarray(protos, dtype=np.float64)
    if protos.ndim != 2:
        raise DimensionMismatch(
            f"prototypes must be a (K, d) matrix, got shape {protos.shape}"
        )
    if protos.shape[0] < 2:
        raise DimensionMismatch("need at least 2 class prototypes")
    norms = np.linalg.norm(protos, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise DimensionMismatch(
            f"prototype row {worst} has norm {norms[worst]!r}, expected 1"
        )
    for i in range(protos.shape[0]):
        for j in range(i + 1, protos.shape[0]):
            if np.array_equal(protos[i], protos[j]):
                raise DimensionMismatch(f"prototype rows {i} and {j} coincide")
    return protos


def argmax_lowest(values: np.ndarray) -> int:
    """Index of the maximum, ties broken toward the lowest index."""
    return int(np.argmax(values))
