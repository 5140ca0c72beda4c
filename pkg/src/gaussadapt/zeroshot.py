"""Zero-shot scoring over precomputed embeddings and its confidence measure.

Scores are softmaxed cosine similarities between a unit-norm feature
vector and unit-norm class prototypes, scaled by a temperature ``tau``.
Confidence is the negative Shannon entropy of the score vector, in nats:
0 for a one-hot label, -ln K for a uniform one.
"""

from __future__ import annotations

import numpy as np

from .core import check_simplex
from .errors import DimensionMismatch

__all__ = ["zero_shot", "zero_shot_batch", "confidence", "confidence_batch"]


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    # Max-shift keeps the exponentials finite at small tau.
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def zero_shot(x: np.ndarray, protos: np.ndarray, tau: float) -> np.ndarray:
    """Class probabilities of one feature vector against the prototypes.

    Parameters
    ----------
    x : (d,) array
        Unit-norm feature vector.
    protos : (K, d) array
        Unit-norm class prototypes.
    tau : float
        Softmax temperature; similarities are divided by it.
    """
    x = np.asarray(x, dtype=np.float64)
    protos = np.asarray(protos, dtype=np.float64)
    if x.shape[-1] != protos.shape[-1]:
        raise DimensionMismatch(
            f"feature dim {x.shape[-1]} != prototype dim {protos.shape[-1]}"
        )
    probs = _softmax_rows(protos @ x / tau)
    return check_simplex(probs)


def zero_shot_batch(X: np.ndarray, protos: np.ndarray, tau: float) -> np.ndarray:
    """Vectorized :func:`zero_shot` over the rows of ``X``; returns (N, K)."""
    X = np.asarray(X, dtype=np.float64)
    protos = np.asarray(protos, dtype=np.float64)
    if X.shape[-1] != protos.shape[-1]:
        raise DimensionMismatch(
            f"feature dim {X.shape[-1]} != prototype dim {protos.shape[-1]}"
        )
    return _softmax_rows(X @ protos.T / tau)


def confidence(y: np.ndarray) -> float:
    """Negative entropy of a soft label, in nats; higher is more confident.

    Uses the convention 0 * log 0 = 0, so a one-hot label scores exactly 0
    and a uniform label scores -ln K.
    """
    y = check_simplex(y)
    return float(confidence_batch(y[None, :])[0])


def confidence_batch(Y: np.ndarray) -> np.ndarray:
    """Row-wise negative entropy of an (N, K) matrix of soft labels."""
    Y = np.asarray(Y, dtype=np.float64)
    terms = np.zeros_like(Y)
    np.multiply(Y, np.log(Y, out=np.full_like(Y, -np.inf), where=Y > 0),
                out=terms, where=Y > 0)
    return terms.sum(axis=-1)
