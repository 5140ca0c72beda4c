"""Closed-form fusion of the zero-shot prior, discriminant scores, and
bank-consistency votes.

The adapted label is ``softmax(log yhat + gda + votes)``, computed in log
space with a max shift: discriminant magnitudes grow with the precision
scale and would overflow a naive exponential. Zero prior mass stays zero.
The same three ingredients define the scalar objective whose minimizer
over the simplex the fusion is; the objective is exposed for stationarity
checks.
"""

from __future__ import annotations

import numpy as np

from .bank import KnowledgeBank
from .core import check_simplex
from .errors import DegenerateInput, DimensionMismatch

__all__ = ["bank_votes", "bank_votes_batch", "fuse", "fuse_batch",
           "objective_z"]


def bank_votes(x: np.ndarray, bank: KnowledgeBank) -> np.ndarray:
    """Per-class consistency votes of the bank for one feature vector.

    Each cached entry of class k votes with its class-k soft mass, scaled
    by the clamped cosine similarity max(0, x . x_j). Empty buffers vote 0.
    """
    return bank_votes_batch(np.asarray(x, dtype=np.float64)[None, :], bank)[0]


def bank_votes_batch(X: np.ndarray, bank: KnowledgeBank) -> np.ndarray:
    """Vectorized :func:`bank_votes` over rows of ``X``; returns (N, K)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != bank.dim:
        raise DimensionMismatch(
            f"feature dim {X.shape[-1]} != bank dim {bank.dim}"
        )
    votes = np.zeros((X.shape[0], bank.n_classes))
    for k in range(bank.n_classes):
        entries = bank.entries(k)
        if not entries:
            continue
        feats = np.stack([e.feature for e in entries])        # (L_k, d)
        mass = np.array([e.soft_label[k] for e in entries])   # (L_k,)
        sims = np.maximum(X @ feats.T, 0.0)                   # (N, L_k)
        votes[:, k] = sims @ mass
    return votes


def fuse(yhat: np.ndarray, gda: np.ndarray, votes: np.ndarray) -> np.ndarray:
    """Adapted label ``softmax(log yhat + gda + votes)`` for one sample."""
    yhat = np.asarray(yhat, dtype=np.float64)
    if yhat.sum() == 0.0:
        raise DegenerateInput("prior has no mass on any class")
    yhat = check_simplex(yhat)
    return fuse_batch(yhat[None, :], np.asarray(gda, dtype=np.float64)[None, :],
                      np.asarray(votes, dtype=np.float64)[None, :])[0]


def fuse_batch(yhat: np.ndarray, gda: np.ndarray,
               votes: np.ndarray) -> np.ndarray:
    """Vectorized :func:`fuse`; all arguments (N, K), returns (N, K)."""
    yhat = np.asarray(yhat, dtype=np.float64)
    gda = np.asarray(gda, dtype=np.float64)
    votes = np.asarray(votes, dtype=np.float64)
    if yhat.shape != gda.shape or yhat.shape != votes.shape:
        raise DimensionMismatch(
            f"shapes differ: yhat {yhat.shape}, gda {gda.shape}, "
            f"votes {votes.shape}"
        )
    if np.any(yhat.sum(axis=-1) == 0.0):
        raise DegenerateInput("prior has no mass on any class")
    support = yhat > 0.0
    logits = np.where(
        support,
        np.log(yhat, out=np.full_like(yhat, -np.inf), where=support)
        + gda + votes,
        -np.inf,
    )
    shifted = logits - logits.max(axis=-1, keepdims=True)
    z = np.exp(shifted)
    z /= z.sum(axis=-1, keepdims=True)
    return z


def objective_z(z: np.ndarray, yhat: np.ndarray, loglik: np.ndarray,
                votes: np.ndarray) -> float:
    """Label-dependent part of the regularized objective at ``z``.

    ``-z . loglik + KL(z || yhat) - z . votes`` with the 0 log 0 = 0
    convention. The fusion output minimizes this over the simplex when
    ``loglik`` differs from the discriminant scores only by a
    class-independent shift (a shift moves the objective by a constant).
    """
    z = check_simplex(z, tol=1e-9)
    yhat = np.asarray(yhat, dtype=np.float64)
    loglik = np.asarray(loglik, dtype=np.float64)
    votes = np.asarray(votes, dtype=np.float64)
    pos = z > 0.0
    if np.any(yhat[pos] == 0.0):
        return float(np.inf)
    kl = float(np.sum(z[pos] * (np.log(z[pos]) - np.log(yhat[pos]))))
    return float(-(z @ loglik) + kl - z @ votes)
