"""Alternating reference solver validating the one-pass shortcut.

Instead of substituting zero-shot predictions for the latent labels, this
solver alternates exact block updates until the labels stop moving: the
mean update solves the stationarity condition with the current labels
(including, online, the current sample's own term), the covariance is
re-estimated from the bank, and the label update is the same closed-form
fusion. The prototype prior enters the mean update through an explicit
strength ``beta``; the one-pass path's fixed blend corresponds to
``alpha = S / (S + beta)`` at bank weight sum S.

Each outer iteration is monitored by the label-dependent objective plus
the mean-prior quadratic, all under that iteration's precision (terms
that depend only on the precision are constant within an iteration and
are dropped). Both block updates minimize this quantity exactly, so it
never increases within an iteration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bank import BankEntry, KnowledgeBank, fill_top_l
from .core import (
    AdaptConfig,
    PredictionRecord,
    argmax_lowest,
    check_prototypes,
    validate_config,
)
from .errors import DimensionMismatch, EmptyStream
from .fusion import bank_votes_batch, fuse_batch
from .gaussian import (
    GaussianModel,
    build_model,
    gda_logits_batch,
    with_means,
)
from .online import RunResult
from .zeroshot import confidence_batch, zero_shot_batch

__all__ = ["run_transductive_iterative", "run_online_iterative",
           "IterationTrace"]

DEFAULT_MAX_ITERS = 20
DEFAULT_TOL = 1e-5


@dataclass
class IterationTrace:
    """Per-iteration diagnostics of one alternating solve."""

    deltas: list[float]
    objective_before: list[float]  # F(z_old, mu_old) under the iter's model
    objective_after: list[float]   # F(z_new, mu_new) under the same model


def _bank_sums(bank: KnowledgeBank, n_classes: int, dim: int):
    weight = np.array([bank.class_weight_sum(k) for k in range(n_classes)])
    weighted = np.stack(
        [bank.weighted_feature_sum(k) for k in range(n_classes)]
    ) if n_classes else np.zeros((0, dim))
    return weight, weighted


def _mean_update(data_weight, data_weighted, bank_weight, bank_weighted,
                 protos, beta):
    """Stationary means: weighted average of data, bank, and prior terms."""
    beta = np.broadcast_to(np.asarray(beta, dtype=np.float64),
                           (protos.shape[0],))
    num = data_weighted + bank_weighted + beta[:, None] * protos
    den = data_weight + bank_weight + beta
    return num / den[:, None]


def _objective(z, yhat, X, model: GaussianModel, votes, bank_entries,
               protos, beta) -> float:
    """Monitored objective: label terms + mean prior + bank alignment.

    Likelihoods are full Gaussian log-densities under the model's
    regularized covariance; precision-only terms are omitted.
    """
    d = model.dim
    const = -0.5 * (d * np.log(2.0 * np.pi) + model.logdet)
    loglik = gda_logits_batch(X, model) - 0.5 * np.einsum(
        "nd,de,ne->n", X, model.precision, X
    )[:, None] + const
    pos = z > 0
    kl = np.sum(z[pos] * (np.log(z[pos]) - np.log(yhat[pos])))
    label_terms = -np.sum(z * loglik) + kl - np.sum(z * votes)
    dev = protos - model.means
    beta = np.broadcast_to(np.asarray(beta, dtype=np.float64),
                           (protos.shape[0],))
    prior = 0.5 * float(
        np.sum(beta * np.einsum("kd,de,ke->k", dev, model.precision, dev))
    )
    bank_term = 0.0
    for k, entries in enumerate(bank_entries):
        for e in entries:
            delta = e.feature - model.means[k]
            quad = float(delta @ model.precision @ delta)
            bank_term -= e.soft_label[k] * (const - 0.5 * quad)
    return float(label_terms + prior + bank_term)


def run_transductive_iterative(
    X: np.ndarray,
    protos: np.ndarray,
    cfg: AdaptConfig,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    beta=None,
) -> RunResult:
    """Full-batch alternating solve; returns the trace in the result.

    ``beta`` overrides ``cfg.beta`` and may be per-class. Non-convergence
    within ``max_iters`` returns the last iterate with ``converged=False``.
    """
    validate_config(cfg)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    protos = check_prototypes(protos)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyStream("iterative run needs at least one sample")
    if X.shape[1] != protos.shape[1]:
        raise DimensionMismatch(
            f"features d={X.shape[1]} vs prototypes d={protos.shape[1]}"
        )
    start = time.perf_counter()
    n, d = X.shape
    n_classes = protos.shape[0]
    beta = cfg.beta if beta is None else beta

    yhat = zero_shot_batch(X, protos, cfg.tau)
    conf = confidence_batch(yhat)
    if cfg.use_bank:
        bank = fill_top_l(
            ((X[i], yhat[i], conf[i]) for i in range(n)),
            cfg.bank_capacity, n_classes, d,
        )
    else:
        bank = KnowledgeBank(n_classes, cfg.bank_capacity, d)
    bank_weight, bank_weighted = _bank_sums(bank, n_classes, d)
    bank_entries = [bank.entries(k) for k in range(n_classes)]
    votes = (bank_votes_batch(X, bank) if cfg.use_bank
             else np.zeros((n, n_classes)))

    z = yhat.copy()
    model: GaussianModel | None = None
    trace = IterationTrace([], [], [])
    converged = False
    iterations = 0
    for it in range(1, max_iters + 1):
        iterations = it
        mu_old = protos if model is None else model.means
        mu = (_mean_update(z.sum(axis=0), z.T @ X, bank_weight,
                           bank_weighted, protos, beta)
              if cfg.update_means else protos)
        if model is None or (cfg.update_covariance
                             and not cfg.freeze_covariance):
            model = build_model(mu, bank, cfg.covariance_mode,
                                cfg.update_covariance)
        else:
            model = with_means(model, mu)
        trace.objective_before.append(
            _objective(z, yhat, X, with_means(model, mu_old), votes,
                       bank_entries, protos, beta)
        )
        z_new = fuse_batch(yhat, gda_logits_batch(X, model), votes)
        trace.objective_after.append(
            _objective(z_new, yhat, X, model, votes, bank_entries, protos,
                       beta)
        )
        delta = float(np.max(np.abs(z_new - z)))
        trace.deltas.append(delta)
        z = z_new
        if delta < tol:
            converged = True
            break

    records = [
        PredictionRecord(
            sample_index=i,
            zero_shot=yhat[i],
            adapted=z[i],
            confidence=float(conf[i]),
            bank_inserted=any(i in s for s in bank.seq_sets()),
            argmax_class=argmax_lowest(z[i]),
        )
        for i in range(n)
    ]
    elapsed_ms = int(round((time.perf_counter() - start) * 1000.0))
    return RunResult(
        records=records,
        mode="transductive",
        bank_fill=bank.fill_counts(),
        wall_time_ms=elapsed_ms,
        bank=bank,
        model=model,
        processing_order=np.arange(n),
        solver="iterative",
        solver_iterations=iterations,
        converged=converged,
        trace=trace,
    )


def run_online_iterative(
    X: np.ndarray,
    protos: np.ndarray,
    cfg: AdaptConfig,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    beta=None,
) -> RunResult:
    """Streaming variant: the per-step solve keeps the current sample's
    own term in the mean update and alternates it with the label until
    the label is stationary, then moves on exactly like the one-pass loop.
    """
    validate_config(cfg)
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    protos = check_prototypes(protos)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyStream("iterative run needs at least one sample")
    start = time.perf_counter()
    n, d = X.shape
    n_classes = protos.shape[0]
    beta = cfg.beta if beta is None else beta

    from .online import order_indices  # local import avoids a cycle
    indices = order_indices(X, protos, cfg)

    bank = KnowledgeBank(n_classes, cfg.bank_capacity, d)
    records = []
    total_inner = 0
    last_model = build_model(protos, bank, cfg.covariance_mode,
                             cfg.update_covariance)
    for step, i in enumerate(indices):
        x = X[i]
        yhat_i = zero_shot_batch(x[None, :], protos, cfg.tau)[0]
        conf_i = float(confidence_batch(yhat_i[None, :])[0])
        inserted = False
        if cfg.use_bank and not cfg.insert_after_predict:
            outcome = bank.try_insert(
                argmax_lowest(yhat_i), BankEntry(x, yhat_i, conf_i, step)
            )
            inserted = outcome.admitted
        bank_weight, bank_weighted = _bank_sums(bank, n_classes, d)
        votes = (bank_votes_batch(x[None, :], bank)[0] if cfg.use_bank
                 else np.zeros(n_classes))

        z_i = yhat_i.copy()
        model: GaussianModel | None = None
        for it in range(1, max_iters + 1):
            total_inner += 1
            mu = (_mean_update(z_i, z_i[:, None] * x[None, :], bank_weight,
                               bank_weighted, protos, beta)
                  if cfg.update_means else protos)
            if model is None or (cfg.update_covariance
                                 and not cfg.freeze_covariance):
                model = build_model(mu, bank, cfg.covariance_mode,
                                    cfg.update_covariance)
            else:
                model = with_means(model, mu)
            z_new = fuse_batch(
                yhat_i[None, :],
                gda_logits_batch(x[None, :], model),
                votes[None, :],
            )[0]
            delta = float(np.max(np.abs(z_new - z_i)))
            z_i = z_new
            if delta < tol:
                break
        last_model = model
        if cfg.use_bank and cfg.insert_after_predict:
            outcome = bank.try_insert(
                argmax_lowest(yhat_i), BankEntry(x, yhat_i, conf_i, step)
            )
            inserted = outcome.admitted
        records.append(PredictionRecord(
            sample_index=int(i),
            zero_shot=yhat_i,
            adapted=z_i,
            confidence=conf_i,
            bank_inserted=inserted,
            argmax_class=argmax_lowest(z_i),
        ))
    elapsed_ms = int(round((time.perf_counter() - start) * 1000.0))
    return RunResult(
        records=records,
        mode="online",
        bank_fill=bank.fill_counts(),
        wall_time_ms=elapsed_ms,
        bank=bank,
        model=last_model,
        processing_order=indices,
        solver="iterative",
        solver_iterations=total_inner,
        converged=None,
    )
