"""Class-conditional Gaussian statistics and discriminant scores.

Class means blend a bank-weighted empirical mean with the prototype
prior. A single covariance pooled over all bank entries is inverted
through a trace-shrinkage ridge, ``d * ((N - 1) * cov + tr(cov) * I)^-1``,
which stays well conditioned at any bank fill level; with fewer than two
cached samples the precision falls back to the identity, reducing the
discriminant to a prototype classifier. Discriminant scores are affine,
``w_k . x + b_k`` with ``w_k = P mu_k`` and ``b_k = -mu_k . P mu_k / 2``,
equal to the shared-covariance Gaussian log-density up to class-independent
terms. A per-class covariance variant (quadratic scores) is provided for
comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .bank import KnowledgeBank
from .errors import DimensionMismatch, SingularMatrix

__all__ = [
    "GaussianModel",
    "means_online",
    "means_transductive",
    "pooled_covariance",
    "shrinkage_inverse",
    "build_model",
    "gda_logits",
    "log_likelihood",
    "per_class_covariance_variant",
]

_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class GaussianModel:
    """Immutable snapshot of the discriminant statistics.

    ``precision`` is the shrinkage-regularized inverse covariance;
    ``logdet`` is the log-determinant of the regularized covariance it
    inverts (0 in the identity fallback). In ``per_class`` mode the shared
    fields hold identity placeholders and the ``class_*`` stacks carry the
    per-class statistics instead.
    """

    means: np.ndarray        # (K, d)
    covariance: np.ndarray   # (d, d) pooled, zeros if never estimated
    precision: np.ndarray    # (d, d)
    gda_weights: np.ndarray  # (K, d)
    gda_bias: np.ndarray     # (K,)
    n_bank: int
    logdet: float
    mode: str = "shared"     # "shared" | "identity" | "per_class"
    class_covariances: np.ndarray | None = None  # (K, d, d)
    class_precisions: np.ndarray | None = None   # (K, d, d)
    class_logdets: np.ndarray | None = None      # (K,)
    class_counts: np.ndarray | None = None       # (K,) ints

    @property
    def n_classes(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


def means_online(bank: KnowledgeBank, protos: np.ndarray,
                 alpha: float) -> np.ndarray:
    """Blend of bank-weighted class means with the prototype prior.

    Class k with zero accumulated soft mass keeps its prototype.
    """
    protos = np.asarray(protos, dtype=np.float64)
    means = protos.copy()
    for k in range(protos.shape[0]):
        s = bank.class_weight_sum(k)
        if s > 0.0:
            empirical = bank.weighted_feature_sum(k) / s
            means[k] = alpha * empirical + (1.0 - alpha) * protos[k]
    return means


def means_transductive(X: np.ndarray, yhat: np.ndarray, bank: KnowledgeBank,
                       protos: np.ndarray, alpha: float) -> np.ndarray:
    """One-pass class means from the whole batch plus the bank.

    The empirical mean of class k pools the soft-mass-weighted batch term
    with the bank term; a class with zero total mass keeps its prototype.
    """
    X = np.asarray(X, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    protos = np.asarray(protos, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != protos.shape[1]:
        raise DimensionMismatch(
            f"features {X.shape} incompatible with prototypes {protos.shape}"
        )
    if yhat.shape != (X.shape[0], protos.shape[0]):
        raise DimensionMismatch(
            f"soft labels {yhat.shape} incompatible with "
            f"N={X.shape[0]}, K={protos.shape[0]}"
        )
    K = protos.shape[0]
    weight = yhat.sum(axis=0)                     # (K,)
    weighted = yhat.T @ X                         # (K, d)
    for k in range(K):
        weight[k] += bank.class_weight_sum(k)
        weighted[k] += bank.weighted_feature_sum(k)
    means = protos.copy()
    nonzero = weight > 0.0
    means[nonzero] = (
        alpha * (weighted[nonzero] / weight[nonzero, None])
        + (1.0 - alpha) * protos[nonzero]
    )
    return means


def _class_deviations(bank: KnowledgeBank, means: np.ndarray, k: int):
    entries = bank.entries(k)
    if not entries:
        return np.empty((0, means.shape[1]))
    return np.stack([e.feature for e in entries]) - means[k]


def pooled_covariance(bank: KnowledgeBank,
                      means: np.ndarray) -> tuple[np.ndarray, int]:
    """Covariance of bank features around their class means, pooled.

    Returns (cov, n_bank); an empty bank yields (zeros, 0).
    """
    means = np.asarray(means, dtype=np.float64)
    d = means.shape[1]
    deviations = [
        _class_deviations(bank, means, k) for k in range(means.shape[0])
    ]
    n_bank = sum(dev.shape[0] for dev in deviations)
    if n_bank == 0:
        return np.zeros((d, d)), 0
    stacked = np.concatenate(deviations, axis=0)
    return stacked.T @ stacked / n_bank, n_bank


def _shrinkage_solve(cov: np.ndarray, n_bank: int,
                     d: int) -> tuple[np.ndarray, float]:
    """Regularized precision plus the log-det of the matrix it inverts.

    Returns (d * ((n-1) cov + tr(cov) I)^-1, logdet of the regularized
    covariance ((n-1) cov + tr(cov) I) / d). Falls back to the identity
    (logdet 0) when fewer than two samples back the estimate or the
    covariance has zero trace.
    """
    trace = float(np.trace(cov))
    if n_bank < 2 or trace == 0.0:
        return np.eye(d), 0.0
    regularized = (n_bank - 1) * cov + trace * np.eye(d)
    try:
        factor = scipy.linalg.cho_factor(regularized, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SingularMatrix(
            f"regularized covariance failed factorization: {exc}"
        ) from exc
    precision = d * scipy.linalg.cho_solve(factor, np.eye(d))
    precision = (precision + precision.T) / 2.0
    logdet_reg = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return precision, logdet_reg - d * float(np.log(d))


def shrinkage_inverse(cov: np.ndarray, n_bank: int, d: int) -> np.ndarray:
    """The trace-shrinkage ridge precision; see :func:`_shrinkage_solve`."""
    cov = np.asarray(cov, dtype=np.float64)
    return _shrinkage_solve(cov, n_bank, d)[0]


def _affine_terms(means: np.ndarray, precision: np.ndarray):
    weights = means @ precision
    bias = -0.5 * np.einsum("kd,kd->k", weights, means)
    return weights, bias


def build_model(means: np.ndarray, bank: KnowledgeBank,
                covariance_mode: str = "shared",
                update_covariance: bool = True) -> GaussianModel:
    """Assemble a model snapshot from the current means and bank state."""
    means = np.asarray(means, dtype=np.float64)
    K, d = means.shape
    n_bank = bank.total_count()
    if not update_covariance or covariance_mode == "identity":
        precision, logdet = np.eye(d), 0.0
        weights, bias = _affine_terms(means, precision)
        return GaussianModel(means, np.zeros((d, d)), precision, weights,
                             bias, n_bank, logdet, mode="identity")
    if covariance_mode == "per_class":
        covs, precisions, logdets, counts = per_class_covariance_variant(
            bank, means
        )
        precision, logdet = np.eye(d), 0.0
        weights, bias = _affine_terms(means, precision)
        return GaussianModel(means, np.zeros((d, d)), precision, weights,
                             bias, n_bank, logdet, mode="per_class",
                             class_covariances=covs,
                             class_precisions=precisions,
                             class_logdets=logdets,
                             class_counts=counts)
    cov, n_bank = pooled_covariance(bank, means)
    precision, logdet = _shrinkage_solve(cov, n_bank, d)
    weights, bias = _affine_terms(means, precision)
    return GaussianModel(means, cov, precision, weights, bias, n_bank,
                         logdet, mode="shared")


def with_means(model: GaussianModel, means: np.ndarray) -> GaussianModel:
    """New snapshot with updated means but the same (frozen) precision."""
    means = np.asarray(means, dtype=np.float64)
    weights, bias = _affine_terms(means, model.precision)
    return GaussianModel(means, model.covariance, model.precision, weights,
                         bias, model.n_bank, model.logdet, mode=model.mode,
                         class_covariances=model.class_covariances,
                         class_precisions=model.class_precisions,
                         class_logdets=model.class_logdets,
                         class_counts=model.class_counts)


def prototype_model(protos: np.ndarray) -> GaussianModel:
    """Identity-precision model around the raw prototypes (cold start)."""
    protos = np.asarray(protos, dtype=np.float64)
    K, d = protos.shape
    weights, bias = _affine_terms(protos, np.eye(d))
    return GaussianModel(protos, np.zeros((d, d)), np.eye(d), weights, bias,
                         0, 0.0, mode="identity")


def gda_logits(x: np.ndarray, model: GaussianModel) -> np.ndarray:
    """Discriminant score per class for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.dim:
        raise DimensionMismatch(
            f"feature dim {x.shape[-1]} != model dim {model.dim}"
        )
    if model.mode == "per_class":
        dev = x - model.means                                    # (K, d)
        quad = np.einsum("kd,kde,ke->k", dev, model.class_precisions, dev)
        return -0.5 * (model.class_logdets + quad)
    return model.gda_weights @ x + model.gda_bias


def gda_logits_batch(X: np.ndarray, model: GaussianModel) -> np.ndarray:
    """Vectorized :func:`gda_logits`; returns (N, K)."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[-1] != model.dim:
        raise DimensionMismatch(
            f"feature dim {X.shape[-1]} != model dim {model.dim}"
        )
    if model.mode == "per_class":
        dev = X[:, None, :] - model.means[None, :, :]            # (N, K, d)
        quad = np.einsum("nkd,kde,nke->nk", dev, model.class_precisions, dev)
        return -0.5 * (model.class_logdets[None, :] + quad)
    return X @ model.gda_weights.T + model.gda_bias


def log_likelihood(x: np.ndarray, k: int, model: GaussianModel) -> float:
    """Gaussian log-density of ``x`` under class ``k``.

    Evaluated against the regularized covariance whose inverse is the
    model precision, using the log-determinant carried by the model.
    """
    x = np.asarray(x, dtype=np.float64)
    dev = x - model.means[k]
    if model.mode == "per_class":
        precision = model.class_precisions[k]
        logdet = float(model.class_logdets[k])
    else:
        precision = model.precision
        logdet = model.logdet
    quad = float(dev @ precision @ dev)
    return -0.5 * (model.dim * _LOG_2PI + logdet + quad)


def per_class_covariance_variant(bank: KnowledgeBank, means: np.ndarray):
    """Per-class covariances with the same shrinkage rule per class.

    Returns (covariances, precisions, logdets, counts); a class with fewer
    than two cached samples falls back to the identity precision.
    """
    means = np.asarray(means, dtype=np.float64)
    K, d = means.shape
    covs = np.zeros((K, d, d))
    precisions = np.zeros((K, d, d))
    logdets = np.zeros(K)
    counts = np.zeros(K, dtype=np.int64)
    for k in range(K):
        dev = _class_deviations(bank, means, k)
        counts[k] = dev.shape[0]
        if counts[k] > 0:
            covs[k] = dev.T @ dev / counts[k]
        precisions[k], logdets[k] = _shrinkage_solve(covs[k], counts[k], d)
    return covs, precisions, logdets, counts
