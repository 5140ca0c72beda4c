"""Backpropagation-free test-time adaptation for embedding classifiers.

Given unit-norm feature vectors and class-prototype vectors, the package
produces adapted class posteriors through closed-form Gaussian
discriminant inference regularized by a zero-shot prior and a
fixed-capacity bank of high-confidence samples. Both a streaming
(one-sample-at-a-time) and a transductive (full-batch) driver are
provided, plus an alternating reference solver, binary dataset formats,
a synthetic benchmark generator with an exact Bayes oracle, and an
evaluation harness.
"""

from .bank import BankEntry, InsertOutcome, KnowledgeBank, fill_top_l, make_entry
from .core import (
    AdaptConfig,
    PredictionRecord,
    check_prototypes,
    check_simplex,
    config_from_dict,
    config_to_dict,
    validate_config,
)
from .evaluate import (
    ablation_matrix,
    aggregate_accuracies,
    dataset_hash,
    evaluate_run,
    ordering_experiment,
    score,
)
from .fusion import bank_votes, bank_votes_batch, fuse, fuse_batch, objective_z
from .gaussian import (
    GaussianModel,
    build_model,
    gda_logits,
    gda_logits_batch,
    log_likelihood,
    means_online,
    means_transductive,
    per_class_covariance_variant,
    pooled_covariance,
    shrinkage_inverse,
)
from .io import (
    Dataset,
    load_embeddings,
    load_labels,
    load_manifest,
    write_embeddings,
    write_labels,
    write_manifest,
)
from .iterative import run_online_iterative, run_transductive_iterative
from .online import OnlineAdapter, RunResult
from .online import run as run_online
from .synth import SynthData, SynthSpec, bayes_oracle, bayes_posterior, generate
from .transductive import run as run_transductive
from .zeroshot import confidence, confidence_batch, zero_shot, zero_shot_batch

__version__ = "0.1.0"

__all__ = [
    "AdaptConfig",
    "BankEntry",
    "Dataset",
    "GaussianModel",
    "InsertOutcome",
    "KnowledgeBank",
    "OnlineAdapter",
    "PredictionRecord",
    "RunResult",
    "SynthData",
    "SynthSpec",
    "ablation_matrix",
    "aggregate_accuracies",
    "bank_votes",
    "bank_votes_batch",
    "bayes_oracle",
    "bayes_posterior",
    "build_model",
    "check_prototypes",
    "check_simplex",
    "confidence",
    "confidence_batch",
    "config_from_dict",
    "config_to_dict",
    "dataset_hash",
    "evaluate_run",
    "fill_top_l",
    "fuse",
    "fuse_batch",
    "gda_logits",
    "gda_logits_batch",
    "generate",
    "load_embeddings",
    "load_labels",
    "load_manifest",
    "log_likelihood",
    "make_entry",
    "means_online",
    "means_transductive",
    "objective_z",
    "ordering_experiment",
    "per_class_covariance_variant",
    "pooled_covariance",
    "run_online",
    "run_online_iterative",
    "run_transductive",
    "run_transductive_iterative",
    "score",
    "shrinkage_inverse",
    "validate_config",
    "write_embeddings",
    "write_labels",
    "write_manifest",
    "zero_shot",
    "zero_shot_batch",
]
