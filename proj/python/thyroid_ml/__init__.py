"""Python bindings for the thyroid nodule malignancy toolkit."""

import json

from ._core import (
    ComputationError,
    ConfigError,
    DataError,
    Dataset,
    EncodedMatrix,
    Error,
    TrainedModel,
    auroc,
    encode,
    evaluate_scores,
    load_csv,
    metrics_from_confusion,
    model_kinds,
    parse_csv,
    preprocess,
    run_command,
    synthesize,
    train,
)
from . import _core

__all__ = [
    "ComputationError",
    "ConfigError",
    "DataError",
    "Dataset",
    "EncodedMatrix",
    "Error",
    "TrainedModel",
    "auroc",
    "cross_validate",
    "encode",
    "evaluate_scores",
    "importance",
    "load_csv",
    "metrics_from_confusion",
    "model_kinds",
    "parse_csv",
    "preprocess",
    "run_command",
    "summary",
    "synthesize",
    "train",
]


def summary(dataset):
    """Cohort summary of a dataset as a dict."""
    return json.loads(dataset.summary_json())


def cross_validate(encoded, kinds=None, k=10, reps=1, seed=1, workers=1, params=None):
    """Patient-grouped repeated k-fold cross-validation; returns the result as a dict."""
    kinds = list(kinds) if kinds is not None else model_kinds()
    return json.loads(_core.run_cv_json(encoded, kinds, k, reps, seed, workers, params or {}))


def importance(encoded, kinds=None, k=10, reps=1, shuffle_reps=10, seed=1, workers=1):
    """Held-out permutation importance aggregated over models; returns a dict."""
    kinds = list(kinds) if kinds is not None else model_kinds()
    return json.loads(_core.importance_json(encoded, kinds, k, reps, shuffle_reps, seed, workers))
