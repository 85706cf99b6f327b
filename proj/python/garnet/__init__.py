"""Similarity-map garment classification with early stopping."""

import json

from ._garnet import (
    ConfigError,
    Dataset,
    GarnetError,
    InputError,
    Model,
    NumericError,
    ParseError,
    Task,
    VoteMode,
    export_dataset,
    fit_model,
    ingest,
    kde_density,
    loocv_splits,
    run_cli,
    scott_bandwidth,
    synth_generate,
    triplet_loss,
)
from . import _garnet

__all__ = [
    "ConfigError",
    "Dataset",
    "GarnetError",
    "InputError",
    "Model",
    "NumericError",
    "ParseError",
    "Task",
    "VoteMode",
    "evaluate_loocv",
    "export_dataset",
    "fit_model",
    "ingest",
    "kde_density",
    "loocv_splits",
    "run_cli",
    "scott_bandwidth",
    "synth_generate",
    "triplet_loss",
]


def evaluate_loocv(dataset, task=Task.shape, iterations=20000, seed=1, coverage=0.95,
                   bandwidth=0.0, batch_size=32, margin=1.0):
    """Leave-one-group-out evaluation; returns {"dp": report, "gsp": report}."""
    text = _garnet._evaluate_loocv(dataset, task, iterations, seed, coverage, bandwidth,
                                   batch_size, margin)
    return json.loads(text)
