"""Learners with a uniform fit/predict/serialize contract."""

from __future__ import annotations

import dataclasses
import hashlib
import json

import numpy as np

from ..errors import InvalidConfig
from ..preprocess import FeatureMatrix
from .artifact import (
    CLASS_NAMES,
    FORMAT_VERSION,
    ModelArtifact,
    Prediction,
    load_model,
    predict,
    predict_proba,
    save_model,
)
from .config import MODEL_KINDS, ModelConfig
from .ensemble import fit_forest, fit_gbt
from .glm import fit_glm, fit_length_glm, fit_logreg
from .tree import export_tree, fit_tree, parse_tree_export

_CLASSIFIER_FITTERS = {
    "glm": fit_glm,
    "logreg": fit_logreg,
    "tree": fit_tree,
    "forest": fit_forest,
    "gbt": fit_gbt,
}


def config_hash(config: ModelConfig) -> str:
    """Stable short hash of the full hyperparameter surface."""
    payload = json.dumps(dataclasses.asdict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def fit_model(matrix: FeatureMatrix, config: ModelConfig,
              labels: np.ndarray | None = None) -> ModelArtifact:
    """Fit the model named by config.kind on an encoded matrix.

    Classifiers read labels (default: the matrix's own label vector); the
    length regressor reads the matrix's length vector. The returned
    artifact's metadata records the seed and a hash of the full config.
    """
    if config.kind == "length_glm":
        artifact = fit_length_glm(matrix, matrix.lengths, config)
    else:
        fitter = _CLASSIFIER_FITTERS.get(config.kind)
        if fitter is None:
            raise InvalidConfig(f"unknown model kind {config.kind!r}")
        if labels is None:
            labels = matrix.labels
        if labels is None:
            raise InvalidConfig("classifier fitting needs labels on every row")
        artifact = fitter(matrix, labels, config)
    meta = dict(artifact.training_meta)
    meta["seed"] = config.seed
    meta["config_hash"] = config_hash(config)
    return dataclasses.replace(artifact, training_meta=meta)


__all__ = [
    "CLASS_NAMES",
    "FORMAT_VERSION",
    "MODEL_KINDS",
    "ModelArtifact",
    "ModelConfig",
    "Prediction",
    "config_hash",
    "export_tree",
    "fit_forest",
    "fit_gbt",
    "fit_glm",
    "fit_length_glm",
    "fit_logreg",
    "fit_model",
    "fit_tree",
    "load_model",
    "parse_tree_export",
    "predict",
    "predict_proba",
    "save_model",
]
