"""Trained-model container, prediction dispatch and JSON persistence."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from ..cohort import N_CLASSES, OUTCOMES
from ..errors import CorruptFile, FingerprintMismatch, VersionMismatch, WrongKind
from ..preprocess import FeatureMatrix, FeatureSchema
from .config import MODEL_KINDS

FORMAT_VERSION = 1

CLASS_NAMES = tuple(label.value for label in OUTCOMES)


@dataclass(frozen=True)
class ModelArtifact:
    """Immutable trained model: kind, parameters and provenance.

    ``params`` is a kind-specific JSON-able mapping; ``training_meta``
    records iterations, the final objective value and wall-clock seconds.
    ``flags`` collects non-fatal fit diagnostics (e.g. a singular system
    resolved by raising the ridge penalty).
    """

    kind: str
    schema: FeatureSchema
    classes: tuple[str, ...] | None
    params: Mapping
    training_meta: Mapping
    flags: tuple[str, ...] = field(default_factory=tuple)

    @property
    def schema_fingerprint(self) -> str:
        return self.schema.fingerprint

    @property
    def is_classifier(self) -> bool:
        return self.kind != "length_glm"


@dataclass(frozen=True)
class Prediction:
    """Classifier output: per-row probability simplex plus argmax class."""

    probabilities: np.ndarray  # (n, 6)
    class_indices: np.ndarray  # (n,)

    @property
    def labels(self) -> list[str]:
        return [CLASS_NAMES[i] for i in self.class_indices]


def _matrix_of(rows: FeatureMatrix | np.ndarray, artifact: ModelArtifact) -> np.ndarray:
    if isinstance(rows, FeatureMatrix):
        if rows.schema.fingerprint != artifact.schema_fingerprint:
            raise FingerprintMismatch(
                f"rows encoded under schema {rows.schema.fingerprint}, "
                f"model trained under {artifact.schema_fingerprint}")
        return rows.X
    X = np.asarray(rows, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != artifact.schema.n_columns:
        raise FingerprintMismatch(
            f"rows have {X.shape[1]} columns, model schema expects {artifact.schema.n_columns}")
    return X


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _with_intercept(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _tree_route(nodes: list, X: np.ndarray) -> np.ndarray:
    """Leaf index reached by each row of X; nodes are the flat list form.

    Rows are pushed down the tree in node-sized batches, so the cost is one
    vectorized comparison per visited node rather than per row.
    """
    out = np.zeros(X.shape[0], dtype=int)
    frontier = [(0, np.arange(X.shape[0]))]
    while frontier:
        node_id, rows = frontier.pop()
        spec = nodes[node_id]
        if spec["feature"] is None:
            out[rows] = node_id
            continue
        mask = X[rows, spec["feature"]] <= spec["threshold"]
        frontier.append((spec["left"], rows[mask]))
        frontier.append((spec["right"], rows[~mask]))
    return out


def tree_leaf_probabilities(nodes: list, X: np.ndarray) -> np.ndarray:
    leaves = _tree_route(nodes, X)
    probs = np.empty((X.shape[0], N_CLASSES))
    for i, leaf in enumerate(leaves):
        hist = np.asarray(nodes[leaf]["histogram"], dtype=float)
        probs[i] = hist / hist.sum()
    return probs


def tree_leaf_values(nodes: list, X: np.ndarray) -> np.ndarray:
    leaves = _tree_route(nodes, X)
    return np.array([nodes[leaf]["value"] for leaf in leaves])


def classifier_scores(artifact: ModelArtifact, X: np.ndarray) -> np.ndarray:
    """Raw per-class score matrix (n, 6) before the softmax/normalization."""
    kind = artifact.kind
    if kind in ("glm", "logreg"):
        B = np.asarray(artifact.params["coefficients"], dtype=float)
        return _with_intercept(X) @ B.T
    if kind == "gbt":
        scores = np.tile(np.asarray(artifact.params["init_scores"], dtype=float),
                         (X.shape[0], 1))
        for round_trees in artifact.params["trees"]:
            for k, nodes in enumerate(round_trees):
                scores[:, k] += tree_leaf_values(nodes, X)
        return scores
    raise WrongKind(f"{kind} has no additive score representation")


def predict_proba(artifact: ModelArtifact, rows: FeatureMatrix | np.ndarray) -> np.ndarray:
    """Per-row probability vectors over the six outcome classes."""
    if not artifact.is_classifier:
        raise WrongKind("length_glm predicts months, not class probabilities")
    X = _matrix_of(rows, artifact)
    kind = artifact.kind
    if kind == "glm" or kind == "gbt":
        return _softmax_rows(classifier_scores(artifact, X))
    if kind == "logreg":
        scores = classifier_scores(artifact, X)
        raw = 1.0 / (1.0 + np.exp(-scores))
        return raw / raw.sum(axis=1, keepdims=True)
    if kind == "tree":
        return tree_leaf_probabilities(artifact.params["nodes"], X)
    if kind == "forest":
        acc = np.zeros((X.shape[0], N_CLASSES))
        for nodes in artifact.params["trees"]:
            acc += tree_leaf_probabilities(nodes, X)
        return acc / len(artifact.params["trees"])
    raise WrongKind(f"unknown classifier kind {kind!r}")


def predict(artifact: ModelArtifact, rows: FeatureMatrix | np.ndarray):
    """Dispatch prediction by artifact kind.

    Classifiers return a Prediction (simplex probabilities, argmax class
    with lowest-index tie-break); the length regressor returns months
    clamped at 0.
    """
    if artifact.is_classifier:
        probs = predict_proba(artifact, rows)
        return Prediction(probabilities=probs, class_indices=np.argmax(probs, axis=1))
    X = _matrix_of(rows, artifact)
    beta = np.asarray(artifact.params["coefficients"], dtype=float)
    return np.maximum(_with_intercept(X) @ beta, 0.0)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def save_model(artifact: ModelArtifact, path: str | Path) -> None:
    """Serialize to versioned JSON; floats round-trip exactly via repr.

    Wall-clock seconds are process-local diagnostics; the persisted field
    is nulled so identical fits write identical bytes.
    """
    meta = {k: (None if k == "seconds" else v)
            for k, v in artifact.training_meta.items()}
    payload = {
        "format_version": FORMAT_VERSION,
        "kind": artifact.kind,
        "schema_fingerprint": artifact.schema_fingerprint,
        "classes": list(artifact.classes) if artifact.classes else None,
        "params": _jsonable(artifact.params),
        "training_meta": _jsonable(meta),
        "flags": list(artifact.flags),
        "schema": artifact.schema.to_dict(),
    }
    Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")


def load_model(path: str | Path) -> ModelArtifact:
    """Load a model file, validating version and structural integrity."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise CorruptFile(f"cannot read model file {path}: {err}") from None
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as err:
        raise CorruptFile(f"model file {path} is not valid JSON: {err}") from None
    if not isinstance(payload, dict):
        raise CorruptFile(f"model file {path} must hold a JSON object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(
            f"model file {path} has format_version {version!r}, expected {FORMAT_VERSION}")
    try:
        kind = payload["kind"]
        schema = FeatureSchema.from_dict(payload["schema"])
        classes = payload["classes"]
        params = payload["params"]
        meta = payload["training_meta"]
    except KeyError as err:
        raise CorruptFile(f"model file {path} is missing field {err}") from None
    if kind not in MODEL_KINDS:
        raise CorruptFile(f"model file {path} names unknown kind {kind!r}")
    if payload["schema_fingerprint"] != schema.fingerprint:
        raise CorruptFile(
            f"model file {path}: stored fingerprint does not match its schema")
    return ModelArtifact(
        kind=kind,
        schema=schema,
        classes=tuple(classes) if classes else None,
        params=params,
        training_meta=meta,
        flags=tuple(payload.get("flags", ())),
    )
