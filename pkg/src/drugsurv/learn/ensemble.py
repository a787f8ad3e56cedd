"""Bootstrap random forests and multinomial-deviance gradient boosting."""

from __future__ import annotations

import math
import time

import numpy as np

from ..cohort import N_CLASSES
from ..errors import EmptyCohort
from ..preprocess import FeatureMatrix
from .artifact import (
    CLASS_NAMES,
    ModelArtifact,
    tree_leaf_probabilities,
    tree_leaf_values,
)
from .config import ModelConfig
from .glm import ABSENT_CLASS_INTERCEPT
from .tree import grow_classification_tree, grow_regression_tree

_MAX_SCALE_HALVINGS = 30


def fit_forest(matrix: FeatureMatrix, labels: np.ndarray, config: ModelConfig) -> ModelArtifact:
    """Fit a random forest of CART trees.

    Each tree sees a bootstrap resample and, at every node, a fresh feature
    subset of size ceil(sqrt(d)) unless configured otherwise. Tree t draws
    all its randomness from the (seed, t) stream, so refits are bitwise
    identical and trees are order-independent.
    """
    start = time.perf_counter()
    y = np.asarray(labels, dtype=int)
    n, d = matrix.X.shape
    if n == 0:
        raise EmptyCohort("fit_forest needs at least one row")
    m = config.forest_feature_count or math.ceil(math.sqrt(d))
    m = min(m, d)
    trees = []
    for t in range(config.forest_n_trees):
        rng = np.random.default_rng([config.seed, t])
        if config.forest_bootstrap:
            idx = rng.integers(0, n, size=n)
            Xb, yb = matrix.X[idx], y[idx]
        else:
            Xb, yb = matrix.X, y
        sampler = None if m == d else (lambda: rng.choice(d, size=m, replace=False))
        trees.append(grow_classification_tree(
            Xb, yb, config.tree_max_depth, config.tree_min_leaf,
            config.tree_min_gain, sampler))
    acc = np.zeros((n, N_CLASSES))
    for nodes in trees:
        acc += tree_leaf_probabilities(nodes, matrix.X)
    probs = acc / len(trees)
    deviance = -float(np.log(np.clip(probs[np.arange(n), y], 1e-12, None)).sum())
    return ModelArtifact(
        kind="forest",
        schema=matrix.schema,
        classes=CLASS_NAMES,
        params={"trees": trees},
        training_meta={"iterations": 0, "objective": deviance,
                       "seconds": time.perf_counter() - start},
    )


def _multinomial_deviance(scores: np.ndarray, y: np.ndarray) -> float:
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    return -float((shifted[np.arange(len(y)), y] - log_norm).sum())


def fit_gbt(matrix: FeatureMatrix, labels: np.ndarray, config: ModelConfig) -> ModelArtifact:
    """Gradient boosting on the multinomial deviance.

    Scores start at the log class priors, so zero rounds reduce to the
    class-prior baseline. Each round fits one regression tree per class to
    the softmax residuals; the shrunken update is halved further whenever
    it would increase the training deviance, keeping the deviance history
    non-increasing by construction.
    """
    start = time.perf_counter()
    y = np.asarray(labels, dtype=int)
    n = len(y)
    if n == 0:
        raise EmptyCohort("fit_gbt needs at least one row")
    counts = np.bincount(y, minlength=N_CLASSES).astype(float)
    init_scores = np.where(counts > 0, np.log(np.clip(counts / n, 1e-300, None)),
                           ABSENT_CLASS_INTERCEPT)
    scores = np.tile(init_scores, (n, 1))
    onehot = np.zeros((n, N_CLASSES))
    onehot[np.arange(n), y] = 1.0

    history = [_multinomial_deviance(scores, y)]
    rounds: list[list[list[dict]]] = []
    for _ in range(config.gbt_rounds):
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        P = e / e.sum(axis=1, keepdims=True)
        round_nodes: list[list[dict]] = []
        outputs = np.zeros((n, N_CLASSES))
        for k in range(N_CLASSES):
            r = onehot[:, k] - P[:, k]
            h = P[:, k] * (1.0 - P[:, k])

            def leaf_value(idx, r=r, h=h):
                return (N_CLASSES - 1) / N_CLASSES * r[idx].sum() / (h[idx].sum() + 1e-12)

            nodes = grow_regression_tree(
                matrix.X, r, config.gbt_depth, config.tree_min_leaf,
                config.tree_min_gain, leaf_value)
            round_nodes.append(nodes)
            outputs[:, k] = tree_leaf_values(nodes, matrix.X)

        scale = config.gbt_shrinkage
        for _ in range(_MAX_SCALE_HALVINGS):
            if _multinomial_deviance(scores + scale * outputs, y) <= history[-1] + 1e-12:
                break
            scale *= 0.5
        else:
            scale = 0.0
        for nodes in round_nodes:
            for node in nodes:
                if node["feature"] is None:
                    node["value"] *= scale
        scores = scores + scale * outputs
        rounds.append(round_nodes)
        history.append(_multinomial_deviance(scores, y))
        assert history[-1] <= history[-2] + 1e-9, "deviance increased within a round"

    return ModelArtifact(
        kind="gbt",
        schema=matrix.schema,
        classes=CLASS_NAMES,
        params={"init_scores": init_scores, "trees": rounds,
                "deviance_history": history},
        training_meta={"iterations": config.gbt_rounds, "objective": history[-1],
                       "seconds": time.perf_counter() - start},
    )
