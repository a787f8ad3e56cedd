"""CART decision trees: Gini classification, SSE regression (for boosting),
flowchart export and its parser.
"""

from __future__ import annotations

import json
import time
from typing import Callable, Sequence

import numpy as np

from ..cohort import N_CLASSES
from ..errors import EmptyCohort, WrongKind
from ..preprocess import FeatureMatrix
from .artifact import CLASS_NAMES, ModelArtifact, tree_leaf_probabilities
from .config import ModelConfig


def _best_class_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray,
                      features: Sequence[int], min_leaf: int, min_gain: float):
    """Best (feature, threshold, gain) by exhaustive midpoint search.

    Gain is the unweighted parent Gini minus the size-weighted child Gini.
    Ties resolve to the lowest feature index, then the lowest threshold,
    which the ascending scan order delivers for free.
    """
    n = len(idx)
    counts = np.bincount(y[idx], minlength=N_CLASSES).astype(float)
    gini_parent = 1.0 - float(((counts / n) ** 2).sum())
    if gini_parent <= 0.0:
        return None
    best = None
    for f in features:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        onehot = np.zeros((n, N_CLASSES))
        onehot[np.arange(n), y[idx][order]] = 1.0
        cum = np.cumsum(onehot, axis=0)
        boundaries = np.flatnonzero(sv[:-1] < sv[1:])
        for i in boundaries:
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            left_counts = cum[i]
            right_counts = counts - left_counts
            gini_l = 1.0 - float(((left_counts / nl) ** 2).sum())
            gini_r = 1.0 - float(((right_counts / nr) ** 2).sum())
            gain = gini_parent - (nl * gini_l + nr * gini_r) / n
            if gain >= min_gain and (best is None or gain > best[2]):
                best = (int(f), float((sv[i] + sv[i + 1]) / 2.0), float(gain))
    return best


def grow_classification_tree(X: np.ndarray, y: np.ndarray, max_depth: int,
                             min_leaf: int, min_gain: float,
                             candidate_features: Callable[[], np.ndarray] | None = None,
                             ) -> list[dict]:
    """Recursive partitioning; returns the flat preorder node list.

    ``candidate_features`` supplies the per-node feature subset (sorted
    ascending before the scan); None means all features.
    """
    nodes: list[dict] = []
    all_features = np.arange(X.shape[1])

    def build(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append({})
        split = None
        if depth < max_depth and len(idx) >= 2 * min_leaf:
            features = all_features if candidate_features is None \
                else np.sort(candidate_features())
            split = _best_class_split(X, y, idx, features, min_leaf, min_gain)
        if split is None:
            hist = np.bincount(y[idx], minlength=N_CLASSES)
            nodes[node_id] = {"feature": None, "threshold": None,
                              "left": None, "right": None,
                              "histogram": [int(c) for c in hist]}
            return node_id
        f, threshold, _ = split
        mask = X[idx, f] <= threshold
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        nodes[node_id] = {"feature": f, "threshold": threshold,
                          "left": left, "right": right}
        return node_id

    build(np.arange(len(y)), 0)
    return nodes


def _best_regression_split(X: np.ndarray, r: np.ndarray, idx: np.ndarray,
                           features: Sequence[int], min_leaf: int, min_gain: float):
    """Best split by sum-of-squared-error reduction; same tie-breaks."""
    n = len(idx)
    values = r[idx]
    parent_sse = float(((values - values.mean()) ** 2).sum())
    if parent_sse <= 1e-12:
        return None
    best = None
    for f in features:
        v = X[idx, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        sr = values[order]
        cum = np.cumsum(sr)
        cum2 = np.cumsum(sr ** 2)
        total, total2 = cum[-1], cum2[-1]
        boundaries = np.flatnonzero(sv[:-1] < sv[1:])
        for i in boundaries:
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            sse_l = cum2[i] - cum[i] ** 2 / nl
            sse_r = (total2 - cum2[i]) - (total - cum[i]) ** 2 / nr
            gain = parent_sse - float(sse_l + sse_r)
            if gain >= min_gain and (best is None or gain > best[2]):
                best = (int(f), float((sv[i] + sv[i + 1]) / 2.0), float(gain))
    return best


def grow_regression_tree(X: np.ndarray, r: np.ndarray, max_depth: int,
                         min_leaf: int, min_gain: float,
                         leaf_value: Callable[[np.ndarray], float],
                         candidate_features: Callable[[], np.ndarray] | None = None,
                         ) -> list[dict]:
    """Regression tree on residuals; leaf values come from the callback."""
    nodes: list[dict] = []
    all_features = np.arange(X.shape[1])

    def build(idx: np.ndarray, depth: int) -> int:
        node_id = len(nodes)
        nodes.append({})
        split = None
        if depth < max_depth and len(idx) >= 2 * min_leaf:
            features = all_features if candidate_features is None \
                else np.sort(candidate_features())
            split = _best_regression_split(X, r, idx, features, min_leaf, min_gain)
        if split is None:
            nodes[node_id] = {"feature": None, "threshold": None,
                              "left": None, "right": None,
                              "value": float(leaf_value(idx))}
            return node_id
        f, threshold, _ = split
        mask = X[idx, f] <= threshold
        left = build(idx[mask], depth + 1)
        right = build(idx[~mask], depth + 1)
        nodes[node_id] = {"feature": f, "threshold": threshold,
                          "left": left, "right": right}
        return node_id

    build(np.arange(len(r)), 0)
    return nodes


def fit_tree(matrix: FeatureMatrix, labels: np.ndarray, config: ModelConfig) -> ModelArtifact:
    """Fit a single CART classifier.

    Splits maximize Gini gain over all (feature, midpoint) candidates,
    subject to the depth, leaf-size and minimum-gain limits.
    """
    start = time.perf_counter()
    y = np.asarray(labels, dtype=int)
    if len(y) == 0:
        raise EmptyCohort("fit_tree needs at least one row")
    nodes = grow_classification_tree(
        matrix.X, y, config.tree_max_depth, config.tree_min_leaf, config.tree_min_gain)
    probs = tree_leaf_probabilities(nodes, matrix.X)
    deviance = -float(np.log(np.clip(probs[np.arange(len(y)), y], 1e-12, None)).sum())
    return ModelArtifact(
        kind="tree",
        schema=matrix.schema,
        classes=CLASS_NAMES,
        params={"nodes": nodes},
        training_meta={"iterations": 0, "objective": deviance,
                       "seconds": time.perf_counter() - start},
    )


# ---------------------------------------------------------------------------
# Flowchart export
# ---------------------------------------------------------------------------

def _majority_label(histogram: Sequence[int]) -> str:
    return CLASS_NAMES[int(np.argmax(histogram))]


def _node_line(nodes: list[dict], node_id: int, names: Sequence[str]) -> str:
    node = nodes[node_id]
    if node["feature"] is None:
        return f"leaf {json.dumps(node['histogram'])} -> {_majority_label(node['histogram'])}"
    return f"x{node['feature']}:{names[node['feature']]} <= {node['threshold']!r}"


def export_tree(artifact: ModelArtifact, fmt: str = "text") -> str:
    """Render a tree artifact as an indented flowchart or a DOT graph.

    In the text form each internal node line is followed by its left
    (condition true) then right subtree, indented two spaces per level.
    """
    if artifact.kind != "tree":
        raise WrongKind(f"export_tree needs a tree artifact, got {artifact.kind!r}")
    nodes = artifact.params["nodes"]
    names = artifact.schema.column_names
    if fmt == "text":
        lines: list[str] = []

        def walk(node_id: int, depth: int) -> None:
            lines.append("  " * depth + _node_line(nodes, node_id, names))
            node = nodes[node_id]
            if node["feature"] is not None:
                walk(node["left"], depth + 1)
                walk(node["right"], depth + 1)

        walk(0, 0)
        return "\n".join(lines) + "\n"
    if fmt == "dot":
        lines = ["digraph tree {"]
        for i, node in enumerate(nodes):
            label = _node_line(nodes, i, names).replace('"', r'\"')
            shape = ", shape=box" if node["feature"] is None else ""
            lines.append(f'  n{i} [label="{label}"{shape}];')
        for i, node in enumerate(nodes):
            if node["feature"] is not None:
                lines.append(f'  n{i} -> n{node["left"]} [label="yes"];')
                lines.append(f'  n{i} -> n{node["right"]} [label="no"];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise WrongKind(f"unknown export format {fmt!r}, expected 'text' or 'dot'")


def parse_tree_export(text: str) -> list[dict]:
    """Parse the indented-text flowchart back into the flat node list.

    Inverse of export_tree(fmt="text"): thresholds are printed with repr so
    the round-trip is exact.
    """
    lines = [line for line in text.splitlines() if line.strip()]
    nodes: list[dict] = []
    pos = 0

    def parse(depth: int) -> int:
        nonlocal pos
        line = lines[pos]
        indent = (len(line) - len(line.lstrip(" "))) // 2
        if indent != depth:
            raise ValueError(f"bad indentation at line {pos}: expected depth {depth}")
        pos += 1
        node_id = len(nodes)
        nodes.append({})
        body = line.strip()
        if body.startswith("leaf "):
            histogram = json.loads(body[len("leaf "):body.index(" ->")])
            nodes[node_id] = {"feature": None, "threshold": None,
                              "left": None, "right": None, "histogram": histogram}
            return node_id
        head, _, threshold = body.partition(" <= ")
        feature = int(head.split(":", 1)[0][1:])
        left = parse(depth + 1)
        right = parse(depth + 1)
        nodes[node_id] = {"feature": feature, "threshold": float(threshold),
                          "left": left, "right": right}
        return node_id

    parse(0)
    if pos != len(lines):
        raise ValueError(f"trailing content after tree at line {pos}")
    return nodes
