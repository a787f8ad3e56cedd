"""Hyperparameter surface shared by every learner."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import InvalidConfig

MODEL_KINDS = ("glm", "logreg", "tree", "forest", "gbt", "length_glm")


@dataclass(frozen=True)
class ModelConfig:
    """Configuration for one model fit.

    Fields not relevant to a kind are ignored by that kind. Defaults follow
    common practice for each learner family; every value is overridable.
    """

    kind: str = "glm"
    ridge_lambda: float = 1e-4
    irls_max_iterations: int = 100
    irls_tolerance: float = 1e-8
    tree_max_depth: int = 5
    tree_min_leaf: int = 10
    tree_min_gain: float = 1e-7
    forest_n_trees: int = 200
    forest_feature_count: int | None = None  # None = ceil(sqrt(d))
    forest_bootstrap: bool = True
    gbt_rounds: int = 200
    gbt_shrinkage: float = 0.1
    gbt_depth: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise InvalidConfig(f"unknown model kind {self.kind!r}, expected one of {MODEL_KINDS}")
        if self.ridge_lambda < 0:
            raise InvalidConfig(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.irls_max_iterations < 1:
            raise InvalidConfig("irls_max_iterations must be >= 1")
        if self.irls_tolerance <= 0:
            raise InvalidConfig("irls_tolerance must be > 0")
        if self.tree_max_depth < 0:
            raise InvalidConfig("tree_max_depth must be >= 0")
        if self.tree_min_leaf < 1:
            raise InvalidConfig("tree_min_leaf must be >= 1")
        if self.tree_min_gain < 0:
            raise InvalidConfig("tree_min_gain must be >= 0")
        if self.forest_n_trees < 1:
            raise InvalidConfig("forest_n_trees must be >= 1")
        if self.forest_feature_count is not None and self.forest_feature_count < 1:
            raise InvalidConfig("forest_feature_count must be >= 1 when given")
        if self.gbt_rounds < 0:
            raise InvalidConfig("gbt_rounds must be >= 0")
        if self.gbt_shrinkage < 0:
            raise InvalidConfig("gbt_shrinkage must be >= 0")
        if self.gbt_depth < 0:
            raise InvalidConfig("gbt_depth must be >= 0")

    def with_kind(self, kind: str) -> "ModelConfig":
        return replace(self, kind=kind)
