"""Binary gradient-boosted regression trees with exponential loss.

Stagewise additive model over {-1, +1} targets: the initial score is the
half log-odds of the training labels, each stage fits a variance-reducing
regression tree to the negative gradient r_i = y_i * exp(-y_i * F_i), and
leaves take one Newton step. Splits search an exhaustive threshold grid
(midpoints of adjacent distinct values) over a per-split random feature
subset. Training is deterministic given (X, y, config).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from segfuse._kernels import best_split_scan
from segfuse.errors import FormatError, SchemaError, ValidationError

MODEL_FORMAT_VERSION = 1

# bound for the initial half log-odds when one class is absent
INIT_SCORE_CLAMP = 10.0


@dataclass(frozen=True)
class GbtConfig:
    n_stages: int = 15
    max_depth: int = 3
    max_features: Union[int, str] = "all"
    learning_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValidationError("n_stages must be >= 1")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1")
        if self.learning_rate <= 0.0:
            raise ValidationError("learning_rate must be positive")
        if self.max_features != "all" and int(self.max_features) < 1:
            raise ValidationError("max_features must be >= 1 or 'all'")


@dataclass(frozen=True)
class TreeNode:
    """One node; leaves have ``left == right == -1`` and feature -1."""

    feature: int
    threshold: float
    left: int
    right: int
    leaf_value: float
    impurity: float
    n_weighted: float

    @property
    def is_leaf(self) -> bool:
        return self.left < 0


@dataclass(frozen=True)
class Tree:
    nodes: tuple[TreeNode, ...]

    def value(self, x: np.ndarray) -> float:
        node = self.nodes[0]
        while not node.is_leaf:
            node = self.nodes[node.left if x[node.feature] <= node.threshold else node.right]
        return node.leaf_value


@dataclass(frozen=True)
class GbtModel:
    init_score: float
    learning_rate: float
    trees: tuple[Tree, ...]
    feature_schema: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.feature_schema)


class _TreeBuilder:
    """Depth-first CART construction on regression targets."""

    def __init__(self, X, targets, residual_weights, cfg, rng, n_candidates):
        self.X = X
        self.targets = targets
        self.weights = residual_weights
        self.cfg = cfg
        self.rng = rng
        self.n_candidates = n_candidates
        self.nodes: list[dict] = []

    def build(self) -> Tree:
        self._grow(np.arange(self.X.shape[0]), depth=0)
        return Tree(tuple(TreeNode(**n) for n in self.nodes))

    def _grow(self, idx: np.ndarray, depth: int) -> int:
        t = self.targets[idx]
        node_id = len(self.nodes)
        self.nodes.append(
            {
                "feature": -1,
                "threshold": 0.0,
                "left": -1,
                "right": -1,
                "leaf_value": 0.0,
                "impurity": float(np.var(t)),
                "n_weighted": float(idx.shape[0]),
            }
        )
        split = None
        if depth < self.cfg.max_depth and idx.shape[0] >= 2 and t.min() < t.max():
            split = self._best_split(idx)
        if split is None:
            self.nodes[node_id]["leaf_value"] = self._leaf_value(idx)
            return node_id

        feature, threshold = split
        go_left = self.X[idx, feature] <= threshold
        left_idx, right_idx = idx[go_left], idx[~go_left]
        if left_idx.shape[0] == 0 or right_idx.shape[0] == 0:
            # midpoint rounded onto a sample value; treat as unsplittable
            self.nodes[node_id]["leaf_value"] = self._leaf_value(idx)
            return node_id
        self.nodes[node_id]["feature"] = int(feature)
        self.nodes[node_id]["threshold"] = float(threshold)
        self.nodes[node_id]["left"] = self._grow(left_idx, depth + 1)
        self.nodes[node_id]["right"] = self._grow(right_idx, depth + 1)
        return node_id

    def _best_split(self, idx: np.ndarray) -> Optional[tuple[int, float]]:
        q = self.X.shape[1]
        if self.n_candidates >= q:
            candidates = np.arange(q)
        else:
            candidates = np.sort(self.rng.choice(q, size=self.n_candidates, replace=False))
        best = (-np.inf, -1, 0.0)
        t = self.targets[idx]
        for feature in candidates:
            v = self.X[idx, feature]
            order = np.argsort(v, kind="stable")
            gain, pos = best_split_scan(v[order], t[order])
            if gain > best[0]:
                sorted_v = v[order]
                threshold = (sorted_v[pos - 1] + sorted_v[pos]) / 2.0
                best = (gain, int(feature), float(threshold))
        if best[1] < 0:
            return None
        return best[1], best[2]

    def _leaf_value(self, idx: np.ndarray) -> float:
        # one Newton step for exponential loss: sum(r) / sum(|r|)
        num = self.targets[idx].sum()
        den = self.weights[idx].sum()
        if den <= 0.0:
            return 0.0
        return float(num / den)


def train(
    X: np.ndarray,
    y: np.ndarray,
    cfg: GbtConfig,
    feature_schema: Optional[Sequence[str]] = None,
) -> GbtModel:
    """Fit the boosted-tree classifier on binary labels (0/1).

    Deterministic given (X, y, cfg): node expansion is depth-first and the
    feature subsets are drawn from a generator seeded with cfg.seed.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValidationError(f"feature matrix must be (n, q) with n >= 1, got {X.shape}")
    if y.shape != (X.shape[0],):
        raise ValidationError("labels must be one per row")
    if not np.isfinite(X).all():
        raise ValidationError("features contain non-finite values")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")

    q = X.shape[1]
    if feature_schema is None:
        feature_schema = tuple(f"f{i}" for i in range(q))
    else:
        feature_schema = tuple(feature_schema)
        if len(feature_schema) != q:
            raise SchemaError(f"schema names {len(feature_schema)} != features {q}")

    signs = np.where(y == 1, 1.0, -1.0)
    n_pos = int((y == 1).sum())
    n_neg = X.shape[0] - n_pos
    if n_pos == 0:
        init = -INIT_SCORE_CLAMP
    elif n_neg == 0:
        init = INIT_SCORE_CLAMP
    else:
        init = 0.5 * np.log(n_pos / n_neg)

    n_candidates = q if cfg.max_features == "all" else min(int(cfg.max_features), q)
    rng = np.random.default_rng(cfg.seed)
    scores = np.full(X.shape[0], init, dtype=np.float64)
    trees = []
    for _ in range(cfg.n_stages):
        weights = np.exp(-signs * scores)
        residuals = signs * weights
        tree = _TreeBuilder(X, residuals, weights, cfg, rng, n_candidates).build()
        trees.append(tree)
        scores += cfg.learning_rate * np.array([tree.value(row) for row in X])
    return GbtModel(
        init_score=float(init),
        learning_rate=cfg.learning_rate,
        trees=tuple(trees),
        feature_schema=feature_schema,
    )


def predict_scores(model: GbtModel, X: np.ndarray, n_stages: Optional[int] = None) -> np.ndarray:
    """Raw additive scores for a feature matrix, optionally truncated."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise SchemaError(
            f"input has {X.shape[1]} features, model expects {model.n_features}"
        )
    trees = model.trees if n_stages is None else model.trees[:n_stages]
    scores = np.full(X.shape[0], model.init_score, dtype=np.float64)
    for tree in trees:
        scores += model.learning_rate * np.array([tree.value(row) for row in X])
    return scores


def predict(model: GbtModel, u: np.ndarray) -> tuple[int, float]:
    """Classify one feature vector: (label, raw score).

    Label 1 means keep (true-positive); the tie at score 0 goes to label 0,
    the conservative false-positive call.
    """
    score = float(predict_scores(model, np.asarray(u, dtype=np.float64))[0])
    return (1 if score > 0.0 else 0), score


def predict_labels(model: GbtModel, X: np.ndarray) -> np.ndarray:
    return (predict_scores(model, X) > 0.0).astype(np.int64)


def feature_importance(model: GbtModel) -> np.ndarray:
    """Normalized impurity-decrease attribution per feature.

    Each internal node contributes n*Q - n_left*Q_left - n_right*Q_right to
    its split feature, summed over all trees and normalized to sum 1. A
    model with no splits gets the all-zero vector (with a warning).
    """
    totals = np.zeros(model.n_features, dtype=np.float64)
    for tree in model.trees:
        for node in tree.nodes:
            if node.is_leaf:
                continue
            left, right = tree.nodes[node.left], tree.nodes[node.right]
            decrease = (
                node.n_weighted * node.impurity
                - left.n_weighted * left.impurity
                - right.n_weighted * right.impurity
            )
            totals[node.feature] += decrease
    denom = totals.sum()
    if denom <= 0.0:
        warnings.warn("model has no splits; feature importance is undefined")
        return totals
    return totals / denom


def save_model(model: GbtModel, path) -> None:
    doc = {
        "version": MODEL_FORMAT_VERSION,
        "init_score": model.init_score,
        "learning_rate": model.learning_rate,
        "feature_schema": list(model.feature_schema),
        "trees": [
            {
                "nodes": [
                    {
                        "feature": n.feature,
                        "threshold": n.threshold,
                        "left": n.left,
                        "right": n.right,
                        "leaf_value": n.leaf_value,
                        "impurity": n.impurity,
                        "n_weighted": n.n_weighted,
                    }
                    for n in tree.nodes
                ]
            }
            for tree in model.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as fp:
        json.dump(doc, fp, indent=1)


def load_model(path) -> GbtModel:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            doc = json.load(fp)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc
    try:
        if doc["version"] != MODEL_FORMAT_VERSION:
            raise FormatError(
                f"{path}: model format version {doc['version']} is not supported"
            )
        trees = tuple(
            Tree(tuple(TreeNode(**node) for node in tree["nodes"]))
            for tree in doc["trees"]
        )
        return GbtModel(
            init_score=float(doc["init_score"]),
            learning_rate=float(doc["learning_rate"]),
            trees=trees,
            feature_schema=tuple(doc["feature_schema"]),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed model document: {exc}") from exc
