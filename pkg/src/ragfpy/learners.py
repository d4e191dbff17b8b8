"""
Learners
--------

The downstream classifiers whose cross-validated score decides whether a
generated feature is kept: a CART decision tree (Gini impurity, no pruning)
and a bagged random forest of such trees.

Split search is exhaustive over the midpoints of adjacent distinct values.
Among equally good splits the lowest feature index wins, then the lowest
threshold, so a tree is a pure function of its data and seed.
"""
import enum, logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .errors import EmptyTrainingSet, LearnerError, SchemaMismatch
from .metrics import METRICS, classification_report
from .tabular import Dataset, FoldPlan


class LearnerKind(enum.Enum):
    DECISION_TREE = "decision_tree"
    RANDOM_FOREST = "random_forest"


@dataclass(frozen=True)
class LearnerConfig:
    """Hyperparameters of the downstream classifier.

    Parameters
    ----------
    kind : LearnerKind
        decision tree or random forest
    max_depth : int
        maximum tree depth, by default 8
    min_leaf : int
        minimum training rows per leaf, by default 2
    n_trees : int
        forest size, by default 100
    feature_fraction : float or None
        fraction of features tried at each forest split; None means
        ``sqrt(p) / p``, where p counts the features not constant on the
        node's rows
    seed : int
        seed of the bootstrap and feature sampling
    n_jobs : int
        joblib workers for cross-validation folds
    """

    kind: LearnerKind = LearnerKind.RANDOM_FOREST
    max_depth: int = 8
    min_leaf: int = 2
    n_trees: int = 100
    feature_fraction: Optional[float] = None
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        if not isinstance(self.kind, LearnerKind):
            object.__setattr__(self, "kind", LearnerKind(self.kind))
        if self.max_depth < 1:
            raise LearnerError(f"max_depth must be at least 1, got {self.max_depth}.")
        if self.min_leaf < 1:
            raise LearnerError(f"min_leaf must be at least 1, got {self.min_leaf}.")
        if self.n_trees < 1:
            raise LearnerError(f"n_trees must be at least 1, got {self.n_trees}.")
        if self.feature_fraction is not None and not 0 < self.feature_fraction <= 1:
            raise LearnerError(
                f"feature_fraction must be in (0, 1], got {self.feature_fraction}."
            )

    def n_split_features(self, p: int) -> int:
        if self.kind is LearnerKind.DECISION_TREE:
            return p
        fraction = self.feature_fraction
        if fraction is None:
            fraction = np.sqrt(p) / p
        return max(1, int(round(fraction * p)))


@dataclass
class TreeNode:
    counts: np.ndarray
    feature: int = -1
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.left is None

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.counts))


@dataclass
class TreeModel:
    """A fitted CART tree over the named features."""

    root: TreeNode
    feature_names: tuple
    n_classes: int

    def depth(self) -> int:
        best, stack = 0, [(self.root, 0)]
        while stack:
            node, d = stack.pop()
            best = max(best, d)
            if not node.is_leaf:
                stack.append((node.left, d + 1))
                stack.append((node.right, d + 1))
        return best

    def leaves(self) -> List[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.right, node.left))
        return out

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(X.shape[0], dtype=np.intp)
        stack = [(self.root, np.arange(X.shape[0]))]
        while stack:
            node, idx = stack.pop()
            if idx.size == 0:
                continue
            if node.is_leaf:
                out[idx] = node.prediction
                continue
            goes_left = X[idx, node.feature] <= node.threshold
            stack.append((node.left, idx[goes_left]))
            stack.append((node.right, idx[~goes_left]))
        return out


@dataclass
class ForestModel:
    trees: List[TreeModel]
    feature_names: tuple
    n_classes: int

    def predict_matrix(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((X.shape[0], self.n_classes), dtype=np.intp)
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, tree.predict_matrix(X)] += 1
        # argmax returns the first maximum: ties go to the smallest class code
        return np.argmax(votes, axis=1).astype(np.intp)


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features: Sequence[int], min_leaf: int):
    """Best Gini split of rows (X, y) over `features`.

    Returns (feature, threshold, gain), or None when no split leaves
    `min_leaf` rows on both sides. Zero-gain splits are returned too.
    """
    n = y.shape[0]
    total = np.bincount(y, minlength=n_classes).astype(np.float64)
    parent = np.sum(total**2) / n
    onehot = np.eye(n_classes, dtype=np.float64)
    best = None
    for j in features:
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        left = np.cumsum(onehot[y[order]], axis=0)[:-1]
        right = total - left
        n_left = np.arange(1, n, dtype=np.float64)
        n_right = n - n_left
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        score = np.sum(left**2, axis=1) / n_left + np.sum(right**2, axis=1) / n_right
        score[~valid] = -np.inf
        i = int(np.argmax(score))
        gain = (score[i] - parent) / n
        if best is None or gain > best[2]:
            lo, hi = xs[i], xs[i + 1]
            threshold = lo + (hi - lo) / 2.0
            if not lo <= threshold < hi:
                threshold = lo
            best = (int(j), float(threshold), float(gain))
    return best


class _TreeBuilder(object):
    def __init__(self, config: LearnerConfig, n_classes: int, rng=None):
        self.config = config
        self.n_classes = n_classes
        self.rng = rng

    def split_features(self, X: np.ndarray) -> np.ndarray:
        # columns constant on this node's rows never enter the draw
        active = np.flatnonzero(np.ptp(X, axis=0) > 0)
        if active.size == 0:
            return active
        m = self.config.n_split_features(active.size)
        if m >= active.size or self.rng is None:
            return active
        return np.sort(active[self.rng.choice(active.size, size=m, replace=False)])

    def build(self, X: np.ndarray, y: np.ndarray, depth: int = 0) -> TreeNode:
        counts = np.bincount(y, minlength=self.n_classes)
        node = TreeNode(counts=counts)
        n = y.shape[0]
        if (
            depth >= self.config.max_depth
            or np.count_nonzero(counts) <= 1
            or n < 2 * self.config.min_leaf
            or X.shape[1] == 0
        ):
            return node
        split = best_split(X, y, self.n_classes, self.split_features(X), self.config.min_leaf)
        if split is None:
            return node
        node.feature, node.threshold, _ = split
        goes_left = X[:, node.feature] <= node.threshold
        node.left = self.build(X[goes_left], y[goes_left], depth + 1)
        node.right = self.build(X[~goes_left], y[~goes_left], depth + 1)
        return node


def _fit_tree(config, X, y, n_classes, names, rng=None) -> TreeModel:
    root = _TreeBuilder(config, n_classes, rng).build(X, y)
    return TreeModel(root=root, feature_names=names, n_classes=n_classes)


def _fit_forest_member(config, X, y, n_classes, names, seed_seq) -> TreeModel:
    rng = np.random.default_rng(seed_seq)
    sample = rng.integers(0, X.shape[0], size=X.shape[0])
    return _fit_tree(config, X[sample], y[sample], n_classes, names, rng)


def train(config: LearnerConfig, d: Dataset, rows=None):
    """Fit a tree or forest on `rows` of `d` (all rows by default).

    Raises
    ------
    EmptyTrainingSet
        `rows` is empty
    """
    rows = np.arange(d.n_rows) if rows is None else np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        raise EmptyTrainingSet("Cannot train on an empty row set.")
    names = d.feature_names
    X = d.matrix()[rows]
    y = d.target[rows]
    if config.kind is LearnerKind.DECISION_TREE:
        return _fit_tree(config, X, y, d.n_classes, names)
    members = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    trees = [_fit_forest_member(config, X, y, d.n_classes, names, s) for s in members]
    return ForestModel(trees=trees, feature_names=names, n_classes=d.n_classes)


def predict(model, d: Dataset, rows=None) -> np.ndarray:
    """Class codes predicted for `rows` of `d`.

    Raises
    ------
    SchemaMismatch
        `d` lacks a feature the model was trained on
    """
    missing = [n for n in model.feature_names if n not in d]
    if missing:
        raise SchemaMismatch(f"Dataset lacks model features {missing}.")
    rows = np.arange(d.n_rows) if rows is None else np.asarray(rows, dtype=np.intp)
    if rows.size == 0:
        return np.empty(0, dtype=np.intp)
    X = d.matrix(model.feature_names)[rows]
    return model.predict_matrix(X)


def _fold_report(config, d, train_rows, test_rows):
    model = train(config, d, train_rows)
    return classification_report(d.target[test_rows], predict(model, d, test_rows))


def evaluate_cv(
    config: LearnerConfig, d: Dataset, folds: FoldPlan, metric: str = "accuracy", n_jobs: Optional[int] = None
) -> float:
    """Mean out-of-fold `metric` over the folds of `folds`.

    Folds may be scored in parallel; results are reduced in fold order.
    """
    if metric not in METRICS:
        raise ValueError(f"Unknown metric {metric!r}; expected one of {METRICS}.")
    n_jobs = config.n_jobs if n_jobs is None else n_jobs
    reports = Parallel(n_jobs=n_jobs)(
        delayed(_fold_report)(config, d, tr, te) for tr, te in folds.folds()
    )
    score = float(np.mean([r.get(metric) for r in reports]))
    logging.debug(f"{config.kind.value} {metric} over {folds.k} folds: {score:.4f}")
    return score


@dataclass
class Learner:
    """Default downstream task model.

    Any object offering ``evaluate_cv``, ``train`` and ``predict`` with these
    signatures can stand in for it in an engine run.
    """

    config: LearnerConfig = field(default_factory=LearnerConfig)

    def train(self, d: Dataset, rows=None):
        return train(self.config, d, rows)

    def predict(self, model, d: Dataset, rows=None) -> np.ndarray:
        return predict(model, d, rows)

    def evaluate_cv(self, d: Dataset, folds: FoldPlan, metric: str = "accuracy", n_jobs=None) -> float:
        return evaluate_cv(self.config, d, folds, metric, n_jobs)
