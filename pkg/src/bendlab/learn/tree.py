"""Deterministic CART classifier over four labels, Gini impurity, axis-aligned splits.

Ties are broken the same way everywhere: the lower feature index wins, then
the lower threshold; among equally weighted classes the canonical label order
(NONE < UP < HELD < DOWN) wins.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..bendsem import LABELS, Label
from ..featex import FEATURE_NAMES, NUM_FEATURES, FeatureRecord
from ..model import DomainError

N_CLASSES = len(LABELS)
# relative slack when comparing float gains or class weights for equality
EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    class_weights: str = "uniform"  # or "balanced"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise DomainError("max_depth must be a positive integer")
        if self.min_samples_split < 2 or self.min_samples_leaf < 1:
            raise DomainError("min_samples_split >= 2 and min_samples_leaf >= 1 required")
        if self.class_weights not in ("uniform", "balanced"):
            raise DomainError(f"unknown class weighting {self.class_weights!r}")


@dataclass
class Node:
    counts: np.ndarray  # raw class counts
    value: np.ndarray  # class-weighted counts
    feature: int = -1
    threshold: float = 0.0
    left: int = -1
    right: int = -1
    gain: float = 0.0
    depth: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    @property
    def weight(self) -> float:
        return float(self.value.sum())

    @property
    def label(self) -> Label:
        return LABELS[_argmax(self.value)]


@dataclass
class DecisionTree:
    nodes: list[Node]
    params: TreeParams = field(default_factory=TreeParams)
    class_weight: np.ndarray = field(default_factory=lambda: np.ones(N_CLASSES))
    n_features: int = NUM_FEATURES

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes)

    @property
    def n_splits(self) -> int:
        return sum(not n.is_leaf for n in self.nodes)

    def leaf_for(self, values) -> Node:
        return self.nodes[self._descend(values)[-1]]

    def _descend(self, values) -> list[int]:
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n_features,):
            raise DomainError(f"expected {self.n_features} feature values, got shape {values.shape}")
        path = [0]
        node = self.nodes[0]
        while not node.is_leaf:
            nxt = node.left if values[node.feature] <= node.threshold else node.right
            path.append(nxt)
            node = self.nodes[nxt]
        return path


def _argmax(v: np.ndarray) -> int:
    top = v.max()
    return int(np.flatnonzero(v >= top - EPS * max(abs(top), 1.0))[0])


def gini(weighted_counts: np.ndarray) -> float:
    total = weighted_counts.sum()
    if total <= 0:
        return 0.0
    p = weighted_counts / total
    return float(1.0 - np.dot(p, p))


def as_arrays(records: Sequence[FeatureRecord]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([r.values for r in records], dtype=float).reshape(len(records), -1)
    y = np.array([r.label.value for r in records], dtype=np.int64)
    return X, y


def class_weights_for(y: np.ndarray, mode: str) -> np.ndarray:
    if mode == "uniform":
        return np.ones(N_CLASSES)
    counts = np.bincount(y, minlength=N_CLASSES).astype(float)
    w = np.zeros(N_CLASSES)
    present = counts > 0
    w[present] = len(y) / (N_CLASSES * counts[present])
    return w


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float


def best_split(X: np.ndarray, y: np.ndarray, class_weight: Optional[np.ndarray] = None,
               features: Optional[Sequence[int]] = None, min_samples_leaf: int = 1,
               allow_zero: bool = False) -> Optional[Split]:
    """Exhaustive search for the split with the largest weighted Gini decrease.

    Candidate thresholds are midpoints between consecutive distinct values of a
    feature. Returns ``None`` when no split has positive gain, or with
    ``allow_zero`` only when there is no candidate threshold at all.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n == 0:
        raise DomainError("best_split needs at least one record")
    if class_weight is None:
        class_weight = np.ones(N_CLASSES)
    onehot = np.zeros((n, N_CLASSES), dtype=np.int64)
    onehot[np.arange(n), y] = 1
    total_counts = onehot.sum(axis=0)
    total_w = total_counts * class_weight
    W = total_w.sum()
    if W <= 0:
        return None
    parent = gini(total_w)
    if parent <= 0:
        return None

    feats = np.arange(X.shape[1]) if features is None else np.array(sorted(features), dtype=np.int64)
    if n < 2 or feats.size == 0:
        return None
    Xf = X[:, feats]
    order = np.argsort(Xf, axis=0, kind="stable")
    V = np.take_along_axis(Xf, order, axis=0)
    # integer prefix counts keep the result independent of record order
    left_counts = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, features, classes)
    valid = V[1:] > V[:-1]
    if min_samples_leaf > 1:
        sizes = np.arange(1, n)[:, None]
        valid &= (sizes >= min_samples_leaf) & (n - sizes >= min_samples_leaf)
    lw = left_counts * class_weight
    rw = total_w - lw
    lW = lw.sum(axis=2)
    rW = rw.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        lg = np.where(lW > 0, 1.0 - ((lw / lW[..., None]) ** 2).sum(axis=2), 0.0)
        rg = np.where(rW > 0, 1.0 - ((rw / rW[..., None]) ** 2).sum(axis=2), 0.0)
    gains = np.where(valid, parent - (lW / W) * lg - (rW / W) * rg, -np.inf)
    top = gains.max(axis=0)
    # first cut per feature reaching its maximum (within relative slack)
    first = np.argmax(gains >= (top - EPS * np.maximum(np.abs(top), 1.0)), axis=0)

    best: Optional[Split] = None
    for j, f in enumerate(feats):
        if not np.isfinite(top[j]):
            continue
        i = int(first[j])
        g = float(gains[i, j])
        if best is None or g > best.gain + EPS * max(abs(best.gain), 1.0):
            lo, hi = V[i, j], V[i + 1, j]
            thr = (lo + hi) / 2.0
            if not lo <= thr < hi:  # adjacent floats
                thr = lo
            best = Split(int(f), float(thr), g)
    if best is None or (best.gain <= EPS and not allow_zero):
        return None
    return best


def _grow(X, y, params: TreeParams, class_weight: np.ndarray, feature_picker=None) -> list[Node]:
    nodes: list[Node] = []

    def make(idx: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[idx], minlength=N_CLASSES)
        node = Node(counts=counts, value=counts * class_weight, depth=depth)
        nodes.append(node)
        me = len(nodes) - 1
        if (np.count_nonzero(counts) <= 1
                or (params.max_depth is not None and depth >= params.max_depth)
                or len(idx) < params.min_samples_split):
            return me
        features = feature_picker() if feature_picker is not None else None
        # zero-gain splits are allowed so that growth continues to purity (XOR-like nodes)
        split = best_split(X[idx], y[idx], class_weight, features, params.min_samples_leaf, allow_zero=True)
        if split is None:
            return me
        go_left = X[idx, split.feature] <= split.threshold
        node.feature, node.threshold, node.gain = split.feature, split.threshold, split.gain
        node.left = make(idx[go_left], depth + 1)
        node.right = make(idx[~go_left], depth + 1)
        return me

    make(np.arange(len(y)), 0)
    return nodes


def fit_arrays(X: np.ndarray, y: np.ndarray, params: TreeParams = TreeParams(),
               feature_picker=None) -> DecisionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise DomainError("cannot fit a tree on zero records")
    cw = class_weights_for(y, params.class_weights)
    return DecisionTree(_grow(X, y, params, cw, feature_picker), params, cw, X.shape[1])


def fit_tree(records: Sequence[FeatureRecord], params: TreeParams = TreeParams(), seed: int = 0) -> DecisionTree:
    """Grow a tree to purity or the limits in ``params``.

    ``seed`` is accepted for interface symmetry with forests; a single tree
    uses no randomness.
    """
    if not records:
        raise DomainError("cannot fit a tree on zero records")
    X, y = as_arrays(records)
    return fit_arrays(X, y, params)


def predict(tree: DecisionTree, values) -> Label:
    return tree.leaf_for(values).label


def predict_proba(tree: DecisionTree, values) -> np.ndarray:
    value = tree.leaf_for(values).value
    return value / value.sum()


def predict_many(tree: DecisionTree, X: np.ndarray) -> list[Label]:
    return [predict(tree, row) for row in np.asarray(X, dtype=float)]


@dataclass(frozen=True)
class PathStep:
    feature: str
    threshold: float
    direction: str  # "<=" went left, ">" went right
    feature_index: int = -1


def decision_path(tree: DecisionTree, values, names: Sequence[str] = FEATURE_NAMES) -> list[PathStep]:
    ids = tree._descend(values)
    steps = []
    for a, b in zip(ids, ids[1:]):
        node = tree.nodes[a]
        steps.append(PathStep(names[node.feature], node.threshold,
                              "<=" if b == node.left else ">", node.feature))
    return steps


def shared_prefix(a: Sequence[PathStep], b: Sequence[PathStep]) -> int:
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return k


def feature_importance(tree: DecisionTree) -> np.ndarray:
    """Gini importance: weight fraction times gain, summed per feature, normalised."""
    imp = np.zeros(tree.n_features)
    root_w = tree.nodes[0].weight
    for node in tree.nodes:
        if not node.is_leaf:
            imp[node.feature] += node.weight / root_w * node.gain
    total = imp.sum()
    return imp / total if total > 0 else imp
