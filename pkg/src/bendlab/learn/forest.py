"""Bagged trees with per-node random feature subsets, majority vote."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..bendsem import LABELS, Label
from ..featex import NUM_FEATURES, FeatureRecord
from ..model import DomainError
from .rng import SplitMix64
from .tree import DecisionTree, TreeParams, as_arrays, fit_arrays, predict

DEFAULT_MAX_FEATURES = math.ceil(math.sqrt(NUM_FEATURES))


@dataclass
class Forest:
    trees: list[DecisionTree]
    seeds: list[int]
    max_features: int
    seed: int
    params: TreeParams


def fit_forest(records: Sequence[FeatureRecord], params: TreeParams = TreeParams(), n_trees: int = 32,
               seed: int = 0, max_features: Optional[int] = None) -> Forest:
    if n_trees < 1:
        raise DomainError("a forest needs at least one tree")
    if not records:
        raise DomainError("cannot fit a forest on zero records")
    X, y = as_arrays(records)
    n, d = X.shape
    m = DEFAULT_MAX_FEATURES if max_features is None else max_features
    if m < 1:
        raise DomainError("max_features must be >= 1")
    master = SplitMix64(seed)
    seeds = [master.next_u64() for _ in range(n_trees)]
    trees = []
    for s in seeds:
        # bootstrap draws come first from the tree's stream, feature subsets after
        rng = SplitMix64(s)
        idx = np.array([rng.randbelow(n) for _ in range(n)], dtype=np.int64)
        picker = None if m >= d else (lambda rng=rng: rng.sample(d, m))
        trees.append(fit_arrays(X[idx], y[idx], params, picker))
    return Forest(trees, seeds, min(m, d), seed, params)


def vote(labels: Sequence[Label]) -> Label:
    counts = [0] * len(LABELS)
    for lab in labels:
        counts[lab.value] += 1
    return LABELS[counts.index(max(counts))]


def predict_forest(forest: Forest, values) -> Label:
    return vote([predict(t, values) for t in forest.trees])
