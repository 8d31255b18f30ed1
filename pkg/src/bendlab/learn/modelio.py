"""JSON model files (``bendlab-model/1``).

A model embeds the feature names it was trained on and refuses to load
against a different registry.
"""
from __future__ import annotations

import hashlib
import json
from typing import Sequence, Union

import numpy as np

from ..featex import FEATURE_NAMES
from ..model import DomainError
from .forest import Forest
from .tree import DecisionTree, Node, TreeParams

MODEL_VERSION = "bendlab-model/1"


class ModelMismatchError(DomainError):
    """The model was trained on another feature layout, or the file is not a model."""


def registry_fingerprint(names: Sequence[str] = FEATURE_NAMES) -> str:
    return hashlib.sha256("\n".join(names).encode("utf-8")).hexdigest()


def _params_doc(p: TreeParams) -> dict:
    return {"max_depth": p.max_depth, "min_samples_split": p.min_samples_split,
            "min_samples_leaf": p.min_samples_leaf, "class_weights": p.class_weights}


def _tree_doc(tree: DecisionTree) -> dict:
    nodes = []
    for n in tree.nodes:
        d = {"counts": [int(c) for c in n.counts], "value": [float(v) for v in n.value], "depth": n.depth}
        if not n.is_leaf:
            d.update(feature=n.feature, threshold=n.threshold, left=n.left, right=n.right, gain=n.gain)
        nodes.append(d)
    return {"class_weight": [float(w) for w in tree.class_weight], "nodes": nodes}


def _tree_from(doc: dict, params: TreeParams, n_features: int) -> DecisionTree:
    nodes = []
    for d in doc["nodes"]:
        node = Node(np.array(d["counts"], dtype=np.int64), np.array(d["value"], dtype=float), depth=d["depth"])
        if "feature" in d:
            node.feature, node.threshold = int(d["feature"]), float(d["threshold"])
            node.left, node.right, node.gain = int(d["left"]), int(d["right"]), float(d["gain"])
        nodes.append(node)
    return DecisionTree(nodes, params, np.array(doc["class_weight"], dtype=float), n_features)


def dumps_model(model: Union[DecisionTree, Forest], preset: str = "") -> str:
    doc = {
        "version": MODEL_VERSION,
        "preset": preset,
        "registry": list(FEATURE_NAMES),
        "registry_fingerprint": registry_fingerprint(),
    }
    if isinstance(model, Forest):
        doc.update(kind="forest", params=_params_doc(model.params), seed=model.seed,
                   max_features=model.max_features,
                   trees=[dict(seed=s, **_tree_doc(t)) for s, t in zip(model.seeds, model.trees)])
    else:
        doc.update(kind="tree", params=_params_doc(model.params), **_tree_doc(model))
    return json.dumps(doc, indent=1) + "\n"


def loads_model(text: str) -> Union[DecisionTree, Forest]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelMismatchError(f"not a model file: {e}") from None
    if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
        raise ModelMismatchError(f"unsupported model version {doc.get('version') if isinstance(doc, dict) else None!r}")
    if doc.get("registry") != list(FEATURE_NAMES) or doc.get("registry_fingerprint") != registry_fingerprint():
        raise ModelMismatchError("model was trained on a different feature registry")
    params = TreeParams(**doc["params"])
    n = len(FEATURE_NAMES)
    if doc["kind"] == "forest":
        trees = [_tree_from(t, params, n) for t in doc["trees"]]
        return Forest(trees, [t["seed"] for t in doc["trees"]], doc["max_features"], doc["seed"], params)
    return _tree_from(doc, params, n)
