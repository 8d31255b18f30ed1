from .forest import Forest, fit_forest, predict_forest, vote
from .modelio import ModelMismatchError, dumps_model, loads_model
from .rng import SplitMix64
from .smote import smote, smote_detailed
from .tree import (
    DecisionTree,
    PathStep,
    Split,
    TreeParams,
    as_arrays,
    best_split,
    decision_path,
    feature_importance,
    fit_arrays,
    fit_tree,
    predict,
    predict_proba,
    shared_prefix,
)

__all__ = [
    "DecisionTree", "Forest", "ModelMismatchError", "PathStep", "Split", "SplitMix64", "TreeParams",
    "as_arrays", "best_split", "decision_path", "dumps_model", "feature_importance", "fit_arrays",
    "fit_forest", "fit_tree", "loads_model", "predict", "predict_forest", "predict_proba",
    "shared_prefix", "smote", "smote_detailed", "vote",
]
