"""End-to-end steps shared by the command line and the experiment scripts."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .bendsem import Label, LabeledEvent, collapse_ties, simplify, strip_bends, tie_chains
from .evalstats import EvalReport, SplitInfo, SplitSpec, dedup_trackwise, evaluate, split_by_track_detailed
from .featex import FEATURE_NAMES, FeatureRecord, extract_features
from .learn import (
    DecisionTree,
    Forest,
    TreeParams,
    feature_importance,
    fit_forest,
    fit_tree,
    predict,
    predict_forest,
    smote,
)
from .learn.rng import SplitMix64
from .model import BendAnnotation, BendKind, Score, Track

Model = Union[DecisionTree, Forest]


@dataclass(frozen=True)
class Preset:
    params: TreeParams
    use_smote: bool = False
    smote_k: int = 5
    smote_ratio: float = 1.0
    n_trees: int = 0  # > 0 selects a forest


PRESETS = {
    "full": Preset(TreeParams()),
    "balanced": Preset(TreeParams(class_weights="balanced")),
    "smote": Preset(TreeParams(), use_smote=True),
    "forest": Preset(TreeParams(), n_trees=32),
}


def track_id(source: str, index: int) -> str:
    return f"{source}/{index}"


def label_score(score: Score, source: str) -> list[list[LabeledEvent]]:
    """Tie-collapsed, labelled and simplified events, one list per track."""
    return [simplify(collapse_ties(t), track_id(source, i)) for i, t in enumerate(score.tracks)]


def featurize_score(score: Score, source: str) -> list[FeatureRecord]:
    out = []
    for events in label_score(score, source):
        out.extend(extract_features(events))
    return out


def predict_one(model: Model, values) -> Label:
    if isinstance(model, Forest):
        return predict_forest(model, values)
    return predict(model, values)


def predict_records(model: Model, records: Sequence[FeatureRecord]) -> list[Label]:
    return [predict_one(model, r.values) for r in records]


def importances(model: Model) -> np.ndarray:
    if isinstance(model, Forest):
        return np.mean([feature_importance(t) for t in model.trees], axis=0)
    return feature_importance(model)


@dataclass
class TrainResult:
    model: Model
    split: SplitInfo
    n_train: int
    n_test: int
    train_report: EvalReport
    test_report: Optional[EvalReport]
    importances: np.ndarray

    def format(self, preset: str = "") -> str:
        lines = [f"preset\t{preset}",
                 f"train records\t{self.n_train}",
                 f"test records\t{self.n_test}",
                 f"test tracks\t{len(self.split.test_tracks)}",
                 f"test share\t{self.split.test_share:.4f}",
                 f"label proportion gap\t{self.split.class_gap:.4f}",
                 "", "== train ==", self.train_report.format()]
        if self.test_report is not None:
            lines += ["", "== test ==", self.test_report.format()]
        lines += ["", "== top-10 feature importances =="]
        for i in np.argsort(-self.importances, kind="stable")[:10]:
            lines.append(f"{FEATURE_NAMES[i]}\t{self.importances[i]:.6f}")
        return "\n".join(lines) + "\n"


def sub_seeds(seed: int, n: int = 3) -> list[int]:
    rng = SplitMix64(seed)
    return [rng.next_u64() for _ in range(n)]


def train(records: Sequence[FeatureRecord], preset: str, seed: int, split: Optional[SplitSpec] = None,
          touched: Optional[Callable[[list], None]] = None) -> TrainResult:
    """Dedup, track-grouped split, optional SMOTE, fit, evaluate.

    ``touched`` receives the ``(track_id, event_index)`` keys of every record
    handed to the fitting step.
    """
    if preset not in PRESETS:
        raise KeyError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    p = PRESETS[preset]
    split_seed, smote_seed, forest_seed = sub_seeds(seed)
    spec = replace(split, seed=split_seed) if split is not None else SplitSpec(seed=split_seed)
    data = dedup_trackwise(list(records))
    train_recs, test_recs, info = split_by_track_detailed(data, spec)
    fit_recs = smote(train_recs, p.smote_k, p.smote_ratio, smote_seed) if p.use_smote else train_recs
    if touched is not None:
        touched([(r.track_id, r.event_index) for r in fit_recs])
    if p.n_trees:
        model: Model = fit_forest(fit_recs, p.params, p.n_trees, forest_seed)
    else:
        model = fit_tree(fit_recs, p.params)
    train_rep = evaluate([r.label for r in train_recs], predict_records(model, train_recs))
    test_rep = evaluate([r.label for r in test_recs], predict_records(model, test_recs)) if test_recs else None
    return TrainResult(model, info, len(train_recs), len(test_recs), train_rep, test_rep, importances(model))


_BEND_FOR = {Label.UP: BendKind.BASIC, Label.HELD: BendKind.HELD, Label.DOWN: BendKind.REVERSE}


def annotate_track(track: Track, model: Model, tid: str = "") -> tuple[Track, list[str]]:
    """Strip bends, predict a label per sounding event, write the matching bend back.

    In a chord the bend goes on the note of the highest-sounding string.
    Returns the new track and notes about chord placements.
    """
    if any(ev.is_bent for ev in track.events):
        warnings.warn(f"track {track.name!r}: existing bends stripped before annotation")
    bare = strip_bends(track)
    chains = tie_chains(bare)
    events = simplify(collapse_ties(bare), tid)
    assert len(events) == len(chains)
    records = extract_features(events)
    new_events = list(bare.events)
    notes = []
    for chain, rec in zip(chains, records):
        label = predict_one(model, rec.values)
        if label is Label.NONE:
            continue
        k = chain[0]
        ev = new_events[k]
        target = min(range(len(ev.notes)), key=lambda i: ev.notes[i].string)
        bent = tuple(replace(n, bend=BendAnnotation(_BEND_FOR[label], 4)) if i == target else n
                     for i, n in enumerate(ev.notes))
        new_events[k] = replace(ev, notes=bent)
        if len(ev.notes) > 1:
            notes.append(f"track {track.name!r} event {k}: {label.name} bend placed on string "
                         f"{ev.notes[target].string} of a {len(ev.notes)}-note chord")
    return replace(track, events=tuple(new_events)), notes


def annotate_score(score: Score, model: Model) -> tuple[Score, list[str]]:
    tracks, notes = [], []
    for i, t in enumerate(score.tracks):
        nt, n = annotate_track(t, model, track_id("annotate", i))
        tracks.append(nt)
        notes.extend(n)
    return replace(score, tracks=tuple(tracks)), notes
