from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bendlab.bendsem import Label, LabeledEvent
from bendlab.evalstats import (
    SplitError,
    SplitSpec,
    SplitWarning,
    distribution,
    evaluate,
    format_distribution,
    format_matrix,
    fretboard_heatmap,
    heatmap_svg,
    label_counts,
    split_by_track,
    split_by_track_detailed,
)
from bendlab.featex import NUM_FEATURES, FeatureRecord
from bendlab.model import DomainError, KeySignature, TimeSignature

F = Fraction
labels = st.sampled_from(list(Label))


def _rec(track, i, label=Label.NONE):
    return FeatureRecord(track, i, (float(i),) + (0.0,) * (NUM_FEATURES - 1), label)


def _ev(notes, label=Label.NONE, onset=0, duration=1, track="t", ts=TimeSignature()):
    raw = tuple(notes)
    return LabeledEvent(track, 0, F(onset), F(duration), tuple(60 + f for _, f in raw), raw, label,
                        F(onset) % ts.measure_length, ts, KeySignature())


# ------------------------------------------------------------------ metrics


def test_perfect_predictions():
    t = [Label.NONE, Label.UP, Label.HELD, Label.DOWN]
    rep = evaluate(t, t)
    assert rep.f1 == (1.0, 1.0, 1.0, 1.0) and rep.macro_f1 == 1.0 and rep.bend_f1 == 1.0


def test_all_none_predictions():
    rep = evaluate([Label.NONE, Label.UP, Label.DOWN], [Label.NONE] * 3)
    assert rep.bend_recall == 0 and rep.bend_f1 == 0


def test_evaluate_errors():
    with pytest.raises(DomainError):
        evaluate([Label.UP], [])
    with pytest.raises(DomainError):
        evaluate([], [])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(labels, labels), min_size=1, max_size=40))
def test_metrics_match_sklearn(pairs):
    sk = pytest.importorskip("sklearn.metrics")
    t = [a.value for a, _ in pairs]
    p = [b.value for _, b in pairs]
    rep = evaluate([a for a, _ in pairs], [b for _, b in pairs])
    pr, rc, f1, _ = sk.precision_recall_fscore_support(t, p, labels=[0, 1, 2, 3], zero_division=0)
    np.testing.assert_allclose(rep.precision, pr, atol=1e-12)
    np.testing.assert_allclose(rep.recall, rc, atol=1e-12)
    np.testing.assert_allclose(rep.f1, f1, atol=1e-12)
    present = sorted(set(t) | set(p))
    assert rep.macro_f1 == pytest.approx(sk.f1_score(t, p, labels=present, average="macro", zero_division=0))
    tb, pb = [int(x > 0) for x in t], [int(x > 0) for x in p]
    assert rep.bend_f1 == pytest.approx(sk.f1_score(tb, pb, zero_division=0))
    assert rep.confusion.tolist() == sk.confusion_matrix(t, p, labels=[0, 1, 2, 3]).tolist()


def test_report_format_has_every_label():
    text = evaluate([Label.UP, Label.NONE], [Label.UP, Label.UP]).format()
    for sym in "∅↑→↓":
        assert sym in text
    assert "macro_f1" in text and "bend" in text


# ------------------------------------------------------------------ split


def test_four_identical_tracks_one_in_test():
    recs = [_rec(f"t{k}", i, Label.UP if i % 4 == 0 else Label.NONE) for k in range(4) for i in range(20)]
    train, test, info = split_by_track_detailed(recs, SplitSpec(seed=3))
    assert len({r.track_id for r in test}) == 1
    assert len(test) == 20 and info.class_gap == 0


def test_single_track_rejected():
    with pytest.raises(SplitError, match="cannot split without leaking a track"):
        split_by_track([_rec("a", 0), _rec("a", 1)])


def test_unreachable_tolerance_warns_with_gap():
    recs = [_rec("a", i, Label.UP) for i in range(10)] + [_rec("b", i) for i in range(30)]
    with pytest.warns(SplitWarning, match="gap"):
        _, _, info = split_by_track_detailed(recs, SplitSpec())
    assert not info.within_tolerance and info.class_gap == 1.0


def test_seed_changes_split():
    recs = [_rec(f"t{k}", i) for k in range(12) for i in range(10)]
    picks = {split_by_track_detailed(recs, SplitSpec(seed=s))[2].test_tracks for s in range(6)}
    assert len(picks) > 1


# ------------------------------------------------------------------ statistics


def test_label_counts():
    assert label_counts([]).counts == (0, 0, 0, 0) and label_counts([]).total == 0
    c = label_counts([_ev([(1, 5)], Label.UP)])
    assert c.counts == (0, 1, 0, 0) and c.total == 1
    assert c.format() == "∅\t↑\t→\t↓\tTotal\n0\t1\t0\t0\t1\n"


def test_single_note_heatmap():
    m = fretboard_heatmap([_ev([(2, 8)])])
    assert m.shape == (6, 25)
    assert m[1, 8] == 1.0 and m.sum() == 1.0


def test_empty_heatmap_is_zero():
    assert fretboard_heatmap([]).sum() == 0


def test_bent_heatmap_on_top_strings():
    evs = [_ev([(s, f)], Label.UP if s <= 3 else Label.NONE) for s in range(1, 7) for f in range(0, 20, 3)]
    m = fretboard_heatmap(evs, bent_only=True)
    assert m[:3].sum() == pytest.approx(1.0, abs=1e-12) and m[3:].sum() == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.lists(st.tuples(st.integers(1, 6), st.integers(0, 30)), min_size=1, max_size=3),
                          labels), min_size=1, max_size=30))
def test_heatmap_normalizes(items):
    evs = [_ev(n, l) for n, l in items]
    m = fretboard_heatmap(evs)
    assert abs(m.sum() - 1) <= 1e-9 and (m >= 0).all()
    assert m.shape[1] == max(25, 1 + max(f for n, _ in items for _, f in n))


def test_downbeat_histogram():
    d = distribution([_ev([(1, 5)], onset=0)], "beat_strength")
    assert d == {Label.NONE: {1.0: 1.0}}


def test_relative_duration_of_longer_bends():
    evs = []
    t = 0
    for k in range(6):
        evs.append(_ev([(1, 5)], Label.NONE, onset=t, duration=F(1, 2)))
        t += F(1, 2)
        evs.append(_ev([(1, 7)], Label.UP, onset=t, duration=1))
        t += 1
    d = distribution(evs, "relative_duration")
    assert d[Label.UP] == {"longer": 1.0, "shorter": 0.0, "same": 0.0}


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(labels, st.sampled_from([F(1, 4), F(1, 2), F(1), F(3, 2)]), st.integers(0, 15)),
                min_size=1, max_size=40),
       st.sampled_from(["beat_strength", "duration", "relative_duration", "pitch"]), st.booleans())
def test_histograms_normalize(items, quantity, per_label):
    evs, t = [], F(0)
    for label, dur, fret in items:
        evs.append(_ev([(1, fret)], label, onset=t % 4, duration=dur))
        t += dur
    for hist in distribution(evs, quantity, per_label).values():
        assert abs(sum(hist.values()) - 1) <= 1e-9
    text = format_distribution(distribution(evs, quantity, per_label), quantity)
    assert text.startswith(quantity)


def test_distribution_rejects_unknown_quantity():
    with pytest.raises(DomainError):
        distribution([], "loudness")


def test_matrix_and_svg_output():
    m = fretboard_heatmap([_ev([(1, 3)]), _ev([(6, 0)])])
    tsv = format_matrix(m)
    assert tsv.splitlines()[0].startswith("string\t0\t1")
    assert len(tsv.splitlines()) == 7
    svg = heatmap_svg(m, "all notes")
    assert svg.startswith("<svg") and "all notes" in svg
