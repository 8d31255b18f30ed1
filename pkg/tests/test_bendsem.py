import warnings
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bendlab import tabio
from bendlab.bendsem import (
    BendConflictError,
    Label,
    NormalizationWarning,
    bendless_track,
    collapse_ties,
    decompose_complex,
    label_events,
    semitones,
    simplify,
    strip_bends,
    tie_chains,
)
from bendlab.model import BendAnnotation, BendKind, DomainError, NoteEvent, Note, validate_score, Score

from conftest import make_track
from strategies import tracks

F = Fraction


def _one(src_measures):
    return tabio.parse_text('tab v1\ntrack "t"\n' + src_measures).tracks[0]


def test_label_order_and_symbols():
    assert sorted([Label.DOWN, Label.NONE, Label.HELD, Label.UP]) == list(Label)
    assert "".join(l.symbol for l in Label) == "∅↑→↓"
    assert Label.from_letter("H") is Label.HELD


def test_quarter_tied_to_eighth():
    tr = _one("| 1.5*1~ 1.5*1/2 r*5/2\n")
    out = collapse_ties(tr)
    assert len(out.events) == 1
    assert out.events[0].duration == F(3, 2) and not out.events[0].tied_to_next


def test_three_tied_eighths():
    tr = _one("| 1.5*1/2~ 1.5*1/2~ 1.5*1/2 r*5/2\n")
    assert [e.duration for e in collapse_ties(tr).events] == [F(3, 2)]
    assert tie_chains(tr) == [[0, 1, 2]]


def test_no_ties_is_identity():
    tr = _one("| 1.5*1 2.5*1 r*2\n")
    assert collapse_ties(tr) == tr


def test_tie_across_barline_keeps_first_bend():
    tr = _one("| r*3 1.12{up:4}*1~ | 1.12*1 r*3\n")
    (ev,) = collapse_ties(tr).events
    assert ev.duration == 2 and ev.notes[0].bend.kind is BendKind.BASIC


def test_mismatched_tie_warns_and_breaks():
    tr = _one("| 1.5*1~ 1.7*1 r*2\n")
    with pytest.warns(NormalizationWarning):
        out = collapse_ties(tr)
    assert len(out.events) == 2


def test_basic_bend_labels():
    events = label_events(_one("| 1.15{up}*1 r*3\n"))
    assert [(e.label, e.duration) for e in events] == [(Label.UP, 1)]


def test_up_down_splits_in_half():
    events = label_events(_one("| r*1 1.15{ud}*1 r*2\n"))
    assert [(e.label, e.duration, e.onset, e.measure_offset) for e in events] == [
        (Label.UP, F(1, 2), 1, 1), (Label.DOWN, F(1, 2), F(3, 2), F(3, 2))]


def test_plain_chord_is_none():
    (ev,) = label_events(_one("| (1.5 2.5 3.6)*4\n"))
    assert ev.label is Label.NONE and ev.raw_notes == ((1, 5), (2, 5), (3, 6))


def test_chord_takes_bent_note_label():
    (ev,) = simplify(_one("| (1.12 2.13{held:4})*4\n"))
    assert ev.label is Label.HELD
    assert ev.arrival_pitches == (76, 59 + 13 + 2)


def test_conflicting_chord_bends_rejected():
    with pytest.raises(BendConflictError):
        label_events(_one("| (1.12{up} 2.13{rel})*4\n"))


@pytest.mark.parametrize("points, expected", [
    (((0, 0), (1, 4)), [(F(1), Label.UP)]),
    (((0, 0), (F(1, 2), 4), (1, 0)), [(F(1, 2), Label.UP), (F(1, 2), Label.DOWN)]),
    (((0, 4), (F(1, 2), 4), (1, 0)), [(F(1, 2), Label.HELD), (F(1, 2), Label.DOWN)]),
    (((0, 0), (F(1, 4), 0), (F(3, 4), 4), (1, 4)), [(F(1, 4), Label.NONE), (F(1, 2), Label.UP), (F(1, 4), Label.HELD)]),
    (((0, 0), (F(1, 3), 2), (F(2, 3), 4), (1, 4)), [(F(5, 8), Label.UP), (F(3, 8), Label.HELD)]),
    # a sliver shorter than half an eighth snaps away
    (((0, 0), (F(1, 20), 4), (1, 4)), [(F(1), Label.HELD)]),
])
def test_decompose_complex(points, expected):
    assert decompose_complex(points) == expected


def test_decompose_complex_needs_two_points():
    with pytest.raises(DomainError):
        decompose_complex([(0, 0)])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 999), st.integers(0, 8)), min_size=0, max_size=6), st.integers(0, 8),
       st.integers(0, 8))
def test_decompose_complex_partitions_unity(mids, first, last):
    times = sorted({F(t, 1000) for t, _ in mids})
    offs = dict((F(t, 1000), o) for t, o in mids)
    points = [(F(0), first)] + [(t, offs[t]) for t in times] + [(F(1), last)]
    segs = decompose_complex(points)
    assert sum(s for s, _ in segs) == 1
    assert all(s > 0 and (s * 8).denominator == 1 for s, _ in segs)
    assert all(a[1] is not b[1] for a, b in zip(segs, segs[1:]))


@pytest.mark.parametrize("bend, label, pitch", [("{up:4}", Label.UP, 81), ("{rel:4}", Label.DOWN, 79),
                                               ("{held:3}", Label.HELD, 81), ("{up:1}", Label.UP, 80)])
def test_arrival_pitch(bend, label, pitch):
    (ev,) = simplify(_one(f"| 1.15{bend}*4\n"))
    assert (ev.label, ev.arrival_pitches) == (label, (pitch,))


def test_unbent_pitch():
    (ev,) = simplify(_one("| 3.9*4\n"))
    assert ev.arrival_pitches == (64,)


@pytest.mark.parametrize("qt, st_", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 3), (8, 4)])
def test_semitone_rounding_goes_up_on_halves(qt, st_):
    assert semitones(qt) == st_


@settings(max_examples=80, deadline=None)
@given(tracks())
def test_label_invariants(track):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormalizationWarning)
        collapsed = collapse_ties(track)
    labelled = label_events(collapsed)
    simple = simplify(collapsed)
    assert sum((e.duration for e in labelled), F(0)) == sum((e.duration for e in collapsed.events), F(0))
    for lab, sim in zip(labelled, simple):
        src = collapsed.events[lab.source_index]
        kinds = {n.bend.kind for n in src.notes if n.bend}
        if not kinds:
            assert lab.label is Label.NONE
        elif BendKind.COMPLEX not in kinds:
            assert lab.label is not Label.NONE
        assert len(sim.arrival_pitches) == len(sim.raw_notes)
        if sim.label is Label.UP:
            assert any(a > p for a, p in zip(sim.arrival_pitches, lab.arrival_pitches))
        if sim.label in (Label.DOWN, Label.NONE):
            assert sim.arrival_pitches == lab.arrival_pitches
    assert all(e.label is Label.NONE for e in label_events(strip_bends(collapsed)))


@settings(max_examples=80, deadline=None)
@given(tracks())
def test_bendless_track_keeps_arrival_pitches(track):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NormalizationWarning)
        flat = bendless_track(track)
        before = simplify(collapse_ties(track))
        after = simplify(collapse_ties(flat))
    assert validate_score(Score("", (flat,))) == []
    assert not any(e.is_bent for e in flat.events)
    assert [(e.onset, e.duration, e.arrival_pitches) for e in before] == \
        [(e.onset, e.duration, e.arrival_pitches) for e in after]
