import json
from fractions import Fraction

import pytest
from hypothesis import given, settings

from bendlab import tabio
from bendlab.model import BendKind, validate_score
from bendlab.tabio import ParseError, ScoreValidationError

from strategies import scores


BASIC = 'tab v1\ntrack "t"\nts 4/4\nkey 0\n| 1.5*1 1.7*1 1.5*1 1.7*1\n'


def test_parse_basic():
    s = tabio.parse_text(BASIC)
    assert len(s.tracks) == 1
    assert [e.onset for e in s.tracks[0].events] == [0, 1, 2, 3]


def test_parse_bend():
    s = tabio.parse_text('tab v1\ntrack "t"\n| 1.15{up:4}*1/2 r*7/2\n')
    (ev,) = s.tracks[0].events
    (n,) = ev.notes
    assert (n.string, n.fret) == (1, 15)
    assert n.bend.kind is BendKind.BASIC and n.bend.amplitude_qt == 4
    assert ev.duration == Fraction(1, 2)


def test_default_amplitude_is_a_whole_tone():
    s = tabio.parse_text('tab v1\ntrack "t"\n| 1.15{held}*4\n')
    assert s.tracks[0].events[0].notes[0].bend.amplitude_qt == 4


def test_over_full_measure_reports_position():
    with pytest.raises(ParseError) as e:
        tabio.parse_text('tab v1\ntrack "t"\nts 2/4\n| 1.5*3\n')
    assert "measure over-full" in str(e.value)
    assert (e.value.line, e.value.column) == (4, 3)


def test_under_full_measure():
    with pytest.raises(ParseError, match="under-full"):
        tabio.parse_text('tab v1\ntrack "t"\n| 1.5*1 1.7*1\n')


@pytest.mark.parametrize("src, fragment", [
    ("nope\n", "missing header"),
    ('tab v1\ntrack "t"\n| 7.5*4\n', "string 7"),
    ('tab v1\ntrack "t"\n| 1.31*4\n', "fret 31"),
    ('tab v1\ntrack "t"\n| (1.5 1.7)*4\n', "distinct strings"),
    ('tab v1\ntrack "t"\n| 1.5{wob}*4\n', "unknown bend kind"),
    ('tab v1\n| 1.5*4\n', "before any track"),
    ('tab v1\ntrack "t"\n| 1.5*4\ntuning 64 59 55 50 45 40\n', "first measure"),
    ('tab v1\ntrack "t"\nts 4/3\n', "power of two"),
    ('tab v1\ntrack "t"\n| 1.5*0 r*4\n', "duration must be positive"),
    ('tab v1\ntrack "t"\n| 1.5{cx:0/0,1/2/4}*4\n', "end at time 1"),
])
def test_parse_errors(src, fragment):
    with pytest.raises(ParseError) as e:
        tabio.parse_text(src)
    assert fragment in str(e.value)
    assert e.value.line >= 1 and e.value.column >= 1


def test_dangling_tie_is_a_validation_error():
    with pytest.raises(ScoreValidationError, match="tie has a following event"):
        tabio.parse_text('tab v1\ntrack "t"\n| 1.5*4~\n')


def test_comments_and_multiple_measures_per_line():
    src = 'tab v1 # header\n# a comment\ntitle "x"\ntrack "t"  # lead\n| 1.5*4 | 2.5*2 r*2\n'
    s = tabio.parse_text(src)
    assert s.title == "x"
    assert len(s.tracks[0].measures) == 2


def test_up_down_round_trip():
    s = tabio.parse_text('tab v1\ntrack "t"\n| 1.15{ud:3}*4\n')
    text = tabio.serialize_text(s)
    assert "{ud:3}" in text
    assert tabio.parse_text(text).tracks[0].events[0].notes[0].bend.kind is BendKind.UP_DOWN


def test_complex_round_trip():
    s = tabio.parse_text('tab v1\ntrack "t"\n| 2.12{cx:0/0,1/4/4,3/4/4,1/2}*4\n')
    b = s.tracks[0].events[0].notes[0].bend
    assert b.points == ((0, 0), (Fraction(1, 4), 4), (Fraction(3, 4), 4), (1, 2))
    assert tabio.parse_text(tabio.serialize_text(s)) == s


@settings(max_examples=150, deadline=None)
@given(scores())
def test_text_round_trip(score):
    assert validate_score(score) == []
    text = tabio.serialize_text(score)
    again = tabio.parse_text(text)
    assert again == score
    assert tabio.serialize_text(again) == text


@settings(max_examples=100, deadline=None)
@given(scores())
def test_structured_round_trip(score):
    doc = tabio.serialize_structured(score)
    assert tabio.parse_structured(doc) == score
    assert tabio.serialize_text(tabio.parse_structured(doc)) == tabio.serialize_text(score)


def _doc(**event):
    ev = {"onset": "0", "duration": "4", "tie": False, "notes": [{"string": 1, "fret": 5}]}
    ev.update(event)
    return json.dumps({
        "version": "bendlab-score/1", "title": "", "tracks": [{
            "name": "t", "tuning": [64, 59, 55, 50, 45, 40], "num_measures": 1,
            "directives": [{"measure_index": 0, "ts": "4/4", "key": 0}],
            "events": [ev]}]})


def test_structured_minimal_document():
    s = tabio.parse_structured(_doc())
    assert len(s.tracks[0].events) == 1


def test_structured_fraction_strings_are_exact():
    s = tabio.parse_structured(_doc(duration="3/2"))
    assert s.tracks[0].events[0].duration == Fraction(3, 2)


def test_structured_unknown_bend_kind():
    notes = [{"string": 1, "fret": 5, "bend": {"kind": "wobble", "amplitude_qt": 4}}]
    with pytest.raises(ParseError) as e:
        tabio.parse_structured(_doc(notes=notes))
    assert "wobble" in str(e.value) or "kind" in str(e.value)
    assert e.value.path is not None


def test_detect_format():
    assert tabio.detect_format("a/b.json") == "structured"
    assert tabio.detect_format("a/b.tab") == "text"
