from collections import defaultdict
from fractions import Fraction

import pytest

from bendlab.model import KeySignature, Note, NoteEvent, Score, TimeSignature, Track, Tuning, build_measures

ACCEPTANCE_TITLES = {
    1: "scale root and pitch class numbering",
    2: "bend-less simplification",
    3: "up&down splitting",
    4: "beat-strength table",
    5: "CART split matches brute force",
    6: "planted-rule recovery",
    7: "dedup and track split invariants",
    8: "metrics worked example",
    9: "SMOTE geometry",
    10: "end-to-end determinism",
    11: "statistics contracts",
}

_outcomes: dict = defaultdict(list)


def pytest_runtest_logreport(report):
    marks = getattr(report, "acceptance_ids", None)
    if not marks:
        return
    if report.when == "call" or report.outcome != "passed":
        for n in marks:
            _outcomes[n].append(report.outcome == "passed" or (report.when != "call" and report.outcome == "skipped"))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    rep.acceptance_ids = [m.args[0] for m in item.iter_markers("acceptance")]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_TITLES):
        if n not in _outcomes:
            status = "NOT RUN"
        else:
            status = "PASS" if all(_outcomes[n]) else "FAIL"
        terminalreporter.write_line(f"AC{n:<2} {status:<7} {ACCEPTANCE_TITLES[n]}")


def make_track(items, ts=TimeSignature(4, 4), key=KeySignature(0), name="t", n_measures=None):
    """Build a track from ``(duration, notes)`` items laid end to end.

    ``notes`` is a list of ``(string, fret)`` or ``(string, fret, bend)``; ``None``
    is a rest.
    """
    events = []
    t = Fraction(0)
    for dur, notes in items:
        dur = Fraction(dur)
        if notes is not None:
            ns = tuple(Note(*n) for n in notes)
            events.append(NoteEvent(t, dur, ns))
        t += dur
    if n_measures is None:
        n_measures = max(1, -(-t // ts.measure_length))
    measures = build_measures([(ts, key)] * int(n_measures))
    return Track(name, Tuning.standard(), measures, tuple(events))


def make_score(*tracks, title=""):
    return Score(title, tuple(tracks))


@pytest.fixture
def track_factory():
    return make_track
