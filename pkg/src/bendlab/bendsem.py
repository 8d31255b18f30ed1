"""Bend labels, tie collapsing and the bend-less simplification.

Every note event is mapped to one of four string-motion labels. Up & down and
complex bends are cut into consecutive segments, one label each, and every
segment gets the pitch a listener would hear at its end (the "arrival pitch").
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Optional

from .model import (
    BendAnnotation,
    BendKind,
    DomainError,
    KeySignature,
    Note,
    NoteEvent,
    TimeSignature,
    Track,
    pitch_of,
)


class Label(Enum):
    NONE = 0
    UP = 1
    HELD = 2
    DOWN = 3

    @property
    def symbol(self) -> str:
        return "∅↑→↓"[self.value]

    @property
    def letter(self) -> str:
        return "NUHD"[self.value]

    @classmethod
    def from_letter(cls, letter: str) -> "Label":
        try:
            return cls("NUHD".index(letter))
        except ValueError:
            raise DomainError(f"unknown label letter {letter!r}") from None

    def __lt__(self, other):
        return self.value < other.value


LABELS = tuple(Label)

_KIND_LABEL = {BendKind.BASIC: Label.UP, BendKind.HELD: Label.HELD, BendKind.REVERSE: Label.DOWN}


class NormalizationWarning(UserWarning):
    pass


class BendConflictError(DomainError):
    pass


@dataclass(frozen=True)
class LabeledEvent:
    track_id: str
    event_index: int
    onset: Fraction
    duration: Fraction
    arrival_pitches: tuple[int, ...]
    raw_notes: tuple[tuple[int, int], ...]
    label: Label
    measure_offset: Fraction
    time_sig: TimeSignature
    key_sig: KeySignature
    source_index: int = 0  # index of the tie-collapsed event this segment came from


def semitones(amplitude_qt: int) -> int:
    """Quarter tones to whole semitones, halves rounding up."""
    return (amplitude_qt + 1) // 2


def tie_chains(track: Track) -> list[list[int]]:
    """Indices of the written events forming each sounding event.

    A tie into an event of a different shape (or across a gap) breaks the
    chain there and emits a :class:`NormalizationWarning`.
    """
    events = track.events
    chains: list[list[int]] = []
    i = 0
    while i < len(events):
        chain = [i]
        while events[chain[-1]].tied_to_next and chain[-1] + 1 < len(events):
            j = chain[-1]
            nxt = events[j + 1]
            if nxt.shape != events[i].shape or nxt.onset != events[j].end:
                warnings.warn(NormalizationWarning(
                    f"track {track.name!r}: tie from event {j} does not match event {j + 1}; chain broken"))
                break
            chain.append(j + 1)
        chains.append(chain)
        i = chain[-1] + 1
    return chains


def collapse_ties(track: Track) -> Track:
    """Merge every tie chain into its first event, summing durations."""
    out = []
    for chain in tie_chains(track):
        head = track.events[chain[0]]
        total = sum((track.events[j].duration for j in chain), Fraction(0))
        out.append(replace(head, duration=total, tied_to_next=False))
    return replace(track, events=tuple(out))


def _snap(t: Fraction) -> Fraction:
    # nearest 1/8, halves rounding up
    return Fraction(math.floor(t * 8 + Fraction(1, 2)), 8)


def _segment_label(a: int, b: int) -> Label:
    if b > a:
        return Label.UP
    if b < a:
        return Label.DOWN
    return Label.HELD if a > 0 else Label.NONE


def decompose_complex(points) -> list[tuple[Fraction, Label]]:
    """Cut a complex bend curve into labelled segments.

    Each pair of consecutive points becomes one segment labelled by the sign of
    its slope; point times snap to the nearest eighth of the event, empty
    segments are dropped and equal neighbours merged.
    """
    if len(points) < 2:
        raise DomainError("complex bend needs at least 2 points")
    return [(span, label) for span, label, _ in _complex_segments(points)]


def _complex_segments(points) -> list[tuple[Fraction, Label, int]]:
    """Like :func:`decompose_complex` but also returns the offset reached by each segment."""
    pts = [(Fraction(t), int(o)) for t, o in points]
    segments: list[list] = []
    for (t0, o0), (t1, o1) in zip(pts, pts[1:]):
        span = _snap(t1) - _snap(t0)
        if span <= 0:
            continue
        label = _segment_label(o0, o1)
        if segments and segments[-1][1] is label:
            segments[-1][0] += span
            segments[-1][2] = max(segments[-1][2], o1)
        else:
            segments.append([span, label, max(o0, o1)])
    return [tuple(s) for s in segments]


def _event_bend(ev: NoteEvent, where: str) -> Optional[BendAnnotation]:
    bends = [n.bend for n in ev.notes if n.bend is not None]
    if not bends:
        return None
    first = bends[0]
    for b in bends[1:]:
        if b.kind is not first.kind or (first.kind is BendKind.COMPLEX and b.points != first.points):
            raise BendConflictError(f"{where}: chord notes carry conflicting bends "
                                    f"({first.kind.value} vs {b.kind.value})")
    return first


def event_segments(ev: NoteEvent, where: str = "event") -> list[tuple[Fraction, Label, dict]]:
    """Split one event into ``(duration_frac, label, {note_pos: amplitude_qt})`` segments.

    The amplitude map gives, for each bent note, the bend offset its arrival
    pitch should include (absent = fretted pitch).
    """
    bend = _event_bend(ev, where)
    if bend is None:
        return [(Fraction(1), Label.NONE, {})]
    bent = [i for i, n in enumerate(ev.notes) if n.bend is not None]

    def amps(label: Label, offsets: dict) -> dict:
        if label in (Label.UP, Label.HELD):
            return {i: offsets[i] for i in bent if offsets[i] > 0}
        return {}

    if bend.kind in _KIND_LABEL:
        label = _KIND_LABEL[bend.kind]
        return [(Fraction(1), label, amps(label, {i: ev.notes[i].bend.amplitude_qt for i in bent}))]
    if bend.kind is BendKind.UP_DOWN:
        offsets = {i: ev.notes[i].bend.amplitude_qt for i in bent}
        half = Fraction(1, 2)
        return [(half, Label.UP, amps(Label.UP, offsets)), (half, Label.DOWN, {})]
    out = []
    for span, label, reached in _complex_segments(bend.points):
        out.append((span, label, amps(label, {i: reached for i in bent})))
    return out


def label_events(track: Track, track_id: str = "") -> list[LabeledEvent]:
    """Label a tie-collapsed track, splitting multi-motion bends.

    Arrival pitches are the plain fretted pitches here; :func:`simplify`
    replaces them with the bend arrival pitches.
    """
    return _label(track, track_id, with_bends=False)


def simplify(track: Track, track_id: str = "") -> list[LabeledEvent]:
    """Labelled events whose pitches are the bend arrival pitches.

    UP/HELD notes sound at fretted pitch plus the rounded amplitude, DOWN notes
    at the released (fretted) pitch, unbent notes at their fretted pitch.
    """
    return _label(track, track_id, with_bends=True)


def _label(track: Track, track_id: str, with_bends: bool) -> list[LabeledEvent]:
    out: list[LabeledEvent] = []
    for k, ev in enumerate(track.events):
        fretted = [pitch_of(track.tuning, n.string, n.fret) for n in ev.notes]
        raw = tuple((n.string, n.fret) for n in ev.notes)
        onset = ev.onset
        for frac, label, amp in event_segments(ev, f"track {track.name!r} event {k}"):
            dur = ev.duration * frac
            if with_bends:
                pitches = tuple(p + semitones(amp[i]) if i in amp else p for i, p in enumerate(fretted))
            else:
                pitches = tuple(fretted)
            m = track.measure_at(onset)
            out.append(LabeledEvent(
                track_id=track_id,
                event_index=len(out),
                onset=onset,
                duration=dur,
                arrival_pitches=pitches,
                raw_notes=raw,
                label=label,
                measure_offset=onset - m.start,
                time_sig=m.time_sig,
                key_sig=m.key_sig,
                source_index=k,
            ))
            onset += dur
    return out


def process_track(track: Track, track_id: str = "") -> list[LabeledEvent]:
    """Collapse ties, label and simplify in one go."""
    return simplify(collapse_ties(track), track_id)


def strip_bends(track: Track) -> Track:
    events = tuple(
        replace(ev, notes=tuple(replace(n, bend=None) for n in ev.notes)) if ev.is_bent else ev
        for ev in track.events
    )
    return replace(track, events=events)


def bendless_track(track: Track) -> Track:
    """Rewrite a track without bends, keeping every arrival pitch.

    Bent notes move up the same string by the rounded amplitude; multi-motion
    bends become consecutive notes. Events crossing a barline after splitting
    are cut at the barline and tied. The choice of same-string refingering is
    arbitrary; features never read the current note's position.
    """
    track = collapse_ties(track)
    pieces: list[NoteEvent] = []
    for k, ev in enumerate(track.events):
        onset = ev.onset
        segs = event_segments(ev, f"track {track.name!r} event {k}")
        for frac, _label, amp in segs:
            dur = ev.duration * frac
            notes = tuple(Note(n.string, n.fret + semitones(amp[i]) if i in amp else n.fret)
                          for i, n in enumerate(ev.notes))
            pieces.extend(_cut_at_barlines(track, onset, dur, notes))
            onset += dur
    return replace(track, events=tuple(pieces))


def _cut_at_barlines(track: Track, onset, dur, notes) -> list[NoteEvent]:
    out = []
    end = onset + dur
    while True:
        m_end = track.measure_at(onset).end
        if end <= m_end:
            out.append(NoteEvent(onset, end - onset, notes))
            return out
        out.append(NoteEvent(onset, m_end - onset, notes, True))
        onset = m_end
