"""Tablature domain types and exact time arithmetic.

Durations and offsets are quarter lengths (QL) held as :class:`fractions.Fraction`.
Strings are numbered 1 (highest-sounding, "e") to 6 (lowest, "E").
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional

QL = Fraction

NUM_STRINGS = 6
MAX_FRET = 30
STANDARD_TUNING_MIDI = (64, 59, 55, 50, 45, 40)
STRING_NAMES = ("e", "B", "G", "D", "A", "E")


class DomainError(ValueError):
    """Raised when an operation is called outside its domain."""


def ql(value) -> Fraction:
    """Coerce ``value`` (int, Fraction or "p/q" string) to an exact QL."""
    if isinstance(value, float):
        raise TypeError("QL values must be exact; got float %r" % value)
    return Fraction(value)


def format_ql(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Tuning:
    open_pitches: tuple[int, ...] = STANDARD_TUNING_MIDI

    def __post_init__(self):
        object.__setattr__(self, "open_pitches", tuple(int(p) for p in self.open_pitches))
        if len(self.open_pitches) != NUM_STRINGS:
            raise DomainError(f"tuning needs {NUM_STRINGS} pitches, got {len(self.open_pitches)}")
        if any(not 0 <= p <= 127 for p in self.open_pitches):
            raise DomainError(f"tuning pitch out of midi range: {self.open_pitches}")
        if any(a <= b for a, b in zip(self.open_pitches, self.open_pitches[1:])):
            raise DomainError(f"tuning must strictly decrease from string 1 to 6: {self.open_pitches}")

    @classmethod
    def standard(cls) -> "Tuning":
        return cls(STANDARD_TUNING_MIDI)


@dataclass(frozen=True)
class TimeSignature:
    numerator: int = 4
    denominator: int = 4

    def __post_init__(self):
        if self.numerator < 1:
            raise DomainError(f"time signature numerator must be positive: {self}")
        d = self.denominator
        if d < 1 or d & (d - 1):
            raise DomainError(f"time signature denominator must be a power of two: {self}")

    @property
    def beat_unit(self) -> Fraction:
        return Fraction(4, self.denominator)

    @property
    def measure_length(self) -> Fraction:
        return self.numerator * self.beat_unit

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"


@dataclass(frozen=True)
class KeySignature:
    accidentals: int = 0

    def __post_init__(self):
        if not -7 <= self.accidentals <= 7:
            raise DomainError(f"accidentals must be in [-7, 7], got {self.accidentals}")


class BendKind(str, Enum):
    BASIC = "basic"
    HELD = "held"
    REVERSE = "reverse"
    UP_DOWN = "up_down"
    COMPLEX = "complex"


@dataclass(frozen=True)
class BendAnnotation:
    """A bend on one note. ``amplitude_qt`` is in quarter tones (4 = "full").

    For ``COMPLEX`` bends ``points`` holds ``(time_frac, offset_qt)`` pairs and
    the amplitude is derived from them.
    """

    kind: BendKind
    amplitude_qt: int = 4
    points: tuple[tuple[Fraction, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", BendKind(self.kind))
        pts = tuple((Fraction(t), int(o)) for t, o in self.points)
        object.__setattr__(self, "points", pts)
        if self.kind is BendKind.COMPLEX:
            _check_points(pts)
            object.__setattr__(self, "amplitude_qt", max(o for _, o in pts))
        elif pts:
            raise DomainError(f"only complex bends carry points, not {self.kind.value}")
        if self.amplitude_qt < 1:
            raise DomainError(f"bend amplitude must be >= 1 quarter tone, got {self.amplitude_qt}")


def _check_points(pts) -> None:
    if len(pts) < 2:
        raise DomainError("complex bend needs at least 2 points")
    if pts[0][0] != 0 or pts[-1][0] != 1:
        raise DomainError("complex bend points must start at time 0 and end at time 1")
    if any(a[0] >= b[0] for a, b in zip(pts, pts[1:])):
        raise DomainError("complex bend point times must strictly increase")
    if any(o < 0 for _, o in pts):
        raise DomainError("complex bend offsets must be >= 0")


@dataclass(frozen=True)
class Note:
    string: int
    fret: int
    bend: Optional[BendAnnotation] = None


@dataclass(frozen=True)
class NoteEvent:
    onset: Fraction
    duration: Fraction
    notes: tuple[Note, ...]
    tied_to_next: bool = False

    def __post_init__(self):
        object.__setattr__(self, "onset", ql(self.onset))
        object.__setattr__(self, "duration", ql(self.duration))
        object.__setattr__(self, "notes", tuple(self.notes))

    @property
    def end(self) -> Fraction:
        return self.onset + self.duration

    @property
    def shape(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted((n.string, n.fret) for n in self.notes))

    @property
    def is_bent(self) -> bool:
        return any(n.bend is not None for n in self.notes)


@dataclass(frozen=True)
class Measure:
    time_sig: TimeSignature
    key_sig: KeySignature
    start: Fraction

    @property
    def end(self) -> Fraction:
        return self.start + self.time_sig.measure_length


@dataclass(frozen=True)
class Track:
    name: str
    tuning: Tuning = field(default_factory=Tuning.standard)
    measures: tuple[Measure, ...] = ()
    events: tuple[NoteEvent, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "measures", tuple(self.measures))
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def end(self) -> Fraction:
        return self.measures[-1].end if self.measures else Fraction(0)

    def measure_index_at(self, offset: Fraction) -> int:
        """Index of the measure containing ``offset`` (half-open intervals)."""
        starts = [m.start for m in self.measures]
        i = bisect.bisect_right(starts, offset) - 1
        if i < 0 or offset >= self.end:
            raise DomainError(f"offset {offset} lies outside track {self.name!r}")
        return i

    def measure_at(self, offset: Fraction) -> Measure:
        return self.measures[self.measure_index_at(offset)]


@dataclass(frozen=True)
class Score:
    title: str = ""
    tracks: tuple[Track, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tracks", tuple(self.tracks))


def pitch_of(tuning: Tuning, string: int, fret: int) -> int:
    if not 1 <= string <= len(tuning.open_pitches):
        raise DomainError(f"string {string} out of range 1..{len(tuning.open_pitches)}")
    if fret < 0:
        raise DomainError(f"fret must be >= 0, got {fret}")
    return tuning.open_pitches[string - 1] + fret


def build_measures(signatures, start: Fraction = Fraction(0)) -> tuple[Measure, ...]:
    """Lay out consecutive measures from ``(TimeSignature, KeySignature)`` pairs."""
    out = []
    t = Fraction(start)
    for ts, ks in signatures:
        out.append(Measure(ts, ks, t))
        t += ts.measure_length
    return tuple(out)


@dataclass(frozen=True)
class Violation:
    track: str
    measure: Optional[int]
    rule: str
    detail: str = ""

    def __str__(self) -> str:
        where = f"track {self.track!r}"
        if self.measure is not None:
            where += f", measure {self.measure + 1}"
        return f"{where}: {self.rule}" + (f" ({self.detail})" if self.detail else "")


def validate_score(score: Score) -> list[Violation]:
    """Check every structural invariant; violations are returned, never raised."""
    out: list[Violation] = []
    for track in score.tracks:
        out.extend(_validate_track(track))
    return out


def _validate_track(track: Track) -> list[Violation]:
    out: list[Violation] = []
    name = track.name

    def bad(rule, measure=None, detail=""):
        out.append(Violation(name, measure, rule, detail))

    expected = Fraction(0)
    for i, m in enumerate(track.measures):
        if m.start != expected:
            bad("measures tile the timeline without gaps", i, f"starts at {m.start}, expected {expected}")
        expected = m.end

    prev_end = None
    for k, ev in enumerate(track.events):
        try:
            mi = track.measure_index_at(ev.onset) if ev.onset >= 0 else None
        except DomainError:
            mi = None
        if ev.duration <= 0:
            bad("duration > 0", mi, f"event {k}")
        if not ev.notes:
            bad("event has at least one note", mi, f"event {k}")
        strings = [n.string for n in ev.notes]
        if len(set(strings)) != len(strings):
            bad("distinct strings", mi, f"event {k}")
        for n in ev.notes:
            if not 1 <= n.string <= len(track.tuning.open_pitches):
                bad("string within tuning size", mi, f"event {k}, string {n.string}")
            if not 0 <= n.fret <= MAX_FRET:
                bad("fret in range", mi, f"event {k}, fret {n.fret}")
        if prev_end is not None:
            if ev.onset <= track.events[k - 1].onset:
                bad("events sorted by onset", mi, f"event {k}")
            elif ev.onset < prev_end:
                bad("no overlap", mi, f"event {k} starts at {ev.onset} before {prev_end}")
        prev_end = ev.end
        if mi is None:
            bad("event lies within a measure", None, f"event {k} at {ev.onset}")
        elif ev.end > track.measures[mi].end:
            bad("event lies within a measure", mi, f"event {k} ends at {ev.end}")
        if ev.tied_to_next:
            nxt = track.events[k + 1] if k + 1 < len(track.events) else None
            if nxt is None:
                bad("tie has a following event", mi, f"event {k}")
    return out
