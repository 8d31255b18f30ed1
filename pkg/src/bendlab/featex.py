"""Per-event feature vectors with a two-event past/future context."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .bendsem import Label, LabeledEvent
from .model import DomainError, TimeSignature

# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Feature:
    index: int
    name: str
    group: str  # temporal | pitch | position | missing


def _build_registry() -> tuple[Feature, ...]:
    layout = [
        ("duration", "temporal"),
        ("beat_strength", "temporal"),
        ("longer_than_prev", "temporal"),
        ("shorter_than_prev", "temporal"),
        ("same_duration_as_prev", "temporal"),
        ("num_notes", "pitch"),
    ]
    layout += [(f"pitch[{k}]", "pitch") for k in ("n-2", "n-1", "n", "n+1", "n+2")]
    layout += [(f"pitch_jump[{k}]", "pitch") for k in ("n-2->n", "n-1->n", "n->n+1", "n->n+2")]
    layout += [("accidentals", "pitch"), ("pc_wrt_root", "pitch")]
    layout += [(f"fret[{k}]", "position") for k in ("n-2", "n-1", "n+1", "n+2")]
    layout += [(f"string[{k}]", "position") for k in ("n-2", "n-1", "n+1", "n+2")]
    layout += [("fret_jump[n-2->n-1]", "position"), ("fret_jump[n+1->n+2]", "position")]
    layout += [("string_jump[n-2->n-1]", "position"), ("string_jump[n+1->n+2]", "position")]
    layout += [(f"missing[{k}]", "missing") for k in ("n-2", "n-1", "n+1", "n+2")]
    return tuple(Feature(i, name, group) for i, (name, group) in enumerate(layout))


REGISTRY = _build_registry()
FEATURE_NAMES = tuple(f.name for f in REGISTRY)
NUM_FEATURES = len(REGISTRY)
FEATURE_INDEX = {f.name: f.index for f in REGISTRY}

# dims that only take integer values; SMOTE rounds them back
BOOLEAN_DIMS = (2, 3, 4, 29, 30, 31, 32)
INTEGER_DIMS = {5: (1, None), 15: (-7, 7), 16: (0, 11)}

# offsets -2, -1, +1, +2 as used in the registry
_CONTEXT = (-2, -1, 1, 2)


@dataclass(frozen=True)
class FeatureRecord:
    track_id: Optional[str]
    event_index: int
    values: tuple[float, ...]
    label: Label
    synthetic: bool = False


# --------------------------------------------------------------------------
# metrical and tonal helpers

_FINEST = Fraction(1, 8)


def metrical_levels(ts: TimeSignature) -> list[Fraction]:
    """Grid spacings of the metrical hierarchy, coarsest (the measure) first."""
    beat = ts.beat_unit
    levels = [ts.measure_length]

    def push(span):
        if span < levels[-1]:
            levels.append(span)

    num = ts.numerator
    if num % 3 == 0 and num > 3:
        push(3 * beat)
    else:
        group = num
        while group % 2 == 0 and group > 1:
            group //= 2
            push(group * beat)
    push(beat)
    span = beat / 2
    while span >= _FINEST:
        push(span)
        span /= 2
    return levels


def beat_strength(ts: TimeSignature, offset) -> float:
    """Metrical weight of ``offset`` within a measure: ``2**-depth`` of its shallowest grid."""
    offset = Fraction(offset)
    if not 0 <= offset < ts.measure_length:
        raise DomainError(f"offset {offset} outside a {ts} measure")
    levels = metrical_levels(ts)
    for depth, span in enumerate(levels):
        if offset % span == 0:
            return 2.0 ** -depth
    return 2.0 ** -len(levels)


def scale_root(accidentals: int) -> int:
    """Pitch class of the minor-pentatonic root implied by a key signature."""
    if not -7 <= accidentals <= 7:
        raise DomainError(f"accidentals must be in [-7, 7], got {accidentals}")
    return (7 * accidentals + 9) % 12


def pc_wrt_root(pitch: int, accidentals: int) -> int:
    return (pitch % 12 - scale_root(accidentals)) % 12


@dataclass(frozen=True)
class EventStats:
    avg_pitch: float
    avg_fret: float
    avg_string: float
    num_notes: int
    mean_pitch: Fraction  # exact, for the pitch-class feature


def event_stats(ev: LabeledEvent) -> EventStats:
    """Chord averages. Open strings are left out of fret/string averages."""
    mean = Fraction(sum(ev.arrival_pitches), len(ev.arrival_pitches))
    fretted = [(s, f) for s, f in ev.raw_notes if f > 0]
    if fretted:
        avg_fret = sum(f for _, f in fretted) / len(fretted)
        avg_string = sum(s for s, _ in fretted) / len(fretted)
    else:
        avg_fret = avg_string = 0.0
    return EventStats(float(mean), float(avg_fret), float(avg_string), len(ev.raw_notes), mean)


def _round_half_up(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


# --------------------------------------------------------------------------
# extraction


def _linked(prev: LabeledEvent, nxt: LabeledEvent) -> bool:
    """Two consecutive events are context for each other unless a full measure of rest separates them."""
    gap = nxt.onset - (prev.onset + prev.duration)
    return gap < nxt.time_sig.measure_length


def extract_features(events: Sequence[LabeledEvent]) -> list[FeatureRecord]:
    """One record per event of a single track, in order."""
    events = list(events)
    n_ev = len(events)
    stats = [event_stats(e) for e in events]
    links = [_linked(events[i], events[i + 1]) for i in range(n_ev - 1)]

    def neighbour(i: int, k: int) -> Optional[int]:
        j = i
        step = 1 if k > 0 else -1
        for _ in range(abs(k)):
            nj = j + step
            if nj < 0 or nj >= n_ev or not links[min(j, nj)]:
                return None
            j = nj
        return j

    records = []
    for i, ev in enumerate(events):
        st = stats[i]
        ctx = {k: neighbour(i, k) for k in _CONTEXT}
        v = [0.0] * NUM_FEATURES
        v[0] = float(ev.duration)
        v[1] = beat_strength(ev.time_sig, ev.measure_offset)
        p = ctx[-1]
        if p is not None:
            prev_dur = events[p].duration
            v[2] = float(ev.duration > prev_dur)
            v[3] = float(ev.duration < prev_dur)
            v[4] = float(ev.duration == prev_dur)
        v[5] = float(st.num_notes)
        for slot, k in zip((6, 7, 9, 10), _CONTEXT):
            if ctx[k] is not None:
                v[slot] = stats[ctx[k]].avg_pitch
        v[8] = st.avg_pitch
        for slot, k in zip((11, 12), (-2, -1)):
            if ctx[k] is not None:
                v[slot] = float(st.mean_pitch - stats[ctx[k]].mean_pitch)
        for slot, k in zip((13, 14), (1, 2)):
            if ctx[k] is not None:
                v[slot] = float(stats[ctx[k]].mean_pitch - st.mean_pitch)
        v[15] = float(ev.key_sig.accidentals)
        v[16] = float(pc_wrt_root(_round_half_up(st.mean_pitch), ev.key_sig.accidentals))
        for c, k in enumerate(_CONTEXT):
            j = ctx[k]
            if j is not None:
                v[17 + c] = stats[j].avg_fret
                v[21 + c] = stats[j].avg_string
            else:
                v[29 + c] = 1.0
        for slot, (a, b) in ((25, (-2, -1)), (26, (1, 2))):
            ja, jb = ctx[a], ctx[b]
            # jumps need both endpoints fretted
            if ja is not None and jb is not None and stats[ja].avg_fret and stats[jb].avg_fret:
                v[slot] = stats[jb].avg_fret - stats[ja].avg_fret
                v[slot + 2] = stats[jb].avg_string - stats[ja].avg_string
        records.append(FeatureRecord(ev.track_id, ev.event_index, tuple(v), ev.label))
    return records


# --------------------------------------------------------------------------
# dump format


def format_value(x: float) -> str:
    """Shortest text that reads back as the same float."""
    if x == 0:
        return "0"
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def write_dump(records: Iterable[FeatureRecord], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["track_id", "event_index", *FEATURE_NAMES, "label"])
    for r in records:
        w.writerow([r.track_id, r.event_index, *(format_value(x) for x in r.values), r.label.letter])


def dumps(records: Iterable[FeatureRecord]) -> str:
    buf = io.StringIO()
    write_dump(records, buf)
    return buf.getvalue()


def read_dump(src) -> list[FeatureRecord]:
    reader = csv.reader(src)
    header = next(reader, None)
    expected = ["track_id", "event_index", *FEATURE_NAMES, "label"]
    if header != expected:
        raise DomainError("feature dump header does not match the feature registry")
    out = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(expected):
            raise DomainError(f"feature dump line {lineno}: expected {len(expected)} fields, got {len(row)}")
        out.append(FeatureRecord(row[0], int(row[1]), tuple(float(x) for x in row[2:-1]),
                                 Label.from_letter(row[-1])))
    return out


def loads(text: str) -> list[FeatureRecord]:
    return read_dump(io.StringIO(text))
