"""Synthetic lead-guitar tracks whose bends follow a planted, recoverable rule.

The generator walks through each track left to right and labels every event
from its context:

* HELD  -- the hand sits in the bend zone and the note repeats the previous arrival pitch,
* DOWN  -- in the zone and the pitch falls by exactly a whole tone,
* UP    -- in the zone, at least a quarter long and longer than its predecessor,
* NONE  -- anything else.

"In the zone" means the previous event's mean fretted position lies on frets
7-15 of strings 1-3. Unbent notes are drawn so that they never satisfy a bend
condition, which makes the label a deterministic function of the extracted
features (see :func:`planted_label`). Bend runs only start on beats.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .bendsem import Label
from .featex import FEATURE_INDEX
from .model import (
    BendAnnotation,
    BendKind,
    KeySignature,
    Note,
    NoteEvent,
    Score,
    TimeSignature,
    Track,
    Tuning,
    build_measures,
    pitch_of,
)

ZONE_FRETS = (7, 15)
ZONE_MAX_STRING = 3
BEND_QT = 4

F = Fraction


@dataclass(frozen=True)
class PlantedConfig:
    measures: tuple[int, int] = (10, 16)
    bend_prob: float = 0.65
    held_prob: float = 0.5
    chord_prob: float = 0.05
    rest_prob: float = 0.03
    three_four_prob: float = 0.25


@dataclass
class _Prev:
    mean_pitch: Fraction
    avg_fret: Fraction
    avg_string: Fraction
    duration: Fraction


def _stats(tuning, notes, duration) -> _Prev:
    pitches = [pitch_of(tuning, s, f) for s, f in notes]
    fretted = [(s, f) for s, f in notes if f > 0]
    if fretted:
        af = F(sum(f for _, f in fretted), len(fretted))
        ast = F(sum(s for s, _ in fretted), len(fretted))
    else:
        af = ast = F(0)
    return _Prev(F(sum(pitches), len(pitches)), af, ast, duration)


def in_zone(prev: Optional[_Prev]) -> bool:
    return (prev is not None and ZONE_FRETS[0] <= prev.avg_fret <= ZONE_FRETS[1]
            and 0 < prev.avg_string <= ZONE_MAX_STRING)


def planted_label(values) -> Label:
    """The planted rule, read back from a feature vector."""
    fi = FEATURE_INDEX
    zone = (values[fi["missing[n-1]"]] == 0
            and ZONE_FRETS[0] <= values[fi["fret[n-1]"]] <= ZONE_FRETS[1]
            and 0 < values[fi["string[n-1]"]] <= ZONE_MAX_STRING)
    if not zone:
        return Label.NONE
    jump = values[fi["pitch_jump[n-1->n]"]]
    if jump == 0:
        return Label.HELD
    if jump == -2:
        return Label.DOWN
    if values[fi["duration"]] >= 1 and values[fi["longer_than_prev"]] == 1:
        return Label.UP
    return Label.NONE


_NONE_DURS = [(F(1, 2), 12), (F(1, 4), 2), (F(1), 3), (F(3, 2), 1), (F(2), 1)]


def _pick_weighted(rng: random.Random, options):
    vals, weights = zip(*options)
    return rng.choices(vals, weights)[0]


def planted_track(rng: random.Random, name: str, cfg: PlantedConfig = PlantedConfig()) -> Track:
    tuning = Tuning.standard()
    ts = TimeSignature(3, 4) if rng.random() < cfg.three_four_prob else TimeSignature(4, 4)
    key = KeySignature(rng.randint(-3, 3))
    n_measures = rng.randint(*cfg.measures)
    measures = build_measures([(ts, key)] * n_measures)
    total = n_measures * ts.measure_length

    logical = []  # (onset, duration, notes, bend kind or None)
    t = F(0)
    prev: Optional[_Prev] = None
    base = rng.randint(0, 17)
    phrase_left = rng.randint(4, 10)

    def fits(d):
        return t + d <= total

    while t < total:
        if phrase_left <= 0:
            base = rng.randint(4, 14) if rng.random() < 0.6 else rng.randint(0, 17)
            phrase_left = rng.randint(4, 10)
        phrase_left -= 1
        zone = in_zone(prev)

        if zone and t.denominator == 1 and prev.duration <= F(1, 2) and rng.random() < cfg.bend_prob:
            run = _bend_run(rng, tuning, base, prev, t, total, cfg)
            if run:
                for onset, dur, notes, kind in run:
                    logical.append((onset, dur, notes, kind))
                last = run[-1]
                prev = _stats(tuning, last[2], last[1])
                t = last[0] + last[1]
                continue

        if prev is not None and rng.random() < cfg.rest_prob and fits(F(1, 2)):
            t += F(1, 2)  # short rest; context stays linked
            continue

        dur = _pick_weighted(rng, [(d, w) for d, w in _NONE_DURS if fits(d)] or [(total - t, 1)])
        if zone and dur >= 1 and dur > prev.duration:
            dur = F(1, 2) if fits(F(1, 2)) else F(1, 4)
        notes = _none_notes(rng, tuning, base, prev if zone else None, dur, cfg)
        logical.append((t, dur, notes, None))
        prev = _stats(tuning, notes, dur)
        t += dur

    events = _layout(logical, measures)
    return Track(name, tuning, measures, tuple(events))


def _candidates(base: int):
    for s in range(1, 7):
        for f in range(base, base + 4):
            yield s, f


def _none_notes(rng, tuning, base, zone_prev: Optional[_Prev], dur, cfg):
    """Unbent notes; inside the zone, repeated pitches and whole-tone drops are excluded."""
    string_weights = [3, 3, 3, 2, 2, 2]
    for _ in range(50):
        s = rng.choices(range(1, 7), string_weights)[0]
        f = base + rng.randint(0, 3)
        notes = [(s, f)]
        if dur == F(1, 2) and s < 6 and rng.random() < cfg.chord_prob:
            notes.append((s + 1, f))
        if zone_prev is None:
            return tuple(notes)
        jump = _stats(tuning, notes, dur).mean_pitch - zone_prev.mean_pitch
        if jump not in (0, -2):
            return tuple(notes)
    for s, f in _candidates(base):
        if pitch_of(tuning, s, f) - zone_prev.mean_pitch not in (0, -2):
            return ((s, f),)
    raise RuntimeError("no admissible note")  # unreachable: 24 candidates, 2 excluded pitches


def _bend_run(rng, tuning, base, prev: _Prev, t, total, cfg):
    lo, hi = max(base, ZONE_FRETS[0]), min(base + 3, ZONE_FRETS[1])
    options = [(s, f) for s in range(1, ZONE_MAX_STRING + 1) for f in range(lo, hi + 1)
               if pitch_of(tuning, s, f) + 2 - prev.mean_pitch not in (0, -2)]
    if not options:
        return None
    s, f = rng.choice(options)
    up = rng.choice([F(1), F(3, 2), F(2)])
    held = up == F(3, 2) and rng.random() < cfg.held_prob
    down = F(1, 2) if held or rng.random() < 0.5 else F(1)
    length = up + (F(1, 2) if held else 0) + down
    if t + length > total:
        return None
    note = ((s, f),)
    run = [(t, up, note, BendKind.BASIC)]
    t += up
    if held:
        run.append((t, F(1, 2), note, BendKind.HELD))
        t += F(1, 2)
    run.append((t, down, note, BendKind.REVERSE))
    return run


def _layout(logical, measures) -> list[NoteEvent]:
    """Cut logical events at barlines into tied pieces; the bend stays on the first piece."""
    ends = [m.end for m in measures]
    out = []
    mi = 0
    for onset, dur, notes, kind in logical:
        end = onset + dur
        first = True
        while True:
            while ends[mi] <= onset:
                mi += 1
            piece_end = min(end, ends[mi])
            written = tuple(
                Note(s, f, BendAnnotation(kind, BEND_QT) if (kind is not None and first and i == 0) else None)
                for i, (s, f) in enumerate(notes)
            )
            out.append(NoteEvent(onset, piece_end - onset, written, piece_end < end))
            if piece_end >= end:
                break
            onset, first = piece_end, False
    return out


def planted_corpus(n_tracks: int, seed: int, cfg: PlantedConfig = PlantedConfig()) -> list[Score]:
    """One single-track score per synthetic tune."""
    rng = random.Random(seed)
    return [Score(f"planted-{i:03d}", (planted_track(rng, f"lead-{i:03d}", cfg),)) for i in range(n_tracks)]
