"""Reading and writing tablature files.

Two interchange formats are supported:

* a line-oriented text format (``tab v1``) meant to be written by hand, and
* a JSON document (``bendlab-score/1``) mirroring the :class:`~bendlab.model.Score` tree.

Text format example::

    tab v1
    track "lead"
    ts 4/4
    key 1
    | 1.15{up:4}*1 1.15{rel:4}*1/2 (2.8 3.9)*1/2 r*2
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import jsonschema

from .model import (
    BendAnnotation,
    BendKind,
    DomainError,
    MAX_FRET,
    KeySignature,
    Measure,
    Note,
    NoteEvent,
    Score,
    TimeSignature,
    Track,
    Tuning,
    format_ql,
    validate_score,
)

TEXT_MAGIC = "tab v1"
SCORE_VERSION = "bendlab-score/1"

_KIND_TOKENS = {
    "up": BendKind.BASIC,
    "held": BendKind.HELD,
    "rel": BendKind.REVERSE,
    "ud": BendKind.UP_DOWN,
    "cx": BendKind.COMPLEX,
}
_TOKEN_OF_KIND = {v: k for k, v in _KIND_TOKENS.items()}


class ParseError(Exception):
    """Malformed input. Text errors carry 1-based line/column, JSON errors a path."""

    def __init__(self, message: str, line: int = 0, column: int = 0, expected: str = "",
                 path: Optional[str] = None):
        self.message = message
        self.line = line
        self.column = column
        self.expected = expected
        self.path = path
        super().__init__(str(self))

    def __str__(self) -> str:
        where = f"at {self.path}" if self.path is not None else f"line {self.line}, column {self.column}"
        msg = f"{where}: {self.message}"
        if self.expected:
            msg += f" (expected {self.expected})"
        return msg


class ScoreValidationError(ParseError):
    """The input parsed but the resulting score breaks a structural invariant."""


# --------------------------------------------------------------------------
# text format: parsing


class _Cursor:
    """Character cursor over one source line."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.lineno = lineno
        self.pos = 0

    def error(self, message, expected="", pos=None) -> ParseError:
        col = (self.pos if pos is None else pos) + 1
        return ParseError(message, self.lineno, col, expected)

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def expect(self, s: str) -> None:
        if not self.text.startswith(s, self.pos):
            raise self.error(f"unexpected {self._here()}", repr(s))
        self.pos += len(s)

    def accept(self, s: str) -> bool:
        if self.text.startswith(s, self.pos):
            self.pos += len(s)
            return True
        return False

    def integer(self, signed=False, what="integer") -> int:
        start = self.pos
        if signed and self.peek() in "+-":
            self.pos += 1
        digits = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if self.pos == digits:
            self.pos = start
            raise self.error(f"unexpected {self._here()}", what)
        return int(self.text[start:self.pos])

    def word(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and not self.text[self.pos].isspace():
            self.pos += 1
        return self.text[start:self.pos]

    def end_of_statement(self) -> None:
        self.skip_ws()
        if not self.at_end():
            raise self.error(f"unexpected {self._here()}", "end of line")

    def _here(self) -> str:
        return repr(self.peek()) if not self.at_end() else "end of line"


@dataclass
class _TrackBuilder:
    name: str
    tuning: Tuning
    ts: TimeSignature
    key: KeySignature
    measures: list
    events: list
    cursor: Fraction = Fraction(0)


def _strip_comment(line: str) -> str:
    # "#" inside a quoted name is not a comment
    quoted = escaped = False
    for i, ch in enumerate(line):
        if escaped:
            escaped = False
        elif quoted and ch == "\\":
            escaped = True
        elif ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def parse_text(source: str) -> Score:
    """Parse ``tab v1`` text into a validated :class:`Score`."""
    lines = source.splitlines()
    first = next((i for i, l in enumerate(lines) if _strip_comment(l).strip()), None)
    if first is None or _strip_comment(lines[first]).strip() != TEXT_MAGIC:
        lineno = 1 if first is None else first + 1
        raise ParseError("missing header", lineno, 1, repr(TEXT_MAGIC))

    title = ""
    tracks: list[_TrackBuilder] = []

    for idx in range(first + 1, len(lines)):
        cur = _Cursor(_strip_comment(lines[idx]).rstrip(), idx + 1)
        cur.skip_ws()
        if cur.at_end():
            continue
        if cur.peek() == "|":
            if not tracks:
                raise cur.error("measure before any track declaration", "'track'")
            tb = tracks[-1]
            while not cur.at_end():
                _parse_measure(cur, tb)
            continue

        start = cur.pos
        kw = cur.word()
        cur.skip_ws()
        if kw == "title":
            if tracks:
                raise cur.error("title must precede all tracks", pos=start)
            title = _quoted(cur)
        elif kw == "track":
            name = _quoted(cur)
            tracks.append(_TrackBuilder(name, Tuning.standard(), TimeSignature(), KeySignature(), [], []))
        elif kw == "tuning":
            if not tracks:
                raise cur.error("tuning before any track declaration", "'track'", pos=start)
            tb = tracks[-1]
            if tb.measures:
                raise cur.error("tuning must precede the track's first measure", pos=start)
            pitches = []
            for _ in range(6):
                cur.skip_ws()
                pitches.append(cur.integer(what="midi pitch"))
            try:
                tb.tuning = Tuning(tuple(pitches))
            except DomainError as e:
                raise cur.error(str(e), pos=start) from None
        elif kw == "ts":
            if not tracks:
                raise cur.error("ts before any track declaration", "'track'", pos=start)
            num_pos = cur.pos
            num = cur.integer(what="numerator")
            cur.expect("/")
            den = cur.integer(what="denominator")
            try:
                ts = TimeSignature(num, den)
            except DomainError as e:
                raise cur.error(str(e), pos=num_pos) from None
            # takes effect at the next "|"
            tracks[-1].ts = ts
        elif kw == "key":
            if not tracks:
                raise cur.error("key before any track declaration", "'track'", pos=start)
            num_pos = cur.pos
            acc = cur.integer(signed=True, what="accidental count")
            try:
                key = KeySignature(acc)
            except DomainError as e:
                raise cur.error(str(e), pos=num_pos) from None
            tracks[-1].key = key
        else:
            raise cur.error(f"unknown statement {kw!r}",
                            "'title', 'track', 'tuning', 'ts', 'key' or '|'", pos=start)
        cur.end_of_statement()

    score = Score(title, tuple(
        Track(tb.name, tb.tuning, tuple(tb.measures), tuple(tb.events)) for tb in tracks
    ))
    problems = validate_score(score)
    if problems:
        raise ScoreValidationError(f"invalid score: {problems[0]}", first + 1, 1)
    return score


def _quoted(cur: _Cursor) -> str:
    if cur.peek() != '"':
        raise cur.error(f"unexpected {cur._here()}", "quoted name")
    cur.pos += 1
    out = []
    while True:
        ch = cur.peek()
        if ch == "":
            raise cur.error("unterminated string", '\'"\'')
        cur.pos += 1
        if ch == '"':
            return "".join(out)
        if ch == "\\":
            esc = cur.peek()
            if esc not in ('"', "\\"):
                raise cur.error("bad escape", "'\\\"' or '\\\\'")
            cur.pos += 1
            ch = esc
        out.append(ch)


def _parse_measure(cur: _Cursor, tb: _TrackBuilder) -> None:
    bar_pos = cur.pos
    cur.expect("|")
    number = len(tb.measures) + 1
    measure = Measure(tb.ts, tb.key, tb.cursor)
    length = tb.ts.measure_length
    filled = Fraction(0)
    while True:
        cur.skip_ws()
        if cur.at_end() or cur.peek() == "|":
            break
        item_pos = cur.pos
        if cur.accept("r*"):
            dur = _duration(cur)
            event = None
        else:
            notes = _atoms(cur)
            cur.expect("*")
            dur = _duration(cur)
            tied = cur.accept("~")
            event = NoteEvent(tb.cursor + filled, dur, notes, tied)
        if filled + dur > length:
            raise cur.error(f"measure over-full: measure {number} holds {format_ql(length)} "
                            f"quarter lengths", pos=item_pos)
        if event is not None:
            tb.events.append(event)
        filled += dur
        if not cur.at_end() and cur.peek() not in " \t|":
            raise cur.error(f"unexpected {cur._here()}", "whitespace between items")
    if filled < length:
        raise cur.error(f"measure under-full: measure {number} has {format_ql(filled)} of "
                        f"{format_ql(length)} quarter lengths", "more items or an explicit rest",
                        pos=bar_pos)
    tb.measures.append(measure)
    tb.cursor += length


def _atoms(cur: _Cursor) -> tuple[Note, ...]:
    start = cur.pos
    if cur.accept("("):
        notes = [_note(cur)]
        while True:
            had_ws = cur.peek() in " \t"
            cur.skip_ws()
            if cur.accept(")"):
                break
            if not had_ws:
                raise cur.error(f"unexpected {cur._here()}", "whitespace or ')'")
            notes.append(_note(cur))
        if len(notes) < 2:
            raise cur.error("a chord needs at least two notes", pos=start)
        strings = [n.string for n in notes]
        if len(set(strings)) != len(strings):
            raise cur.error("chord notes must be on distinct strings", pos=start)
        return tuple(notes)
    return (_note(cur),)


def _note(cur: _Cursor) -> Note:
    start = cur.pos
    string = cur.integer(what="string number")
    if not 1 <= string <= 6:
        raise cur.error(f"string {string} out of range", "1..6", pos=start)
    cur.expect(".")
    fpos = cur.pos
    fret = cur.integer(what="fret")
    if fret > MAX_FRET:
        raise cur.error(f"fret {fret} out of range", f"0..{MAX_FRET}", pos=fpos)
    bend = _bend(cur) if cur.peek() == "{" else None
    return Note(string, fret, bend)


def _bend(cur: _Cursor) -> BendAnnotation:
    start = cur.pos
    cur.expect("{")
    kpos = cur.pos
    tok = ""
    while cur.peek().isalpha():
        tok += cur.peek()
        cur.pos += 1
    if tok not in _KIND_TOKENS:
        raise cur.error(f"unknown bend kind {tok!r}", "up, held, rel, ud or cx", pos=kpos)
    kind = _KIND_TOKENS[tok]
    try:
        if kind is BendKind.COMPLEX:
            cur.expect(":")
            points = [_point(cur)]
            while cur.accept(","):
                points.append(_point(cur))
            cur.expect("}")
            return BendAnnotation(kind, points=tuple(points))
        amp = 4
        if cur.accept(":"):
            amp = cur.integer(what="amplitude in quarter tones")
        cur.expect("}")
        return BendAnnotation(kind, amp)
    except DomainError as e:
        raise cur.error(str(e), pos=start) from None


def _point(cur: _Cursor) -> tuple[Fraction, int]:
    # "t/o" or "p/q/o": the last field is the offset, the rest the time fraction
    parts = [cur.integer(what="bend point")]
    while cur.accept("/"):
        parts.append(cur.integer(what="bend point"))
    if len(parts) == 2:
        return Fraction(parts[0]), parts[1]
    if len(parts) == 3:
        if parts[1] == 0:
            raise cur.error("zero denominator in bend point time")
        return Fraction(parts[0], parts[1]), parts[2]
    raise cur.error("malformed bend point", "time/offset")


def _duration(cur: _Cursor) -> Fraction:
    pos = cur.pos
    num = cur.integer(what="duration")
    den = 1
    if cur.accept("/"):
        den = cur.integer(what="duration denominator")
    if den == 0 or num == 0:
        raise cur.error("duration must be positive", pos=pos)
    return Fraction(num, den)


# --------------------------------------------------------------------------
# text format: serialization


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_note(n: Note) -> str:
    s = f"{n.string}.{n.fret}"
    b = n.bend
    if b is not None:
        tok = _TOKEN_OF_KIND[b.kind]
        if b.kind is BendKind.COMPLEX:
            pts = ",".join(f"{format_ql(t)}/{o}" for t, o in b.points)
            s += f"{{{tok}:{pts}}}"
        else:
            s += f"{{{tok}:{b.amplitude_qt}}}"
    return s


def format_event(ev: NoteEvent) -> str:
    if len(ev.notes) == 1:
        atoms = _format_note(ev.notes[0])
    else:
        atoms = "(" + " ".join(_format_note(n) for n in ev.notes) + ")"
    return f"{atoms}*{format_ql(ev.duration)}" + ("~" if ev.tied_to_next else "")


def serialize_text(score: Score) -> str:
    """Canonical text form. One directive or measure per line."""
    problems = validate_score(score)
    if problems:
        raise DomainError(f"cannot serialize invalid score: {problems[0]}")
    out = [TEXT_MAGIC]
    if score.title:
        out.append(f"title {_quote(score.title)}")
    for track in score.tracks:
        out.append(f"track {_quote(track.name)}")
        out.append("tuning " + " ".join(str(p) for p in track.tuning.open_pitches))
        ts, key = TimeSignature(), KeySignature()
        events = list(track.events)
        k = 0
        for i, m in enumerate(track.measures):
            if i == 0 or m.time_sig != ts:
                out.append(f"ts {m.time_sig}")
            if i == 0 or m.key_sig != key:
                out.append(f"key {m.key_sig.accidentals}")
            ts, key = m.time_sig, m.key_sig
            items = []
            t = m.start
            while k < len(events) and events[k].onset < m.end:
                ev = events[k]
                if ev.onset > t:
                    items.append(f"r*{format_ql(ev.onset - t)}")
                items.append(format_event(ev))
                t = ev.end
                k += 1
            if t < m.end:
                items.append(f"r*{format_ql(m.end - t)}")
            out.append(" ".join(["|"] + items))
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# structured (JSON) format

_FRAC = {"type": "string", "pattern": r"^[0-9]+(/[0-9]+)?$"}

SCORE_SCHEMA = {
    "type": "object",
    "required": ["version", "title", "tracks"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCORE_VERSION},
        "title": {"type": "string"},
        "tracks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "tuning", "num_measures", "directives", "events"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "tuning": {"type": "array", "items": {"type": "integer"}, "minItems": 6, "maxItems": 6},
                    "num_measures": {"type": "integer", "minimum": 0},
                    "directives": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["measure_index"],
                            "additionalProperties": False,
                            "properties": {
                                "measure_index": {"type": "integer", "minimum": 0},
                                "ts": {"type": "string", "pattern": r"^[0-9]+/[0-9]+$"},
                                "key": {"type": "integer", "minimum": -7, "maximum": 7},
                            },
                        },
                    },
                    "events": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["onset", "duration", "tie", "notes"],
                            "additionalProperties": False,
                            "properties": {
                                "onset": _FRAC,
                                "duration": _FRAC,
                                "tie": {"type": "boolean"},
                                "notes": {
                                    "type": "array",
                                    "minItems": 1,
                                    "items": {
                                        "type": "object",
                                        "required": ["string", "fret"],
                                        "additionalProperties": False,
                                        "properties": {
                                            "string": {"type": "integer", "minimum": 1, "maximum": 6},
                                            "fret": {"type": "integer", "minimum": 0},
                                            "bend": {
                                                "type": "object",
                                                "required": ["kind", "amplitude_qt"],
                                                "additionalProperties": False,
                                                "properties": {
                                                    "kind": {"enum": [k.value for k in BendKind]},
                                                    "amplitude_qt": {"type": "integer", "minimum": 1},
                                                    "points": {
                                                        "type": "array",
                                                        "items": {
                                                            "type": "array",
                                                            "prefixItems": [_FRAC, {"type": "integer", "minimum": 0}],
                                                            "minItems": 2,
                                                            "maxItems": 2,
                                                        },
                                                    },
                                                },
                                            },
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}

_validator = jsonschema.Draft202012Validator(SCORE_SCHEMA)


def _json_path(parts) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in parts)


def _frac(s: str, path) -> Fraction:
    try:
        return Fraction(s)
    except ZeroDivisionError:
        raise ParseError("zero denominator", path=_json_path(path)) from None


def parse_structured(source: str) -> Score:
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno, path="$") from None
    errors = sorted(_validator.iter_errors(doc), key=lambda e: (list(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        raise ParseError(err.message, path=_json_path(err.absolute_path))

    tracks = []
    for ti, t in enumerate(doc["tracks"]):
        base = ["tracks", ti]
        try:
            tuning = Tuning(tuple(t["tuning"]))
        except DomainError as e:
            raise ParseError(str(e), path=_json_path(base + ["tuning"])) from None
        changes = {}
        for di, d in enumerate(t["directives"]):
            dpath = base + ["directives", di]
            if d["measure_index"] >= max(t["num_measures"], 1):
                raise ParseError("directive beyond last measure", path=_json_path(dpath + ["measure_index"]))
            entry = changes.setdefault(d["measure_index"], {})
            if "ts" in d:
                num, den = (int(x) for x in d["ts"].split("/"))
                try:
                    entry["ts"] = TimeSignature(num, den)
                except DomainError as e:
                    raise ParseError(str(e), path=_json_path(dpath + ["ts"])) from None
            if "key" in d:
                entry["key"] = KeySignature(d["key"])
        ts, key = TimeSignature(), KeySignature()
        measures = []
        start = Fraction(0)
        for mi in range(t["num_measures"]):
            ts = changes.get(mi, {}).get("ts", ts)
            key = changes.get(mi, {}).get("key", key)
            measures.append(Measure(ts, key, start))
            start += ts.measure_length
        events = []
        for ei, e in enumerate(t["events"]):
            epath = base + ["events", ei]
            notes = []
            for ni, n in enumerate(e["notes"]):
                bend = None
                if "bend" in n:
                    b = n["bend"]
                    bpath = epath + ["notes", ni, "bend"]
                    pts = tuple((_frac(p[0], bpath), p[1]) for p in b.get("points", []))
                    try:
                        bend = BendAnnotation(BendKind(b["kind"]), b["amplitude_qt"], pts)
                    except DomainError as exc:
                        raise ParseError(str(exc), path=_json_path(bpath)) from None
                    if bend.amplitude_qt != b["amplitude_qt"]:
                        raise ParseError("complex amplitude must equal the largest point offset",
                                         path=_json_path(bpath + ["amplitude_qt"]))
                notes.append(Note(n["string"], n["fret"], bend))
            events.append(NoteEvent(_frac(e["onset"], epath + ["onset"]),
                                    _frac(e["duration"], epath + ["duration"]),
                                    tuple(notes), e["tie"]))
        tracks.append(Track(t["name"], tuning, tuple(measures), tuple(events)))

    score = Score(doc["title"], tuple(tracks))
    problems = validate_score(score)
    if problems:
        p = problems[0]
        ti = next(i for i, t in enumerate(score.tracks) if t.name == p.track)
        raise ScoreValidationError(f"invalid score: {p}", path=_json_path(["tracks", ti]))
    return score


def _bend_doc(b: BendAnnotation) -> dict:
    d = {"kind": b.kind.value, "amplitude_qt": b.amplitude_qt}
    if b.kind is BendKind.COMPLEX:
        d["points"] = [[format_ql(t), o] for t, o in b.points]
    return d


def serialize_structured(score: Score) -> str:
    problems = validate_score(score)
    if problems:
        raise DomainError(f"cannot serialize invalid score: {problems[0]}")
    tracks = []
    for track in score.tracks:
        directives = []
        ts, key = TimeSignature(), KeySignature()
        for i, m in enumerate(track.measures):
            d = {"measure_index": i}
            if i == 0 or m.time_sig != ts:
                d["ts"] = str(m.time_sig)
            if i == 0 or m.key_sig != key:
                d["key"] = m.key_sig.accidentals
            if len(d) > 1:
                directives.append(d)
            ts, key = m.time_sig, m.key_sig
        events = []
        for ev in track.events:
            notes = []
            for n in ev.notes:
                nd = {"string": n.string, "fret": n.fret}
                if n.bend is not None:
                    nd["bend"] = _bend_doc(n.bend)
                notes.append(nd)
            events.append({"onset": format_ql(ev.onset), "duration": format_ql(ev.duration),
                           "tie": ev.tied_to_next, "notes": notes})
        tracks.append({"name": track.name, "tuning": list(track.tuning.open_pitches),
                       "num_measures": len(track.measures), "directives": directives,
                       "events": events})
    doc = {"version": SCORE_VERSION, "title": score.title, "tracks": tracks}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# file helpers


def detect_format(path: str) -> str:
    return "structured" if str(path).endswith(".json") else "text"


def parse(source: str, fmt: str) -> Score:
    return parse_structured(source) if fmt == "structured" else parse_text(source)


def serialize(score: Score, fmt: str) -> str:
    return serialize_structured(score) if fmt == "structured" else serialize_text(score)


def read_score(path, fmt: Optional[str] = None) -> Score:
    with open(path, encoding="utf-8") as f:
        return parse(f.read(), fmt or detect_format(path))


def write_score(score: Score, path, fmt: Optional[str] = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize(score, fmt or detect_format(path)))
