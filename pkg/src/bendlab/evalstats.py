"""Dataset protocol, classification metrics and corpus statistics."""
from __future__ import annotations

import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .bendsem import LABELS, Label, LabeledEvent
from .featex import FeatureRecord, beat_strength
from .learn.rng import SplitMix64
from .model import NUM_STRINGS, STRING_NAMES, DomainError

# --------------------------------------------------------------------------
# dataset protocol


class SplitError(DomainError):
    pass


class SplitWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.25
    imbalance_tolerance: float = 0.02
    seed: int = 0
    max_swaps: int = 1000

    def __post_init__(self):
        if not 0 < self.test_fraction < 1:
            raise DomainError("test_fraction must be in (0, 1)")


@dataclass(frozen=True)
class SplitInfo:
    test_tracks: tuple
    train_tracks: tuple
    test_share: float
    class_gap: float
    within_tolerance: bool


def dedup_trackwise(records: Sequence[FeatureRecord]) -> list[FeatureRecord]:
    """Drop repeated (values, label) pairs inside each track, keeping the earliest event."""
    first: dict = {}
    for i, r in enumerate(records):
        key = (r.track_id, r.values, r.label)
        j = first.get(key)
        if j is None or r.event_index < records[j].event_index:
            first[key] = i
    keep = set(first.values())
    return [r for i, r in enumerate(records) if i in keep]


def _class_gap(test_counts: np.ndarray, train_counts: np.ndarray) -> float:
    nt, nr = test_counts.sum(), train_counts.sum()
    if nt == 0 or nr == 0:
        return 1.0
    return float(np.abs(test_counts / nt - train_counts / nr).max())


def split_by_track(records: Sequence[FeatureRecord], spec: SplitSpec = SplitSpec()):
    """Partition whole tracks into ``(train, test)``.

    Tracks are shuffled by seed and greedily moved to the test side while that
    brings its size closer to ``test_fraction``. Seeded single-track swaps then
    run, each kept only if it strictly lowers the pair (distance outside the
    +-5% size band, largest per-label proportion gap) compared lexicographically.
    """
    train, test, _ = split_by_track_detailed(records, spec)
    return train, test


def split_by_track_detailed(records: Sequence[FeatureRecord], spec: SplitSpec = SplitSpec()):
    by_track: dict = defaultdict(list)
    for r in records:
        by_track[r.track_id].append(r)
    tracks = sorted(by_track, key=str)
    if len(tracks) < 2:
        raise SplitError("cannot split without leaking a track: need at least 2 tracks")
    counts = {t: np.bincount([r.label.value for r in by_track[t]], minlength=len(LABELS)) for t in tracks}
    sizes = {t: len(by_track[t]) for t in tracks}
    total = sum(sizes.values())
    target = spec.test_fraction * total
    all_counts = sum(counts.values())

    rng = SplitMix64(spec.seed)
    order = list(tracks)
    rng.shuffle(order)
    test: list = []
    size = 0
    for t in order:
        if len(test) == len(tracks) - 1:
            break
        if not test or abs(size + sizes[t] - target) < abs(size - target):
            test.append(t)
            size += sizes[t]
    train = [t for t in order if t not in test]

    band = 0.05 * target

    def excess(sz):
        return max(0.0, abs(sz - target) - band)

    test_counts = sum(counts[t] for t in test)
    gap = _class_gap(test_counts, all_counts - test_counts)
    # swaps improve (size excess beyond the band, label gap) lexicographically
    for _ in range(spec.max_swaps):
        if gap <= spec.imbalance_tolerance and excess(size) == 0:
            break
        i = rng.randbelow(len(test))
        j = rng.randbelow(len(train))
        a, b = test[i], train[j]
        new_size = size - sizes[a] + sizes[b]
        new_counts = test_counts - counts[a] + counts[b]
        new_gap = _class_gap(new_counts, all_counts - new_counts)
        if (excess(new_size), new_gap) < (excess(size), gap):
            test[i], train[j] = b, a
            size, test_counts, gap = new_size, new_counts, new_gap

    ok = gap <= spec.imbalance_tolerance
    if not ok:
        warnings.warn(SplitWarning(f"per-label proportion gap {gap:.4f} exceeds tolerance "
                                   f"{spec.imbalance_tolerance}"))
    test_set = set(test)
    train_recs = [r for r in records if r.track_id not in test_set]
    test_recs = [r for r in records if r.track_id in test_set]
    info = SplitInfo(tuple(sorted(test, key=str)), tuple(sorted(train, key=str)), size / total, gap, ok)
    return train_recs, test_recs, info


# --------------------------------------------------------------------------
# metrics


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _ratio(a, b) -> float:
    return 0.0 if b == 0 else a / b


@dataclass(frozen=True)
class EvalReport:
    confusion: np.ndarray  # rows = truth, columns = prediction
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    macro_f1: float
    bend_precision: float
    bend_recall: float
    bend_f1: float

    @property
    def accuracy(self) -> float:
        return _ratio(np.trace(self.confusion), self.confusion.sum())

    def format(self) -> str:
        lines = ["confusion (rows = truth, columns = predicted)",
                 "\t" + "\t".join(l.symbol for l in LABELS)]
        for lab, row in zip(LABELS, self.confusion):
            lines.append(lab.symbol + "\t" + "\t".join(str(int(x)) for x in row))
        lines.append("")
        lines.append("label\tprecision\trecall\tf1")
        for lab in LABELS:
            i = lab.value
            lines.append(f"{lab.symbol}\t{self.precision[i]:.4f}\t{self.recall[i]:.4f}\t{self.f1[i]:.4f}")
        lines.append(f"macro_f1\t{self.macro_f1:.4f}")
        lines.append(f"bend\t{self.bend_precision:.4f}\t{self.bend_recall:.4f}\t{self.bend_f1:.4f}")
        lines.append(f"accuracy\t{self.accuracy:.4f}")
        return "\n".join(lines)


def evaluate(truth: Sequence[Label], predicted: Sequence[Label]) -> EvalReport:
    """Confusion matrix, per-label scores and the bend/no-bend collapse.

    Macro-F1 averages over labels occurring in either sequence; any 0/0 score is 0.
    """
    if len(truth) != len(predicted):
        raise DomainError(f"length mismatch: {len(truth)} truths vs {len(predicted)} predictions")
    if not truth:
        raise DomainError("evaluate needs at least one prediction")
    cm = np.zeros((len(LABELS), len(LABELS)), dtype=np.int64)
    for t, p in zip(truth, predicted):
        cm[t.value, p.value] += 1
    prec, rec, f1 = [], [], []
    for i in range(len(LABELS)):
        p = _ratio(cm[i, i], cm[:, i].sum())
        r = _ratio(cm[i, i], cm[i, :].sum())
        prec.append(p)
        rec.append(r)
        f1.append(_f1(p, r))
    present = [i for i in range(len(LABELS)) if cm[i, :].sum() or cm[:, i].sum()]
    macro = float(np.mean([f1[i] for i in present]))
    tp = int(cm[1:, 1:].sum())
    fp = int(cm[0, 1:].sum())
    fn = int(cm[1:, 0].sum())
    bp, br = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
    return EvalReport(cm, tuple(prec), tuple(rec), tuple(f1), macro, bp, br, _f1(bp, br))


# --------------------------------------------------------------------------
# corpus statistics


@dataclass(frozen=True)
class LabelCounts:
    counts: tuple[int, int, int, int]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __getitem__(self, label: Label) -> int:
        return self.counts[label.value]

    def format(self) -> str:
        head = "\t".join([*(l.symbol for l in LABELS), "Total"])
        row = "\t".join(str(c) for c in (*self.counts, self.total))
        return head + "\n" + row + "\n"


def label_counts(items: Iterable) -> LabelCounts:
    """Works on anything with a ``label`` attribute (events or feature records)."""
    c = Counter(x.label for x in items)
    return LabelCounts(tuple(c.get(l, 0) for l in LABELS))


def fretboard_heatmap(events: Iterable[LabeledEvent], bent_only: bool = False,
                      max_fret: Optional[int] = None) -> np.ndarray:
    """Share of notes on each (string, fret) cell; row 0 is string 1 ("e")."""
    cells = Counter()
    for ev in events:
        if bent_only and ev.label is Label.NONE:
            continue
        for s, f in ev.raw_notes:
            cells[(s, f)] += 1
    top = max([24, *(f for _, f in cells)]) if max_fret is None else max_fret
    grid = np.zeros((NUM_STRINGS, top + 1))
    for (s, f), c in cells.items():
        if f <= top:
            grid[s - 1, f] += c
    total = grid.sum()
    return grid / total if total > 0 else grid


QUANTITIES = ("beat_strength", "duration", "relative_duration", "pitch")
RELATIVE_BINS = ("longer", "shorter", "same")


def distribution(events: Sequence[LabeledEvent], quantity: str, per_label: bool = True) -> dict:
    """Normalised histograms ``{label_or_None: {bin: share}}`` of one quantity.

    Relative duration compares with the previous event of the same track; a
    track's first event has no bin.
    """
    if quantity not in QUANTITIES:
        raise DomainError(f"unknown quantity {quantity!r}; choose from {', '.join(QUANTITIES)}")
    hist: dict = defaultdict(Counter)
    prev: dict = {}
    for ev in events:
        key = ev.label if per_label else None
        if quantity == "beat_strength":
            hist[key][beat_strength(ev.time_sig, ev.measure_offset)] += 1
        elif quantity == "duration":
            hist[key][Fraction(ev.duration)] += 1
        elif quantity == "pitch":
            for p in ev.arrival_pitches:
                hist[key][p] += 1
        else:
            before = prev.get(ev.track_id)
            if before is not None:
                d0 = before.duration
                b = "longer" if ev.duration > d0 else "shorter" if ev.duration < d0 else "same"
                hist[key][b] += 1
            prev[ev.track_id] = ev
    out = {}
    for key in sorted(hist, key=lambda k: -1 if k is None else k.value):
        total = sum(hist[key].values())
        if quantity == "relative_duration":
            bins = RELATIVE_BINS
        else:
            bins = sorted(hist[key])
        out[key] = {b: hist[key][b] / total for b in bins}
    return out


def format_distribution(dist: dict, quantity: str) -> str:
    bins = sorted({b for h in dist.values() for b in h}, key=_bin_key(quantity))
    labels = list(dist)
    head = "\t".join([quantity, *("all" if l is None else l.symbol for l in labels)])
    lines = [head]
    for b in bins:
        cells = [f"{dist[l].get(b, 0.0):.6f}" for l in labels]
        lines.append("\t".join([_fmt_bin(b), *cells]))
    return "\n".join(lines) + "\n"


def _bin_key(quantity):
    if quantity == "relative_duration":
        return RELATIVE_BINS.index
    return lambda b: b


def _fmt_bin(b) -> str:
    if isinstance(b, Fraction):
        return str(b.numerator) if b.denominator == 1 else f"{b.numerator}/{b.denominator}"
    if isinstance(b, float):
        return f"{b:g}"
    return str(b)


def format_matrix(m: np.ndarray) -> str:
    head = "\t".join(["string", *(str(f) for f in range(m.shape[1]))])
    rows = [head]
    for name, row in zip(STRING_NAMES, m):
        rows.append("\t".join([name, *(f"{x:.9g}" for x in row)]))
    return "\n".join(rows) + "\n"


def heatmap_svg(m: np.ndarray, title: str = "", cell: int = 24) -> str:
    """Static SVG of a heatmap: one grey-to-red square per cell, string names at left."""
    rows, cols = m.shape
    left, top = 30, 30 if title else 10
    width = left + cols * cell + 10
    height = top + rows * cell + 24
    peak = m.max() if m.size and m.max() > 0 else 1.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'font-family="sans-serif" font-size="11">']
    if title:
        parts.append(f'<text x="{left}" y="18">{title}</text>')
    for r in range(rows):
        y = top + r * cell
        parts.append(f'<text x="8" y="{y + cell * 0.65:.1f}">{STRING_NAMES[r]}</text>')
        for c in range(cols):
            v = m[r, c] / peak
            shade = int(round(255 * (1 - v)))
            parts.append(f'<rect x="{left + c * cell}" y="{y}" width="{cell}" height="{cell}" '
                         f'fill="rgb(255,{shade},{shade})" stroke="#ccc"><title>{m[r, c]:.4f}</title></rect>')
    for c in range(cols):
        parts.append(f'<text x="{left + c * cell + 4}" y="{top + rows * cell + 16}">{c}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
