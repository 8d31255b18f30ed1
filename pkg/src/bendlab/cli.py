"""``bendlab`` command line.

Exit codes: 0 ok, 1 other error, 2 parse error, 3 validation error,
4 split error, 5 model mismatch, 6 empty selection.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys
import warnings
from pathlib import Path
from typing import Optional

from . import tabio
from .bendsem import BendConflictError
from .evalstats import (
    QUANTITIES,
    SplitError,
    SplitSpec,
    distribution,
    format_distribution,
    format_matrix,
    fretboard_heatmap,
    heatmap_svg,
    label_counts,
)
from .featex import FeatureRecord, dumps, read_dump
from .learn import DecisionTree, ModelMismatchError, decision_path, dumps_model, loads_model, shared_prefix
from .pipeline import PRESETS, annotate_score, featurize_score, label_score, train

EXIT_OK, EXIT_OTHER, EXIT_PARSE, EXIT_VALIDATION, EXIT_SPLIT, EXIT_MODEL, EXIT_SELECTION = range(7)


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_OTHER):
        super().__init__(message)
        self.code = code


def expand_inputs(patterns) -> list[str]:
    out = []
    for pat in patterns:
        hits = sorted(glob.glob(pat, recursive=True)) if glob.has_magic(pat) else ([pat] if os.path.exists(pat) else [])
        out.extend(h for h in hits if os.path.isfile(h))
    seen = set()
    return [p for p in out if not (p in seen or seen.add(p))]


def source_id(path: str) -> str:
    return Path(path).with_suffix("").as_posix()


def _read(path: str, fmt: Optional[str]):
    try:
        return tabio.read_score(path, fmt)
    except tabio.ScoreValidationError as e:
        raise CliError(f"{path}: {e}", EXIT_VALIDATION) from None
    except (tabio.ParseError, UnicodeDecodeError) as e:
        raise CliError(f"{path}: {e}", EXIT_PARSE) from None


def _load_corpus(patterns, fmt):
    paths = expand_inputs(patterns)
    if not paths:
        raise CliError("no input files", EXIT_PARSE)
    return [(p, _read(p, fmt)) for p in paths]


def _load_model(path):
    try:
        with open(path, encoding="utf-8") as f:
            return loads_model(f.read())
    except ModelMismatchError as e:
        raise CliError(f"{path}: {e}", EXIT_MODEL) from None


def _write(path: Optional[str], text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


# --------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    paths = expand_inputs(args.inputs)
    if not paths:
        raise CliError("no input files", EXIT_PARSE)
    code = EXIT_OK
    tracks = events = measures = 0
    for p in paths:
        try:
            score = _read(p, args.format)
        except CliError as e:
            print(f"FAIL {e}")
            code = max(code, e.code)
            continue
        nt = len(score.tracks)
        ne = sum(len(t.events) for t in score.tracks)
        nm = sum(len(t.measures) for t in score.tracks)
        print(f"ok   {p}: {nt} track{'s' * (nt != 1)}, {ne} events, {nm} measures")
        tracks, events, measures = tracks + nt, events + ne, measures + nm
    print(f"total: {len(paths)} files, {tracks} track{'s' * (tracks != 1)}, {events} events, {measures} measures")
    return code


def cmd_featurize(args) -> int:
    records: list[FeatureRecord] = []
    for p, score in _load_corpus(args.inputs, args.format):
        try:
            records.extend(featurize_score(score, source_id(p)))
        except BendConflictError as e:
            raise CliError(f"{p}: {e}", EXIT_VALIDATION) from None
    _write(args.out, dumps(records))
    counts = label_counts(records).format()
    (sys.stdout if args.out else sys.stderr).write(counts)
    return EXIT_OK


def _split_spec(args) -> SplitSpec:
    return SplitSpec(test_fraction=args.test_fraction, imbalance_tolerance=args.tolerance)


def cmd_train(args) -> int:
    if args.seed is None:
        raise CliError("--seed is required for train")
    if args.out is None:
        raise CliError("--out MODEL is required for train")
    with open(args.dump, encoding="utf-8") as f:
        try:
            records = read_dump(f)
        except ValueError as e:
            raise CliError(f"{args.dump}: {e}", EXIT_PARSE) from None
    try:
        result = train(records, args.preset, args.seed, _split_spec(args))
    except SplitError as e:
        raise CliError(str(e), EXIT_SPLIT) from None
    _write(args.out, dumps_model(result.model, args.preset))
    report = result.format(args.preset)
    _write(args.report or args.out + ".report.txt", report)
    sys.stdout.write(report)
    return EXIT_OK


def cmd_annotate(args) -> int:
    model = _load_model(args.model)
    in_fmt = args.format or tabio.detect_format(args.input)
    score = _read(args.input, in_fmt)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        annotated, notes = annotate_score(score, model)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    text = tabio.serialize(annotated, in_fmt)
    if notes and in_fmt == "text":
        header, rest = text.split("\n", 1)
        text = header + "\n" + "".join(f"# {n}\n" for n in notes) + rest
    _write(args.out, text)
    return EXIT_OK


def _parse_selector(sel: str):
    out = []
    for item in sel.split(","):
        item = item.strip()
        if not item:
            continue
        tid, _, idx = item.rpartition("@")
        try:
            out.append((tid or None, int(idx)))
        except ValueError:
            raise CliError(f"bad selector item {item!r}; use INDEX or TRACK_ID@INDEX", EXIT_SELECTION) from None
    return out


def cmd_explain(args) -> int:
    model = _load_model(args.model)
    if not isinstance(model, DecisionTree):
        raise CliError("explain needs a single-tree model")
    if args.input.endswith(".csv"):
        with open(args.input, encoding="utf-8") as f:
            records = read_dump(f)
    else:
        score = _read(args.input, args.format)
        records = featurize_score(score, source_id(args.input))
    chosen = []
    for tid, idx in _parse_selector(args.select):
        chosen.extend(r for r in records if r.event_index == idx and (tid is None or r.track_id == tid))
    if not chosen:
        raise CliError(f"selector {args.select!r} matches no event", EXIT_SELECTION)
    paths = []
    for r in chosen:
        path = decision_path(model, r.values)
        leaf = model.leaf_for(r.values)
        paths.append(path)
        print(f"event {r.track_id}@{r.event_index}  true: {r.label.name}  predicted: {leaf.label.name}")
        print("  leaf counts: " + " ".join(f"{l}={int(c)}" for l, c in zip("NUHD", leaf.counts)))
        if not path:
            print("  path: (empty)")
        for step in path:
            v = r.values[step.feature_index]
            print(f"  {step.feature} {step.direction} {step.threshold:.9g}  (value {v:.9g})")
    for i in range(1, len(paths)):
        print(f"shared prefix {chosen[i - 1].track_id}@{chosen[i - 1].event_index} / "
              f"{chosen[i].track_id}@{chosen[i].event_index}: {shared_prefix(paths[i - 1], paths[i])}")
    return EXIT_OK


def cmd_stats(args) -> int:
    corpus = _load_corpus(args.inputs, args.format)
    events = []
    for p, score in corpus:
        try:
            for evs in label_score(score, source_id(p)):
                events.extend(evs)
        except BendConflictError as e:
            raise CliError(f"{p}: {e}", EXIT_VALIDATION) from None
    if not events:
        print("warning: empty corpus, all tables are zero", file=sys.stderr)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "label_counts.tsv").write_text(label_counts(events).format(), encoding="utf-8")
    for name, bent in (("all", False), ("bent", True)):
        m = fretboard_heatmap(events, bent_only=bent)
        (out / f"heatmap_{name}.tsv").write_text(format_matrix(m), encoding="utf-8")
        title = "bent notes" if bent else "all notes"
        (out / f"heatmap_{name}.svg").write_text(heatmap_svg(m, title), encoding="utf-8")
    for q in QUANTITIES:
        (out / f"dist_{q}.tsv").write_text(format_distribution(distribution(events, q), q), encoding="utf-8")
    sys.stdout.write(label_counts(events).format())
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bendlab", description="Bend labelling, features and prediction for guitar tabs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, inputs=True):
        if inputs:
            p.add_argument("inputs", nargs="+", help="tab files or glob patterns")
        p.add_argument("--format", choices=("text", "structured"), help="input format (default: by extension)")
        p.add_argument("--out", help="output path")
        return p

    p = common(sub.add_parser("ingest", help="parse and validate a corpus"))
    p.set_defaults(func=cmd_ingest)
    p = common(sub.add_parser("featurize", help="write the per-event feature dump"))
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="dedup, split and fit a model from a dump")
    p.add_argument("dump")
    p.add_argument("--preset", choices=sorted(PRESETS), default="full")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="model file")
    p.add_argument("--report", help="report path (default: MODEL.report.txt)")
    p.add_argument("--test-fraction", type=float, default=0.25)
    p.add_argument("--tolerance", type=float, default=0.02)
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("annotate", help="add predicted bends to a bend-less tab"), inputs=False)
    p.add_argument("input")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_annotate)

    p = common(sub.add_parser("explain", help="print decision paths for selected events"), inputs=False)
    p.add_argument("input", help="feature dump (.csv) or tab file")
    p.add_argument("--model", required=True)
    p.add_argument("--select", required=True, help="comma-separated INDEX or TRACK_ID@INDEX")
    p.set_defaults(func=cmd_explain)

    p = common(sub.add_parser("stats", help="label counts, heatmaps and distributions"))
    p.set_defaults(func=cmd_stats)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_OTHER
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
