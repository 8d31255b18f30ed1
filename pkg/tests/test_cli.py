import json

import numpy as np
import pytest

from bendlab import tabio
from bendlab.cli import main
from bendlab.featex import read_dump
from bendlab.synth import planted_corpus


@pytest.fixture
def corpus(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "tabs").mkdir()
    for i, score in enumerate(planted_corpus(16, seed=9)):
        tabio.write_score(score, f"tabs/song{i:02d}.tab")
    return tmp_path


@pytest.fixture
def trained(corpus):
    assert main(["featurize", "tabs/*.tab", "--out", "dump.csv"]) == 0
    assert main(["train", "dump.csv", "--seed", "3", "--out", "model.json"]) == 0
    return corpus


def test_ingest_ok(corpus, capsys):
    assert main(["ingest", "tabs/*.tab"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok   ") == 16 and out.splitlines()[-1].startswith("total: 16 files, 16 tracks")


def test_ingest_reports_malformed(corpus, capsys):
    (corpus / "tabs" / "zz_bad.tab").write_text('tab v1\ntrack "x"\n| 1.5*3\n', encoding="utf-8")
    assert main(["ingest", "tabs/*.tab"]) == 2
    out = capsys.readouterr().out
    assert "FAIL tabs/zz_bad.tab" in out and "line 3" in out


def test_empty_glob_is_a_parse_error(corpus, capsys):
    assert main(["ingest", "nothing/*.tab"]) == 2
    assert "no input files" in capsys.readouterr().err


def test_featurize_splits_up_down(corpus):
    (corpus / "ud.tab").write_text('tab v1\ntrack "x"\n| 1.12{ud:4}*4\n', encoding="utf-8")
    assert main(["featurize", "ud.tab", "--out", "ud.csv"]) == 0
    with open("ud.csv", encoding="utf-8") as f:
        recs = read_dump(f)
    assert [r.label.name for r in recs] == ["UP", "DOWN"]


def test_featurize_is_byte_identical(corpus):
    assert main(["featurize", "tabs/*.tab", "--out", "a.csv"]) == 0
    assert main(["featurize", "tabs/*.tab", "--out", "b.csv"]) == 0
    assert (corpus / "a.csv").read_bytes() == (corpus / "b.csv").read_bytes()


def test_featurize_rejects_chord_conflict(corpus, capsys):
    (corpus / "c.tab").write_text('tab v1\ntrack "x"\n| (1.12{up} 2.13{rel})*4\n', encoding="utf-8")
    assert main(["featurize", "c.tab", "--out", "c.csv"]) == 3


def test_train_is_deterministic(trained):
    assert main(["train", "dump.csv", "--seed", "3", "--out", "again.json"]) == 0
    assert (trained / "model.json").read_bytes() == (trained / "again.json").read_bytes()
    report = (trained / "model.json.report.txt").read_text(encoding="utf-8")
    assert "== test ==" in report and "top-10 feature importances" in report


def test_train_requires_seed(trained, capsys):
    assert main(["train", "dump.csv", "--out", "m.json"]) == 1
    assert "--seed" in capsys.readouterr().err


def test_train_single_track_is_split_error(corpus):
    assert main(["featurize", "tabs/song00.tab", "--out", "one.csv"]) == 0
    assert main(["train", "one.csv", "--seed", "0", "--out", "m.json"]) == 4


def test_model_mismatch(trained):
    doc = json.loads((trained / "model.json").read_text(encoding="utf-8"))
    doc["registry"] = doc["registry"][:-1]
    (trained / "bad.json").write_text(json.dumps(doc), encoding="utf-8")
    assert main(["annotate", "tabs/song00.tab", "--model", "bad.json", "--out", "x.tab"]) == 5


def test_annotate_round_trips(trained):
    assert main(["annotate", "tabs/song01.tab", "--model", "model.json", "--out", "ann.tab"]) == 0
    ann = tabio.read_score("ann.tab")
    src = tabio.read_score("tabs/song01.tab")
    assert len(ann.tracks[0].events) == len(src.tracks[0].events)
    assert any(n.bend for ev in ann.tracks[0].events for n in ev.notes)


def test_explain_leaf_model(corpus, capsys):
    (corpus / "flat.tab").write_text('tab v1\ntrack "x"\n| 1.5*2 2.7*2\n', encoding="utf-8")
    (corpus / "flat2.tab").write_text('tab v1\ntrack "y"\n| 3.5*4\n', encoding="utf-8")
    assert main(["featurize", "flat.tab", "flat2.tab", "--out", "flat.csv"]) == 0
    assert main(["train", "flat.csv", "--seed", "0", "--out", "leaf.json", "--tolerance", "1"]) == 0
    capsys.readouterr()
    assert main(["explain", "flat.csv", "--model", "leaf.json", "--select", "0"]) == 0
    out = capsys.readouterr().out
    assert "path: (empty)" in out and "predicted: NONE" in out


def test_explain_shared_prefix(trained, capsys):
    capsys.readouterr()
    assert main(["explain", "dump.csv", "--model", "model.json", "--select", "tabs/song00/0@3,tabs/song00/0@4"]) == 0
    out = capsys.readouterr().out
    assert out.count("event tabs/song00/0@") == 2
    assert "shared prefix tabs/song00/0@3 / tabs/song00/0@4: " in out


def test_explain_empty_selection(trained):
    assert main(["explain", "dump.csv", "--model", "model.json", "--select", "nope@0"]) == 6


def test_stats_outputs(corpus, capsys):
    assert main(["stats", "tabs/*.tab", "--out", "stats"]) == 0
    assert capsys.readouterr().out.startswith("∅\t↑\t→\t↓\tTotal\n")
    out = corpus / "stats"
    names = {p.name for p in out.iterdir()}
    assert {"label_counts.tsv", "heatmap_all.tsv", "heatmap_bent.tsv", "heatmap_all.svg"} <= names
    for name in ("heatmap_all.tsv", "heatmap_bent.tsv"):
        rows = (out / name).read_text(encoding="utf-8").splitlines()[1:]
        m = np.array([[float(x) for x in r.split("\t")[1:]] for r in rows])
        assert m.shape[0] == 6 and abs(m.sum() - 1) <= 1e-6
