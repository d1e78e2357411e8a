import json

import pytest

from shotfit.cli import main
from shotfit.corpus import read_corpus, write_corpus

SMALL = {"encoder": {"buckets": 4096, "dim": 16}, "contrastive": {"pair_iterations": 2}}


@pytest.fixture
def workdir(tmp_path, synth_split):
    train, test = synth_split
    write_corpus(train, tmp_path / "train.csv")
    write_corpus(test, tmp_path / "test.csv")
    (tmp_path / "cfg.json").write_text(json.dumps(SMALL))
    return tmp_path


def test_data_commands(tmp_path, capsys):
    syn, tr, te = tmp_path / "syn.csv", tmp_path / "tr.csv", tmp_path / "te.csv"
    assert main(["synth", "--out", str(syn), "--per-class", "20", "--seed", "3"]) == 0
    assert len(read_corpus(syn)) == 60
    assert main(["split", "--in", str(syn), "--out", str(tr), "--test-out", str(te), "--ratio", "0.8"]) == 0
    assert (len(read_corpus(tr)), len(read_corpus(te))) == (48, 12)
    capsys.readouterr()
    assert main(["sample-shots", "--in", str(tr), "--per-class", "2", "--out", "-"]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 1 + 6
    assert main(["normalize", "--in", str(syn), "--out", str(tmp_path / "n.csv")]) == 0


def test_train_evaluate_predict_embed(workdir, capsys):
    d = workdir
    rc = main(["train", "--in", str(d / "train.csv"), "--out", str(d / "m.sfcm"), "--per-class", "8",
               "--epochs", "2", "--config", str(d / "cfg.json"), "--log", str(d / "log.jsonl")])
    assert rc == 0
    log = [json.loads(l) for l in (d / "log.jsonl").read_text().splitlines()]
    assert [r["epoch"] for r in log] == [1, 2] and log[0]["pairs"] == 24 * 2 * 2

    capsys.readouterr()
    assert main(["evaluate", "--model", str(d / "m.sfcm"), "--in", str(d / "test.csv"),
                 "--out", str(d / "report.json")]) == 0
    table = capsys.readouterr().out
    assert table.splitlines()[0].startswith("Dialect") and "dialect_a" in table
    report = json.loads((d / "report.json").read_text())
    assert set(report) == {"per_class", "macro_f1", "weighted_f1", "per_dialect", "n_examples",
                           "duration_seconds"}

    assert main(["predict", "--model", str(d / "m.sfcm"), "--in", str(d / "test.csv"),
                 "--out", str(d / "pred.csv")]) == 0
    assert len((d / "pred.csv").read_text().splitlines()) == 301

    assert main(["embed", "--model", str(d / "m.sfcm"), "--in", str(d / "test.csv"),
                 "--out", str(d / "emb.jsonl")]) == 0
    first = json.loads((d / "emb.jsonl").read_text().splitlines()[0])
    assert len(first["vec"]) == 16

    # the exported embeddings drive a head-only model through --embeddings
    assert main(["train", "--in", str(d / "test.csv"), "--out", str(d / "h.sfcm"), "--per-class", "8",
                 "--embeddings", str(d / "emb.jsonl")]) == 0
    assert main(["evaluate", "--model", str(d / "h.sfcm"), "--in", str(d / "test.csv"),
                 "--embeddings", str(d / "emb.jsonl")]) == 0


def test_sweep_command(workdir, capsys):
    d = workdir
    capsys.readouterr()
    assert main(["sweep", "--in", str(d / "train.csv"), "--test", str(d / "test.csv"), "--shots", "4", "8",
                 "--epochs-grid", "1", "--config", str(d / "cfg.json"), "--out", str(d / "s.json")]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].split() == ["Samples", "Number", "Epoch", "F1", "%", "Duration", "in", "h:m:s"]
    assert len(json.loads((d / "s.json").read_text())["rows"]) == 2


def test_errors_exit_nonzero(tmp_path, capsys):
    assert main(["evaluate", "--model", str(tmp_path / "missing"), "--in", str(tmp_path / "x.csv")]) == 1
    (tmp_path / "junk.sfcm").write_bytes(b"nope")
    (tmp_path / "t.csv").write_text("ID,Sentiment,Text,Dialect\na,positive,x,saudi\n")
    assert main(["predict", "--model", str(tmp_path / "junk.sfcm"), "--in", str(tmp_path / "t.csv")]) == 1
    assert "bad magic" in capsys.readouterr().err
