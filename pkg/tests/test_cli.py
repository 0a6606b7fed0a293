# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import json

import pytest

from anemoi.occupancy import __version__
from anemoi.occupancy.__main__ import main
from anemoi.occupancy.data.classes import OccupancyClass
from anemoi.occupancy.data.dataset import Dataset
from anemoi.occupancy.experiments.splits import temporal_split

SMALL = ["--set", "generator.segments=1", "--set", "generator.days=3", "--set", "progress=false"]
QUICK = [
    "--set",
    "train.hidden=[4]",
    "--set",
    "train.max_epochs=1",
    "--set",
    "train.mc_predict_samples=3",
    "--set",
    "train.mc_validation_samples=1",
    "--set",
    "tree.min_leaf=5",
]


def _run(*argv):
    with pytest.raises(SystemExit) as e:
        main(list(argv))
    return e.value.code


def _error_lines(capsys):
    return [line for line in capsys.readouterr().err.splitlines() if line.startswith("error ")]


def test_version(capsys):
    main(["--version"])
    assert capsys.readouterr().out.strip() == __version__


def test_config(capsys):
    assert _run("config", "--set", "hybrid.threshold=0.4", "--seed", "7") == 0
    config = json.loads(capsys.readouterr().out)
    assert config["seed"] == 7
    assert config["hybrid"]["threshold"] == 0.4
    assert config["hybrid"]["tau_p"] == 0.05

    assert _run("config", "--presets") == 0
    assert "benchmark-noisy" in capsys.readouterr().out.split()


def test_config_error(capsys):
    assert _run("config", "--set", "colour=blue") == 2
    lines = _error_lines(capsys)
    assert len(lines) == 1
    assert lines[0].startswith("error kind=config code=2 message=")
    assert "colour" in lines[0]


def test_generate_deterministic(tmp_path):
    for name in ("a", "b"):
        assert _run("generate", "--out", str(tmp_path / name), "--seed", "3", *SMALL) == 0

    for name in ("data/slots.csv", "data/weather.csv", "data/holidays.txt", "data/ground_truth_rules.json", "dataset.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    manifest = json.loads((tmp_path / "a" / "generate-manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["command"] == "generate"
    assert sorted(manifest["files"]) == [
        "data/ground_truth_rules.json",
        "data/holidays.txt",
        "data/slots.csv",
        "data/weather.csv",
        "dataset.json",
    ]
    assert manifest["files"]["dataset.json"]["size"] == (tmp_path / "a" / "dataset.json").stat().st_size

    assert _run("generate", "--out", str(tmp_path / "c"), "--seed", "4", *SMALL) == 0
    assert (tmp_path / "a" / "data" / "slots.csv").read_bytes() != (tmp_path / "c" / "data" / "slots.csv").read_bytes()


def test_pipeline(tmp_path, capsys):
    out = str(tmp_path)
    assert _run("generate", "--out", out, *SMALL) == 0
    assert _run("train", "--out", out, *SMALL, *QUICK) == 0

    for window in (1, 2, 3):
        assert (tmp_path / "models" / f"bnn-pw{window}.json").exists()
        assert (tmp_path / "models" / f"train-log-pw{window}.csv").exists()
        assert (tmp_path / "rules" / f"rules-pw{window}.json").exists()
    assert (tmp_path / "train-manifest.json").exists()

    assert _run("predict", "--out", out, "--method", "m2", "--slice", "test", "--window", "1", *SMALL, *QUICK) == 0
    test = temporal_split(Dataset.load(tmp_path / "dataset.json"))[2]
    lines = (tmp_path / "predictions-m2.jsonl").read_text().splitlines()
    assert len(lines) == len(test)

    labels = {c.label for c in OccupancyClass}
    for line, example in zip(lines, test):
        record = json.loads(line)
        assert list(record)[:6] == ["segment_id", "slot_start", "window", "predicted", "source", "confidence"]
        assert record["segment_id"] == example.segment_id
        assert record["window"] == 1
        assert record["predicted"] in labels
        assert record["source"] in ("neural", "neural_refined", "symbolic")

    assert _run("predict", "--out", out, "--method", "persistence", "--slice", "all", *SMALL) == 0
    lines = (tmp_path / "predictions-persistence.jsonl").read_text().splitlines()
    assert len(lines) == 3 * len(Dataset.load(tmp_path / "dataset.json"))

    assert _run("extract-rules", "--out", out, "--window", "2", "--print", *SMALL, *QUICK) == 0
    assert "PW2" in capsys.readouterr().out

    args = ["--set", "experiment.seeds=[0]", "--set", "experiment.windows=[1]"]
    assert _run("experiment", "--out", out, "--suite", "baseline", *SMALL, *QUICK, *args) == 0
    report = (tmp_path / "reports" / "baseline.csv").read_text().splitlines()
    assert report[0].startswith("model,condition,window,seed_count")
    assert len(report) == 6
    assert (tmp_path / "reports" / "baseline-manifest.json").exists()


def test_train_deterministic(tmp_path):
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert _run("generate", "--out", out, *SMALL) == 0
        assert _run("train", "--out", out, *SMALL, *QUICK) == 0

    for name in ("models/bnn-pw1.json", "models/train-log-pw3.csv", "rules/rules-pw2.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

def test_ingest(tmp_path):
    events = tmp_path / "events.csv"
    events.write_text(
        "bay_id,segment_id,timestamp,status\n"
        "b1,s1,2019-03-04T10:00:00Z,occupied\n"
        "b2,s1,2019-03-04T10:10:00Z,occupied\n"
        "b1,s1,2019-03-04T10:20:00Z,unoccupied\n"
        "b3,s1,yesterday at noon,occupied\n"
    )
    segments = tmp_path / "segments.csv"
    segments.write_text("segment_id,total_bays\ns1,4\n")

    out = tmp_path / "out"
    assert _run("ingest", "--out", str(out), "--events", str(events), "--segments", str(segments)) == 0

    rows = (out / "data" / "slots.csv").read_text().splitlines()
    assert rows[0].startswith("segment_id,slot_start,occupied_bays,total_bays")
    first = rows[1].split(",")
    assert first[0] == "s1"
    assert first[2:4] == ["1", "4"]
    assert float(first[4]) == 0.25

    rejects = (out / "data" / "rejects.csv").read_text().splitlines()
    assert len(rejects) == 2
    assert rejects[1].startswith("5,")

    manifest = json.loads((out / "ingest-manifest.json").read_text())
    assert manifest["command"] == "ingest"
    assert sorted(manifest["files"]) == ["data/rejects.csv", "data/slots.csv"]
    assert manifest["events"] == 3
    assert manifest["rejects"] == 1
    assert manifest["examples"] is None

    assert _run("ingest", "--out", str(out)) == 3



def test_errors(tmp_path, capsys):
    out = str(tmp_path)

    assert _run("train", "--out", out, *SMALL) == 3
    assert _error_lines(capsys)[0].startswith("error kind=data code=3")

    assert _run("generate", "--out", out, *SMALL) == 0
    capsys.readouterr()

    assert _run("predict", "--out", out, "--method", "oracle", *SMALL) == 2
    assert _error_lines(capsys)[0].startswith("error kind=config code=2")

    assert _run("predict", "--out", out, "--method", "m1", *SMALL) == 3
    assert _error_lines(capsys)[0].startswith("error kind=data code=3")

    (tmp_path / "rules").mkdir()
    (tmp_path / "rules" / "rules-pw1.json").write_text('{"rules": "nope"}')
    assert _run("predict", "--out", out, "--method", "symbolic", "--window", "1", *SMALL) == 4
    assert _error_lines(capsys)[0].startswith("error kind=integrity code=4")



if __name__ == "__main__":
    for name, obj in list(globals().items()):
        if name.startswith("test_") and callable(obj):
            print(f"Running {name}...")
            obj()
