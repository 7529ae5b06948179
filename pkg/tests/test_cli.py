import json

import pytest
import yaml

from paretoarch.cli import main
from paretoarch.config import ConfigError, RunConfig
from paretoarch.store import PerformanceRecord, RecordStore

TINY = {
    "dataset": {"synthetic": {"length": 300, "seed": 1}},
    "space": {
        "counts": {"gru": [0, 1], "lstm": [0, 0], "attention": [0, 0], "ssm": [0, 1]},
        "sequence_ids": [],
        "fixed_ordering": ["SSM", "ATTENTION", "GRU", "LSTM"],
        "hidden_dims": [4],
        "lookbacks": [16],
        "horizon": 4,
    },
    "train": {"max_epochs": 2, "patience": 2, "batch_size": 32},
    "store": "records.jsonl",
    "out": "out",
}


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(TINY))
    return path


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("grid, count", [("app1", "708"), ("app4", "1530")])
def test_enumerate_grids(tmp_path, capsys, grid, count):
    code, out, _ = _run(capsys, "enumerate", "--grid", grid, "--out", tmp_path)
    assert code == 0 and out.strip() == count
    assert len((tmp_path / "architectures.txt").read_text().splitlines()) == int(count)


def test_enumerate_config_and_singleton(tmp_path, capsys, cfg_path):
    code, out, err = _run(capsys, "enumerate", "--config", cfg_path, "-v")
    assert code == 0 and out.strip() == "3" and "deduplication: 3" in err
    single = dict(TINY, space=dict(TINY["space"], counts={"gru": [1, 1], "lstm": [0, 0], "attention": [0, 0], "ssm": [0, 0]}))
    path = tmp_path / "one.yaml"
    path.write_text(yaml.safe_dump(single))
    assert _run(capsys, "enumerate", "--config", path)[1].strip() == "1"


def test_bad_config_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text(yaml.safe_dump({"space": {"counts": {"gru": [0, 0], "lstm": [0, 0], "attention": [0, 0], "ssm": [0, 0]}}}))
    code, _, err = _run(capsys, "enumerate", "--config", path)
    assert code == 2 and "error" in err
    path.write_text(yaml.safe_dump({"bogus": 1}))
    assert _run(capsys, "enumerate", "--config", path)[0] == 2


def test_unknown_preference_exits_2(tmp_path, capsys, cfg_path):
    _run(capsys, "run", "--config", cfg_path)
    assert _run(capsys, "discover", "--config", cfg_path, "--pref", "0.5*f4")[0] == 2


def test_missing_store_exits_3(tmp_path, capsys, cfg_path):
    assert _run(capsys, "pareto", "--config", cfg_path)[0] == 3


def test_synth(tmp_path, capsys, cfg_path):
    out_file = tmp_path / "s.csv"
    code, _, _ = _run(capsys, "synth", "--config", cfg_path, "--output", out_file)
    lines = out_file.read_text().splitlines()
    assert code == 0 and len(lines) == 301


def test_run_resume_and_analysis(tmp_path, capsys, cfg_path):
    code, out, _ = _run(capsys, "run", "--config", cfg_path)
    assert code == 0 and "3 new records" in out
    store = RecordStore(tmp_path / "records.jsonl")
    first = store.load()
    assert len(first) == 3
    code, out, _ = _run(capsys, "run", "--config", cfg_path)
    assert "0 new records" in out and store.load() == first

    code, out, _ = _run(capsys, "pareto", "--config", cfg_path)
    assert code == 0 and "fhat1" in out

    code, out, _ = _run(capsys, "discover", "--config", cfg_path, "--pref", "p3", "--pref", "p2")
    assert code == 0
    by_key = {r.key: r for r in first}
    rows = [line.split() for line in out.splitlines()[1:]]
    assert by_key[rows[0][1]].f2 == min(r.f2 for r in first)
    assert by_key[rows[1][1]].f1 == min(r.f1 for r in first)

    code, _, err = _run(capsys, "discover", "--config", cfg_path, "--pref=-1*f1")
    assert code == 0 and "not nondecreasing" in err

    code, out, err = _run(capsys, "report", "--config", cfg_path, "--pref", "p1")
    assert code == 0
    out_dir = tmp_path / "out"
    for name in ("front.tsv", "front.jsonl", "discovery.tsv", "rediscovery.tsv", "points.tsv", "report.md"):
        assert (out_dir / name).exists()
    points = (out_dir / "points.tsv").read_text().splitlines()[1:]
    for line in points:
        key, f1, f2, f3 = line.split("\t")[:4]
        assert float(f1) == by_key[key].f1 and float(f2) == by_key[key].f2 and int(f3) == by_key[key].f3
    for line in (out_dir / "front.jsonl").read_text().splitlines():
        obj = json.loads(line)
        assert obj["f1"] == by_key[obj["key"]].f1


def test_rediscover_exit_codes(tmp_path, capsys):
    store = RecordStore(tmp_path / "r.jsonl")

    store.extend([PerformanceRecord("a", 0.0, 2.0, 10), PerformanceRecord("b", 1.0, 1.0, 10),
                  PerformanceRecord("c", 0.6, 1.6, 20), PerformanceRecord("d", 0.9, 1.9, 30)])
    code, out, err = _run(capsys, "rediscover", "--store", store.path, "--target", "a")
    assert code == 0 and "FEASIBLE" in out and json.loads(err.splitlines()[-1])["status"] == "FEASIBLE"
    code, out, _ = _run(capsys, "rediscover", "--store", store.path, "--target", "c")
    assert code == 4 and "INFEASIBLE" in out
    assert _run(capsys, "rediscover", "--store", store.path, "--target", "d")[0] == 3
    assert _run(capsys, "rediscover", "--store", store.path)[0] == 2


def test_jobs_parity_and_determinism(tmp_path, capsys):
    results = []
    for jobs in (1, 2):
        d = tmp_path / f"j{jobs}"
        d.mkdir()
        path = d / "run.yaml"
        path.write_text(yaml.safe_dump(TINY))
        assert _run(capsys, "run", "--config", path, "--jobs", jobs)[0] == 0
        results.append({r.key: (r.f1, r.f3) for r in RecordStore(d / "records.jsonl").load()})
    assert results[0] == results[1]


def test_config_round_trip(tmp_path, cfg_path):
    cfg = RunConfig.load(cfg_path)
    dumped = tmp_path / "again.yaml"
    cfg.dump(dumped)
    again = RunConfig.load(dumped)
    assert again.to_dict() == cfg.to_dict()
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"train": {"learning_rate": -1}})
