import numpy as np
import pytest

from paretoarch.arch_space import ATTENTION, GRU, LSTM, SSM, ArchitectureSpec, SearchSpace, enumerate_space
from paretoarch.data import DataError, make_windows, split, synthetic_series
from paretoarch.neural import parameter_count
from paretoarch.store import PerformanceRecord, RecordStore, StoreCorrupt
from paretoarch.trainer import TrainConfig, normalization_stats, relative_l2, run_space, train

FAST = TrainConfig(max_epochs=2, patience=2, batch_size=32)


def _dataset(values, L=16, H=4, fraction=0.8):
    return split(make_windows(values, L, H, 1), fraction)


def test_relative_l2():
    assert relative_l2(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == 0.0
    assert relative_l2(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 1.0


def test_normalization_uses_training_samples_only():
    values = np.concatenate([np.zeros(60), np.full(40, 100.0)])
    ds = split(make_windows(values, 8, 2, 1), 0.5)
    mean, _ = normalization_stats(ds)
    covered = ds.covered(ds.train_idx)
    assert not covered[-20:].any()
    assert mean == values[covered].mean()


def test_constant_series_is_learned():
    spec = ArchitectureSpec((GRU,), 4, 16, 4)
    rec = train(spec, _dataset(np.full(200, 5.0)), TrainConfig(max_epochs=100, patience=10, batch_size=50))
    assert rec.f1 < 1e-3


def test_sine_is_learned_by_a_single_gru():
    t = np.arange(2000)
    series = np.sin(2 * np.pi * t / 50)
    ds = split(make_windows(series, 64, 16, 1), 0.9)
    spec = ArchitectureSpec((GRU,), 16, 64, 16)
    rec = train(spec, ds, TrainConfig(max_epochs=10, patience=5))
    assert rec.f1 < 0.15


def test_record_fields():
    spec = ArchitectureSpec((SSM, LSTM), 4, 16, 4, heads=2)
    rec = train(spec, _dataset(synthetic_series(150, periods=(20.0,), amplitudes=(1.0,))), FAST)
    assert rec.f3 == parameter_count(spec)
    assert rec.f1 >= 0 and rec.f2 > 0
    assert rec.metadata["epochs"] <= 2
    assert "f1_last_window" in rec.metadata


def test_window_mismatch():
    with pytest.raises(DataError):
        train(ArchitectureSpec((GRU,), 4, 32, 4), _dataset(np.zeros(100)), FAST)


def test_reproducible_f1_and_f3():
    spec = ArchitectureSpec((ATTENTION, GRU), 4, 16, 4, heads=2)
    ds = _dataset(synthetic_series(150, seed=2))
    a, b = train(spec, ds, FAST), train(spec, ds, FAST)
    assert a.f1 == b.f1 and a.f3 == b.f3
    assert train(spec, ds, TrainConfig(max_epochs=2, patience=2, batch_size=32, seed=1)).f1 != a.f1


@pytest.mark.parametrize("scale", [8.0, 3.7])
def test_f1_is_scale_free(scale):
    spec = ArchitectureSpec((SSM, GRU), 4, 16, 4, heads=2)
    values = synthetic_series(150, seed=3, offset=0.5)
    a = train(spec, _dataset(values), FAST)
    b = train(spec, _dataset(values * scale), FAST)
    assert abs(a.f1 - b.f1) < 1e-10


def test_capacity_monotone_in_block_counts():
    base = ArchitectureSpec((SSM, ATTENTION, GRU, LSTM), 8, 16, 4)
    for kind in (SSM, ATTENTION, GRU, LSTM):
        i = base.blocks.index(kind)
        more = ArchitectureSpec(base.blocks[: i + 1] + (kind,) + base.blocks[i + 1 :], 8, 16, 4)
        assert parameter_count(more) > parameter_count(base)


# -- sweeps and the record store ----------------------------------------------

def _small_space():
    return SearchSpace(count_ranges=((0, 1), (0, 1), (0, 0), (0, 0)), sequence_ids=(1,), hidden_dims=(4,),
                       lookbacks=(16,), horizon=4, heads=2)


def test_run_space_three_specs_then_idempotent(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    ds = _dataset(synthetic_series(120))
    new = run_space(_small_space(), ds, FAST, store)
    assert len(new) == 3 == len(store.load())
    assert run_space(_small_space(), ds, FAST, store) == []
    assert {r.key for r in store.load()} == {s.key for s in enumerate_space(_small_space())}


def test_run_space_resumes_after_interruption(tmp_path):
    store = RecordStore(tmp_path / "records.jsonl")
    ds = _dataset(synthetic_series(120))

    class Killed(Exception):
        pass

    def kill_after_two(record, done, total):
        if done == 2:
            raise Killed

    with pytest.raises(Killed):
        run_space(_small_space(), ds, FAST, store, on_record=kill_after_two)
    assert len(store.load()) == 2
    new = run_space(_small_space(), ds, FAST, store)
    assert len(new) == 1 and len(store.load()) == 3


def test_parallel_matches_sequential(tmp_path):
    ds = _dataset(synthetic_series(120))
    seq = run_space(_small_space(), ds, FAST, RecordStore(tmp_path / "a.jsonl"), jobs=1)
    par = run_space(_small_space(), ds, FAST, RecordStore(tmp_path / "b.jsonl"), jobs=2)
    assert {r.key: (r.f1, r.f3) for r in seq} == {r.key: (r.f1, r.f3) for r in par}


def test_store_round_trip_and_corruption(tmp_path):
    store = RecordStore(tmp_path / "r.jsonl")
    rec = PerformanceRecord("GRU|h16|L96|H24|s1", 0.1 + 0.2, 1.0 / 3.0, 2201, {"seed": 0})
    store.append(rec)
    (back,) = store.load()
    assert back == rec and back.f1 == 0.1 + 0.2 and back.metadata == {"seed": 0}
    with open(store.path, "a") as fh:
        fh.write("GRU|h16|0.1|2|3\n")
    with pytest.raises(StoreCorrupt):
        store.load()


def test_record_invariants():
    with pytest.raises(ValueError):
        PerformanceRecord("k", -0.1, 1.0, 1)
    with pytest.raises(ValueError):
        PerformanceRecord("k", 0.1, 0.0, 1)
    with pytest.raises(ValueError):
        PerformanceRecord("k", 0.1, 1.0, 0)
