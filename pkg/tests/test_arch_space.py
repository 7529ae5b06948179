import itertools
import time

import pytest
from hypothesis import given, strategies as st

from paretoarch.arch_space import (
    ATTENTION,
    GRU,
    LSTM,
    SSM,
    ArchitectureSpec,
    ArchSpaceError,
    BlockKind,
    CountVector,
    EmptySpace,
    SearchSpace,
    UnknownSequenceId,
    app1_space,
    app4_space,
    canonical_key,
    enumerate_space,
    iter_raw,
    ordering_for,
    parse_key,
    realize,
)


def test_block_kind_total_order():
    assert list(BlockKind) == [GRU, LSTM, ATTENTION, SSM]
    assert GRU < LSTM < ATTENTION < SSM


@pytest.mark.parametrize(
    "seq_id, expected",
    [
        (1, [SSM, ATTENTION, GRU, LSTM]),
        (2, [ATTENTION, SSM, GRU, LSTM]),
        (3, [SSM, GRU, ATTENTION, LSTM]),
        (4, [GRU, ATTENTION, SSM, LSTM]),
        (5, [ATTENTION, GRU, SSM, LSTM]),
        (6, [GRU, SSM, ATTENTION, LSTM]),
    ],
)
def test_ordering_table(seq_id, expected):
    assert list(ordering_for(seq_id)) == expected


def test_builtin_orderings_are_the_lstm_last_permutations():
    perms = {tuple(ordering_for(i)) for i in range(1, 7)}
    expected = {p + (LSTM,) for p in itertools.permutations([SSM, ATTENTION, GRU])}
    assert perms == expected


def test_unknown_sequence_id():
    with pytest.raises(UnknownSequenceId):
        ordering_for(7)
    with pytest.raises(UnknownSequenceId):
        ordering_for(0)
    assert ordering_for(7, {7: (LSTM, GRU, SSM, ATTENTION)}) == (LSTM, GRU, SSM, ATTENTION)


def test_realize_examples():
    assert realize(CountVector(2, 1, 1, 1), ordering_for(4)) == (GRU, GRU, ATTENTION, SSM, LSTM)
    assert realize(CountVector(1, 0, 0, 0), ordering_for(1)) == (GRU,)
    for i in range(1, 7):
        assert realize(CountVector(0, 2, 0, 0), ordering_for(i)) == (LSTM, LSTM)


def test_zero_count_vector_rejected():
    with pytest.raises(ArchSpaceError):
        CountVector(0, 0, 0, 0)
    with pytest.raises(ArchSpaceError):
        CountVector(-1, 1, 0, 0)


@given(st.tuples(*[st.integers(0, 3)] * 4).filter(lambda c: sum(c) > 0), st.integers(1, 6))
def test_realize_is_order_preserving(counts, seq_id):
    order = ordering_for(seq_id)
    blocks = realize(CountVector(*counts), order)
    assert len(blocks) == sum(counts)
    rank = {k: i for i, k in enumerate(order)}
    assert [rank[b] for b in blocks] == sorted(rank[b] for b in blocks)


def test_enumerate_app1_counts():
    space = app1_space()
    assert space.raw_size() == 1440
    assert len(list(iter_raw(space))) == 1440
    assert len(enumerate_space(space)) == 708


def test_enumerate_app4_counts():
    space = app4_space()
    specs = enumerate_space(space)
    assert len(specs) == 1530
    assert len(specs) == len(space.count_vectors()) * 3 * 2 == 255 * 6


def test_enumerate_singleton():
    space = SearchSpace(count_ranges=((0, 1), (0, 0), (0, 0), (0, 0)), sequence_ids=(1,), hidden_dims=(16,))
    specs = enumerate_space(space)
    assert [s.key for s in specs] == ["GRU|h16|L96|H24|s1"]


def test_enumerate_empty_space():
    space = SearchSpace(count_ranges=((0, 0),) * 4)
    with pytest.raises(EmptySpace):
        enumerate_space(space)


def test_enumerate_is_sorted_and_deterministic():
    a = [s.key for s in enumerate_space(app1_space())]
    b = [s.key for s in enumerate_space(app1_space())]
    assert a == b == sorted(a)


@given(
    st.integers(0, 2), st.integers(0, 2),
    st.lists(st.sampled_from([8, 16, 32, 64]), min_size=1, max_size=3, unique=True),
    st.lists(st.sampled_from([32, 64, 96]), min_size=1, max_size=2, unique=True),
)
def test_fixed_ordering_size_formula(hi_gru, hi_ssm, hidden, lookbacks):
    space = SearchSpace(
        count_ranges=((0, hi_gru), (0, 1), (0, 1), (0, hi_ssm)),
        sequence_ids=(),
        fixed_ordering=(SSM, ATTENTION, GRU, LSTM),
        hidden_dims=tuple(hidden),
        lookbacks=tuple(lookbacks),
    )
    n_counts = (hi_gru + 1) * 2 * 2 * (hi_ssm + 1) - 1
    assert len(enumerate_space(space)) == n_counts * len(hidden) * len(lookbacks)


def test_canonical_key_examples():
    spec = ArchitectureSpec((GRU,), hidden_dim=16, lookback=96, horizon=24)
    assert canonical_key(spec) == "GRU|h16|L96|H24|s1"
    assert canonical_key(ArchitectureSpec((GRU,), 16, 96, 24)) == canonical_key(spec)
    a = ArchitectureSpec((GRU, LSTM), 16, 96, 24)
    b = ArchitectureSpec((LSTM, GRU), 16, 96, 24)
    assert canonical_key(a) != canonical_key(b)


def test_canonical_key_injective_and_parseable():
    for space in (app1_space(), app4_space()):
        specs = enumerate_space(space)
        keys = [s.key for s in specs]
        assert len(set(keys)) == len(keys)
        assert all(parse_key(k) == s for k, s in zip(keys, specs))


def test_spec_validation():
    with pytest.raises(ArchSpaceError):
        ArchitectureSpec((), 16, 96, 24)
    with pytest.raises(ArchSpaceError):
        ArchitectureSpec((ATTENTION,), 10, 96, 24, heads=4)
    with pytest.raises(ArchSpaceError):
        ArchitectureSpec((GRU,), 16, 0, 24)


def test_downsampled_steps():
    assert ArchitectureSpec((GRU,), 16, 900, 60, downsample_stride=2).steps == 450
    assert ArchitectureSpec((GRU,), 16, 7, 1, downsample_stride=2).steps == 4


def test_describe():
    spec = ArchitectureSpec((GRU, GRU, SSM, ATTENTION, LSTM), 32, 96, 24)
    assert spec.describe() == "[GRU=2, SSM=1, Attention=1, LSTM=1]"


def test_enumerate_app1_under_one_second():
    start = time.perf_counter()
    enumerate_space(app1_space())
    enumerate_space(app4_space())
    assert time.perf_counter() - start < 1.0
