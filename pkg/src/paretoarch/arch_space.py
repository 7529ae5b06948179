"""Parameterized domain of composite forecasting architectures.

An architecture is a stack of GRU, LSTM, attention and SSM blocks.  It is
described by a count vector (how many blocks of each kind), an ordering id
(which kind comes first) and a few scalar hyperparameters.  Two
(counts, ordering) pairs that realize the same block list are the same
architecture, so enumeration deduplicates on the realized sequence.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class ArchSpaceError(ValueError):
    pass


class UnknownSequenceId(ArchSpaceError):
    pass


class EmptySpace(ArchSpaceError):
    pass


class BlockKind(enum.IntEnum):
    GRU = 0
    LSTM = 1
    ATTENTION = 2
    SSM = 3

    @classmethod
    def parse(cls, name: str) -> "BlockKind":
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ArchSpaceError(f"unknown block kind {name!r}") from None


GRU, LSTM, ATTENTION, SSM = BlockKind.GRU, BlockKind.LSTM, BlockKind.ATTENTION, BlockKind.SSM

# x2 -> block ordering; LSTM is last in every built-in entry
SEQUENCE_TABLE: dict[int, tuple[BlockKind, ...]] = {
    1: (SSM, ATTENTION, GRU, LSTM),
    2: (ATTENTION, SSM, GRU, LSTM),
    3: (SSM, GRU, ATTENTION, LSTM),
    4: (GRU, ATTENTION, SSM, LSTM),
    5: (ATTENTION, GRU, SSM, LSTM),
    6: (GRU, SSM, ATTENTION, LSTM),
}


@dataclass(frozen=True)
class CountVector:
    """Number of GRU, LSTM, attention and SSM blocks (n, m, j, k)."""

    gru: int = 0
    lstm: int = 0
    attention: int = 0
    ssm: int = 0

    def __post_init__(self):
        counts = self.as_tuple()
        if any(int(c) != c or c < 0 for c in counts):
            raise ArchSpaceError(f"block counts must be non-negative integers, got {counts}")
        if sum(counts) == 0:
            raise ArchSpaceError("the all-zero count vector is not an architecture")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.gru, self.lstm, self.attention, self.ssm)

    def count(self, kind: BlockKind) -> int:
        return self.as_tuple()[int(kind)]


def ordering_for(seq_id: int, extra: Mapping[int, Sequence[BlockKind]] | None = None) -> tuple[BlockKind, ...]:
    """Block ordering for a sequence id.

    Ids outside the built-in table are only accepted when supplied through
    ``extra`` (explicit configuration).
    """
    if extra and seq_id in extra:
        order = tuple(BlockKind(k) for k in extra[seq_id])
        if sorted(order) != list(BlockKind):
            raise ArchSpaceError(f"ordering {seq_id} must be a permutation of all four block kinds")
        return order
    try:
        return SEQUENCE_TABLE[seq_id]
    except KeyError:
        raise UnknownSequenceId(f"sequence id {seq_id} is not in the built-in table (1-6)") from None


def realize(counts: CountVector, ordering: Sequence[BlockKind]) -> tuple[BlockKind, ...]:
    # same-kind blocks are stacked contiguously
    return tuple(kind for kind in ordering for _ in range(counts.count(kind)))


@dataclass(frozen=True)
class ArchitectureSpec:
    blocks: tuple[BlockKind, ...]
    hidden_dim: int
    lookback: int
    horizon: int
    downsample_stride: int = 1
    heads: int = 4
    ffn_expansion: int = 4
    input_dim: int = 1

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(BlockKind(b) for b in self.blocks))
        if not self.blocks:
            raise ArchSpaceError("an architecture needs at least one block")
        for name in ("hidden_dim", "lookback", "horizon", "downsample_stride", "heads", "ffn_expansion", "input_dim"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ArchSpaceError(f"{name} must be a positive integer, got {value!r}")
        if self.hidden_dim % self.heads:
            raise ArchSpaceError(f"hidden_dim {self.hidden_dim} is not divisible by heads {self.heads}")

    @property
    def key(self) -> str:
        return canonical_key(self)

    @property
    def counts(self) -> tuple[int, int, int, int]:
        return tuple(sum(1 for b in self.blocks if b == kind) for kind in BlockKind)

    @property
    def steps(self) -> int:
        """Number of time steps the network sees after down-sampling."""
        return len(range((self.lookback - 1) % self.downsample_stride, self.lookback, self.downsample_stride))

    def describe(self) -> str:
        """Run-length block summary, e.g. ``[GRU=2, SSM=1, LSTM=1]``."""
        parts = [f"{kind.name.title() if kind == ATTENTION else kind.name}={len(list(grp))}"
                 for kind, grp in itertools.groupby(self.blocks)]
        return "[" + ", ".join(parts) + "]"


def canonical_key(spec: ArchitectureSpec) -> str:
    blocks = "-".join(b.name for b in spec.blocks)
    key = f"{blocks}|h{spec.hidden_dim}|L{spec.lookback}|H{spec.horizon}|s{spec.downsample_stride}"
    # non-default head/FFN settings are part of identity too
    if spec.heads != 4:
        key += f"|n{spec.heads}"
    if spec.ffn_expansion != 4:
        key += f"|e{spec.ffn_expansion}"
    if spec.input_dim != 1:
        key += f"|d{spec.input_dim}"
    return key


def parse_key(key: str) -> ArchitectureSpec:
    """Inverse of :func:`canonical_key`."""
    fields = key.split("|")
    try:
        blocks = tuple(BlockKind[name] for name in fields[0].split("-"))
        values = {f[0]: int(f[1:]) for f in fields[1:]}
        return ArchitectureSpec(
            blocks=blocks,
            hidden_dim=values["h"],
            lookback=values["L"],
            horizon=values["H"],
            downsample_stride=values["s"],
            heads=values.get("n", 4),
            ffn_expansion=values.get("e", 4),
            input_dim=values.get("d", 1),
        )
    except (KeyError, ValueError, IndexError) as exc:
        raise ArchSpaceError(f"malformed architecture key {key!r}") from exc


@dataclass
class SearchSpace:
    """Grid over block counts, orderings and scalar hyperparameters.

    ``sequence_ids`` lists built-in (or ``extra_orderings``) ids; set
    ``fixed_ordering`` instead to use a single explicit ordering.
    """

    count_ranges: tuple[tuple[int, int], ...] = ((0, 2),) * 4
    sequence_ids: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    fixed_ordering: tuple[BlockKind, ...] | None = None
    hidden_dims: tuple[int, ...] = (16, 32, 64)
    lookbacks: tuple[int, ...] = (96,)
    horizon: int = 24
    downsample_stride: int = 1
    heads: int = 4
    ffn_expansion: int = 4
    extra_orderings: dict[int, tuple[BlockKind, ...]] = field(default_factory=dict)

    def __post_init__(self):
        self.count_ranges = tuple((int(lo), int(hi)) for lo, hi in self.count_ranges)
        if len(self.count_ranges) != 4:
            raise ArchSpaceError("count_ranges needs one (low, high) pair per block kind")
        for lo, hi in self.count_ranges:
            if lo < 0 or hi < lo:
                raise ArchSpaceError(f"invalid count range ({lo}, {hi})")
        if self.fixed_ordering is not None:
            self.fixed_ordering = tuple(BlockKind(k) for k in self.fixed_ordering)
            if sorted(self.fixed_ordering) != list(BlockKind):
                raise ArchSpaceError("fixed_ordering must be a permutation of all four block kinds")
        self.sequence_ids = tuple(self.sequence_ids)
        self.hidden_dims = tuple(self.hidden_dims)
        self.lookbacks = tuple(self.lookbacks)
        if not self.hidden_dims or not self.lookbacks:
            raise ArchSpaceError("hidden_dims and lookbacks must be non-empty")
        if self.fixed_ordering is None and not self.sequence_ids:
            raise ArchSpaceError("either sequence_ids or fixed_ordering is required")

    def count_vectors(self) -> list[CountVector]:
        ranges = [range(lo, hi + 1) for lo, hi in self.count_ranges]
        return [CountVector(*c) for c in itertools.product(*ranges) if sum(c) > 0]

    def orderings(self) -> list[tuple[BlockKind, ...]]:
        if self.fixed_ordering is not None:
            return [self.fixed_ordering]
        return [ordering_for(i, self.extra_orderings) for i in self.sequence_ids]

    def raw_size(self) -> int:
        """Size of the Cartesian product before deduplication."""
        return len(self.count_vectors()) * len(self.orderings()) * len(self.hidden_dims) * len(self.lookbacks)


def iter_raw(space: SearchSpace) -> Iterable[ArchitectureSpec]:
    for counts, order, hidden, lookback in itertools.product(
        space.count_vectors(), space.orderings(), space.hidden_dims, space.lookbacks
    ):
        yield ArchitectureSpec(
            blocks=realize(counts, order),
            hidden_dim=hidden,
            lookback=lookback,
            horizon=space.horizon,
            downsample_stride=space.downsample_stride,
            heads=space.heads,
            ffn_expansion=space.ffn_expansion,
        )


def enumerate_space(space: SearchSpace) -> list[ArchitectureSpec]:
    """Deduplicated architectures of ``space``, sorted by canonical key."""
    unique = {spec.key: spec for spec in iter_raw(space)}
    if not unique:
        raise EmptySpace("search space is empty after excluding the all-zero count vector")
    return [unique[k] for k in sorted(unique)]


def app1_space(lookback: int = 96, horizon: int = 24) -> SearchSpace:
    """Counts 0-2 per kind, all six orderings, hidden 16/32/64."""
    return SearchSpace(lookbacks=(lookback,), horizon=horizon)


def app4_space(horizon: int = 60) -> SearchSpace:
    """Counts 0-3 per kind, fixed [SSM, Attention, GRU, LSTM], two lookbacks, stride 2."""
    return SearchSpace(
        count_ranges=((0, 3),) * 4,
        sequence_ids=(),
        fixed_ordering=SEQUENCE_TABLE[1],
        hidden_dims=(16, 32, 64),
        lookbacks=(500, 900),
        horizon=horizon,
        downsample_stride=2,
    )
