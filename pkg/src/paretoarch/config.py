"""YAML run configuration.

Schema (every key optional; defaults shown)::

    dataset:
      path: null              # two-column delimited file (time, value)
      column: 1               # value column, 0-based
      prefix: null            # keep only the first N steps
      name: ""
      dt: 1.0
      shift: 1                # sliding-window shift
      split: {fraction: 0.9, mode: chronological, seed: 0}
      synthetic:              # used when path is null
        length: 2000
        periods: [50.0, 17.0]
        amplitudes: [1.0, 0.5]
        noise: 0.02
        seed: 0
    space:
      counts: {gru: [0, 2], lstm: [0, 2], attention: [0, 2], ssm: [0, 2]}
      sequence_ids: [1, 2, 3, 4, 5, 6]
      fixed_ordering: null    # e.g. [SSM, ATTENTION, GRU, LSTM]
      extra_orderings: {}     # id -> ordering, for ids beyond the built-in six
      hidden_dims: [16, 32, 64]
      lookbacks: [96]
      horizon: 24
      downsample_stride: 1
      heads: 4
      ffn_expansion: 4
    train: {learning_rate: 0.001, batch_size: 50, max_epochs: 100, patience: 10, seed: 0}
    store: records.jsonl
    out: out
    jobs: 1
    preferences: [p1, p2, p3, p4]
    targets: []               # architecture keys to rediscover
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .arch_space import ArchSpaceError, BlockKind, SearchSpace
from .trainer import TrainConfig


class ConfigError(ValueError):
    pass


_KIND_ORDER = ("gru", "lstm", "attention", "ssm")


@dataclass
class DatasetConfig:
    path: str | None = None
    column: int = 1
    prefix: int | None = None
    name: str = ""
    dt: float = 1.0
    shift: int = 1
    split: dict = field(default_factory=lambda: {"fraction": 0.9, "mode": "chronological", "seed": 0})
    synthetic: dict = field(
        default_factory=lambda: {"length": 2000, "periods": [50.0, 17.0], "amplitudes": [1.0, 0.5], "noise": 0.02, "seed": 0}
    )


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    space: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    store: str = "records.jsonl"
    out: str = "out"
    jobs: int = 1
    preferences: list = field(default_factory=lambda: ["p1", "p2", "p3", "p4"])
    targets: list = field(default_factory=list)
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    # -- derived objects ----------------------------------------------------

    def search_space(self) -> SearchSpace:
        s = dict(self.space)
        counts = s.pop("counts", {})
        unknown = set(counts) - set(_KIND_ORDER)
        if unknown:
            raise ConfigError(f"space.counts: unknown block kinds {sorted(unknown)}")
        ranges = tuple(tuple(counts.get(k, (0, 2))) for k in _KIND_ORDER)
        try:
            fixed = s.pop("fixed_ordering", None)
            extra = {int(k): tuple(BlockKind.parse(b) for b in v) for k, v in s.pop("extra_orderings", {}).items()}
            return SearchSpace(
                count_ranges=ranges,
                fixed_ordering=None if fixed is None else tuple(BlockKind.parse(b) for b in fixed),
                extra_orderings=extra,
                **s,
            )
        except (ArchSpaceError, TypeError, ValueError) as exc:
            raise ConfigError(f"space: {exc}") from exc

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(**self.train)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"train: {exc}") from exc

    def resolve(self, path: str | Path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def store_path(self) -> Path:
        return self.resolve(self.store)

    @property
    def out_dir(self) -> Path:
        return self.resolve(self.out)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    @classmethod
    def from_dict(cls, data: dict | None, base_dir: str | Path = ".") -> "RunConfig":
        data = copy.deepcopy(data or {})
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        known = {f.name for f in fields(cls)} - {"base_dir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}; expected some of {sorted(known)}")
        ds = data.pop("dataset", {}) or {}
        ds_known = {f.name for f in fields(DatasetConfig)}
        if set(ds) - ds_known:
            raise ConfigError(f"unknown dataset keys {sorted(set(ds) - ds_known)}")
        defaults = DatasetConfig()
        if "split" in ds:
            ds["split"] = {**defaults.split, **ds["split"]}
        if "synthetic" in ds:
            ds["synthetic"] = {**defaults.synthetic, **ds["synthetic"]}
        cfg = cls(dataset=DatasetConfig(**ds), base_dir=Path(base_dir), **data)
        # fail early on malformed sections
        cfg.search_space()
        cfg.train_config()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML ({exc})") from exc
        return cls.from_dict(data, base_dir=path.parent)


def builtin_space(name: str) -> dict:
    """Space sections for the two built-in grid shapes (``app1`` and ``app4``)."""
    if name == "app1":
        return {"hidden_dims": [16, 32, 64], "lookbacks": [96], "horizon": 24}
    if name == "app4":
        return {
            "counts": {k: [0, 3] for k in _KIND_ORDER},
            "sequence_ids": [],
            "fixed_ordering": ["SSM", "ATTENTION", "GRU", "LSTM"],
            "hidden_dims": [16, 32, 64],
            "lookbacks": [500, 900],
            "horizon": 60,
            "downsample_stride": 2,
        }
    raise ConfigError(f"unknown built-in grid {name!r}")
