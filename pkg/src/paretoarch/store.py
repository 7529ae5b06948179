"""Append-only performance record store.

One JSON object per line::

    {"key": "GRU|h16|L64|H16|s1", "f1": 0.041, "f2": 3.2, "f3": 1296, "metadata": {...}}

Floats are written with ``repr`` precision so stored values round-trip
bit-for-bit.  Each append is a single ``write`` followed by ``fsync``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable


class StoreCorrupt(ValueError):
    pass


@dataclass(frozen=True)
class PerformanceRecord:
    key: str
    f1: float
    f2: float
    f3: int
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not self.f1 >= 0:
            raise ValueError(f"f1 must be >= 0, got {self.f1}")
        if not self.f2 > 0:
            raise ValueError(f"f2 must be > 0, got {self.f2}")
        if int(self.f3) != self.f3 or self.f3 < 1:
            raise ValueError(f"f3 must be a positive integer, got {self.f3}")

    @property
    def objectives(self) -> tuple[float, float, float]:
        return (float(self.f1), float(self.f2), float(self.f3))

    def to_line(self) -> str:
        obj = {"key": self.key, "f1": self.f1, "f2": self.f2, "f3": int(self.f3), "metadata": self.metadata}
        return json.dumps(obj, sort_keys=False, allow_nan=False)

    @classmethod
    def from_line(cls, line: str) -> "PerformanceRecord":
        obj = json.loads(line)
        return cls(str(obj["key"]), float(obj["f1"]), float(obj["f2"]), int(obj["f3"]), dict(obj.get("metadata", {})))


class RecordStore:
    def __init__(self, path: str | Path):
        self.path = Path(path)

    def exists(self) -> bool:
        return self.path.exists()

    def load(self) -> list[PerformanceRecord]:
        if not self.path.exists():
            return []
        records = []
        with open(self.path) as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(PerformanceRecord.from_line(line))
                except (ValueError, KeyError, TypeError) as exc:
                    raise StoreCorrupt(f"{self.path}:{lineno}: unparseable record ({exc})") from exc
        return records

    def keys(self) -> set[str]:
        return {r.key for r in self.load()}

    def append(self, record: PerformanceRecord) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        data = (record.to_line() + "\n").encode()
        fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
        try:
            os.write(fd, data)
            os.fsync(fd)
        finally:
            os.close(fd)

    def extend(self, records: Iterable[PerformanceRecord]) -> None:
        for r in records:
            self.append(r)
