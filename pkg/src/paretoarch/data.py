"""Series I/O, synthetic series, sliding windows and train/validation splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    pass


class SeriesTooShort(DataError):
    pass


class DegenerateSplit(DataError):
    pass


@dataclass(frozen=True)
class SeriesDataset:
    """Sliding-window view of a univariate series.

    Sample ``i`` covers ``values[starts[i] : starts[i] + lookback + horizon]``;
    the first ``lookback`` steps are the input window, the rest the target.
    """

    values: np.ndarray
    lookback: int
    horizon: int
    shift: int
    dt: float = 1.0
    train_idx: np.ndarray | None = None
    val_idx: np.ndarray | None = None
    name: str = ""

    @property
    def n_samples(self) -> int:
        return (len(self.values) - self.lookback - self.horizon) // self.shift + 1

    @property
    def starts(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.shift

    def windows(self, idx: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Inputs (n, lookback, 1) and targets (n, horizon, 1) for sample indices ``idx``."""
        starts = self.starts if idx is None else self.starts[np.asarray(idx, dtype=int)]
        span = self.lookback + self.horizon
        frames = self.values[starts[:, None] + np.arange(span)]
        return frames[:, : self.lookback, None], frames[:, self.lookback :, None]

    def covered(self, idx: Sequence[int]) -> np.ndarray:
        """Boolean mask of series positions touched by the given samples."""
        mask = np.zeros(len(self.values), dtype=bool)
        span = self.lookback + self.horizon
        for s in self.starts[np.asarray(idx, dtype=int)]:
            mask[s : s + span] = True
        return mask


def make_windows(series, lookback: int, horizon: int, shift: int = 1, dt: float = 1.0, name: str = "") -> SeriesDataset:
    values = np.asarray(series, dtype=np.float64).reshape(-1)
    if lookback < 1 or horizon < 1 or shift < 1:
        raise DataError("lookback, horizon and shift must be positive")
    if not np.isfinite(values).all():
        raise DataError("series contains non-finite values")
    if len(values) < lookback + horizon:
        raise SeriesTooShort(f"series of length {len(values)} is shorter than lookback+horizon = {lookback + horizon}")
    return SeriesDataset(values, lookback, horizon, shift, dt, name=name)


def split_counts(n: int, fraction: float) -> tuple[int, int]:
    if not 0.0 < fraction < 1.0:
        raise DegenerateSplit(f"fraction must lie in (0, 1), got {fraction}")
    # the epsilon keeps e.g. 0.29 * 100 from flooring to 28
    n_train = math.floor(fraction * n + 1e-9)
    if n_train == 0 or n_train == n:
        raise DegenerateSplit(f"splitting {n} samples at {fraction} leaves one side empty")
    return n_train, n - n_train


def split(dataset: SeriesDataset, fraction: float = 0.9, mode: str = "chronological", seed: int = 0) -> SeriesDataset:
    """Partition samples into train/validation.

    ``chronological`` keeps the first ``floor(fraction * n)`` samples for
    training; ``random`` draws them with a seeded permutation.
    """
    n = dataset.n_samples
    n_train, _ = split_counts(n, fraction)
    if mode == "chronological":
        order = np.arange(n)
    elif mode == "random":
        order = np.random.default_rng(seed).permutation(n)
    else:
        raise DataError(f"unknown split mode {mode!r}")
    return replace(dataset, train_idx=np.sort(order[:n_train]), val_idx=np.sort(order[n_train:]))


def synthetic_series(
    length: int,
    periods: Sequence[float] = (50.0, 17.0),
    amplitudes: Sequence[float] = (1.0, 0.5),
    noise: float = 0.02,
    seed: int = 0,
    offset: float = 0.0,
) -> np.ndarray:
    """Deterministic sum of sinusoids plus Gaussian noise."""
    if len(periods) != len(amplitudes):
        raise DataError("periods and amplitudes must have equal length")
    t = np.arange(length, dtype=np.float64)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2 * np.pi, size=len(periods))
    values = np.full(length, float(offset))
    for period, amp, phase in zip(periods, amplitudes, phases):
        values += amp * np.sin(2 * np.pi * t / period + phase)
    return values + noise * rng.standard_normal(length)


def read_series(path: str | Path, column: int = 1, delimiter: str | None = None) -> np.ndarray:
    """Read a delimited (index/time, value) file; a non-numeric first row is taken as a header."""
    text = Path(path).read_text()
    if delimiter is None:
        try:
            delimiter = csv.Sniffer().sniff(text[:4096], delimiters=",;\t ").delimiter
        except csv.Error:
            delimiter = ","
    rows = [r for r in csv.reader(text.splitlines(), delimiter=delimiter) if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = []
    for lineno, row in enumerate(rows, start=1):
        row = [c for c in row if c.strip()] if delimiter == " " else row
        try:
            values.append(float(row[column]))
        except (IndexError, ValueError):
            if lineno == 1:
                continue
            raise DataError(f"{path}:{lineno}: cannot read a number from column {column}") from None
    return np.asarray(values)


def write_series(path: str | Path, values: Sequence[float], dt: float = 1.0) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for i, v in enumerate(values):
            writer.writerow([repr(i * dt), repr(float(v))])
