"""Dominance, Pareto front extraction, re-scaling and preference-based selection.

All objectives are minimized.  Comparisons are exact: records hold finite
decimals and a tolerance would silently drop members from the front.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .prefs import PreferenceExpr, check_monotone, evaluate


class ParetoError(ValueError):
    pass


class DimensionMismatch(ParetoError):
    pass


class EmptyInput(ParetoError):
    pass


class KeyNotInFront(ParetoError, KeyError):
    def __str__(self):
        return self.args[0]


class UncertifiedPreference(UserWarning):
    """The preference is not monotone, so restricting it to the front is unsafe."""


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True if ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    if len(a) != len(b):
        raise DimensionMismatch(f"cannot compare vectors of length {len(a)} and {len(b)}")
    strict = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strict = True
    return strict


def _as_items(records) -> list[tuple[str, tuple[float, ...]]]:
    if isinstance(records, Mapping):
        items = records.items()
    else:
        items = ((r.key, r.objectives) if hasattr(r, "objectives") else r for r in records)
    return [(str(k), tuple(float(v) for v in vec)) for k, vec in items]


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Boolean mask of rows not dominated by any other row.

    O(n^2 d) comparisons, done in row chunks to bound memory.
    """
    n = len(points)
    keep = np.ones(n, dtype=bool)
    chunk = max(1, 2_000_000 // max(1, n * points.shape[1]))
    for start in range(0, n, chunk):
        block = points[start : start + chunk, None, :]
        # dominated[i, j]: row j dominates row start+i
        dominated = (points[None] <= block).all(axis=2) & (points[None] < block).any(axis=2)
        keep[start : start + chunk] = ~dominated.any(axis=1)
    return keep


@dataclass(frozen=True)
class ParetoFront:
    members: tuple[tuple[str, tuple[float, ...]], ...]

    @property
    def keys(self) -> list[str]:
        return [k for k, _ in self.members]

    @property
    def points(self) -> np.ndarray:
        return np.array([v for _, v in self.members], dtype=float)

    @property
    def lower(self) -> np.ndarray:
        return self.points.min(axis=0)

    @property
    def upper(self) -> np.ndarray:
        return self.points.max(axis=0)

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, key: str) -> bool:
        return any(k == key for k, _ in self.members)

    def vector(self, key: str) -> tuple[float, ...]:
        for k, v in self.members:
            if k == key:
                return v
        raise KeyNotInFront(f"{key!r} is not a member of the Pareto front")

    def rescale_point(self, vec: Sequence[float]) -> tuple[float, ...]:
        """Apply the front's affine re-scaling to any vector (front members land in [0, 1])."""
        lo, hi = self.lower, self.upper
        out = []
        for v, a, b in zip(vec, lo, hi):
            out.append(0.0 if a == b else (float(v) - a) / (b - a))
        return tuple(out)


def pareto_front(records) -> ParetoFront:
    """Non-dominated subset of ``records``.

    ``records`` is a mapping key -> vector, an iterable of (key, vector)
    pairs, or objects with ``key`` and ``objectives``.  Equal vectors under
    different keys are all kept.  Members are sorted by key.
    """
    items = _as_items(records)
    if not items:
        raise EmptyInput("cannot extract a front from zero records")
    dims = {len(v) for _, v in items}
    if len(dims) != 1:
        raise DimensionMismatch(f"records have mixed dimensions {sorted(dims)}")
    points = np.array([v for _, v in items], dtype=float)
    if not np.isfinite(points).all():
        raise ParetoError("objective vectors must be finite")
    mask = nondominated_mask(points)
    members = sorted((items[i] for i in np.flatnonzero(mask)), key=lambda kv: kv[0])
    return ParetoFront(tuple(members))


def rescale(front: ParetoFront) -> dict[str, tuple[float, ...]]:
    """Map each member to [0, 1]^N; a constant coordinate maps to 0."""
    if not len(front):
        raise EmptyInput("empty front")
    return {k: front.rescale_point(v) for k, v in front.members}


def discover(front: ParetoFront, pref: PreferenceExpr, candidates=None) -> tuple[str, float]:
    """Argmin of ``pref`` with re-scaling taken from ``front``.

    Searches the front itself unless ``candidates`` (key -> vector) is
    given.  Ties go to the lexicographically smallest key.
    """
    if not len(front):
        raise EmptyInput("empty front")
    pool = front.members if candidates is None else _as_items(candidates)
    best = None
    for key, vec in pool:
        value = evaluate(pref, vec, front.rescale_point(vec))
        if best is None or value < best[1] or (value == best[1] and key < best[0]):
            best = (key, value)
    return best


def select(records, pref: PreferenceExpr) -> tuple[str, float, bool]:
    """Best record under ``pref``: over the front when ``pref`` is monotone, otherwise over everything.

    Returns (key, value, restricted_to_front).
    """
    items = _as_items(records)
    front = pareto_front(items)
    report = check_monotone(pref)
    if report.is_nondecreasing:
        key, value = discover(front, pref)
        return key, value, True
    warnings.warn(
        f"preference {pref.name or pref.render()!r} is not nondecreasing (terms {list(report.offending_terms)}); "
        "front restriction is uncertified, evaluating all records",
        UncertifiedPreference,
        stacklevel=2,
    )
    key, value = discover(front, pref, candidates=items)
    return key, value, False


def preference_values(front: ParetoFront, pref: PreferenceExpr, records: Iterable) -> dict[str, float]:
    return {k: evaluate(pref, v, front.rescale_point(v)) for k, v in _as_items(records)}
