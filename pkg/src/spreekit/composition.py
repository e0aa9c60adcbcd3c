"""Core data model: compositions, margins, and the area hierarchy.

A composition is a non-negative contingency table of population counts over
small areas (rows) and categories of interest (columns).  Small areas nest in
disjoint large areas; margins are carried as labelled vectors.  All types are
immutable after construction, so they can be shared freely across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np


class MarginLevel(str, Enum):
    """Which slice of the table a margin vector describes."""

    SMALL_AREA = "small-area"
    LARGE_AREA = "large-area"
    CATEGORY = "category"


def _check_unique(ids: Sequence[str], what: str) -> tuple[str, ...]:
    ids = tuple(str(i) for i in ids)
    if len(set(ids)) != len(ids):
        seen: set[str] = set()
        dupes = sorted({i for i in ids if i in seen or seen.add(i)})  # type: ignore[func-returns-value]
        raise ValueError(f"duplicate {what}: {dupes}")
    return ids


def _as_readonly(values, shape_name: str, allow_negative: bool = False) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{shape_name} contains non-finite values")
    if not allow_negative and np.any(arr < 0):
        raise ValueError(f"{shape_name} contains negative values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Composition:
    """A x J table of non-negative counts (persons or households).

    Identifiers are opaque strings; their order is the ingestion order and is
    preserved by every operation.  Counts are reals rather than integers
    because raking output and dasymetric estimates are fractional.
    """

    area_ids: tuple[str, ...]
    category_ids: tuple[str, ...]
    counts: np.ndarray
    reference_time: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "area_ids", _check_unique(self.area_ids, "area ids"))
        object.__setattr__(
            self, "category_ids", _check_unique(self.category_ids, "category ids")
        )
        arr = _as_readonly(self.counts, "counts")
        if arr.ndim != 2 or arr.shape != (len(self.area_ids), len(self.category_ids)):
            raise ValueError(
                f"counts shape {arr.shape} does not match "
                f"({len(self.area_ids)}, {len(self.category_ids)})"
            )
        object.__setattr__(self, "counts", arr)

    @property
    def n_areas(self) -> int:
        return len(self.area_ids)

    @property
    def n_categories(self) -> int:
        return len(self.category_ids)

    def total(self) -> float:
        return float(self.counts.sum())

    def area_index(self, area_id: str) -> int:
        try:
            return self.area_ids.index(area_id)
        except ValueError:
            raise KeyError(f"unknown area id {area_id!r}") from None

    def category_index(self, category_id: str) -> int:
        try:
            return self.category_ids.index(category_id)
        except ValueError:
            raise KeyError(f"unknown category id {category_id!r}") from None

    def with_counts(self, counts: np.ndarray, reference_time: int | None = None) -> "Composition":
        """Copy of this composition with new counts (same labels)."""
        t = self.reference_time if reference_time is None else reference_time
        return Composition(self.area_ids, self.category_ids, counts, t)


@dataclass(frozen=True)
class AreaHierarchy:
    """Assignment of each small area to exactly one large area.

    ``large_ids`` fixes the ordering of large areas; every large id referenced
    by an assignment must appear there.
    """

    assignments: Mapping[str, str]
    large_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "large_ids", _check_unique(self.large_ids, "large ids"))
        assignments = {str(s): str(l) for s, l in self.assignments.items()}
        known = set(self.large_ids)
        orphans = sorted({l for l in assignments.values() if l not in known})
        if orphans:
            raise ValueError(f"assignments reference unknown large ids: {orphans}")
        object.__setattr__(self, "assignments", assignments)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "AreaHierarchy":
        """Build from (small_id, large_id) pairs; large order = first appearance."""
        assignments: dict[str, str] = {}
        large_ids: list[str] = []
        for small, large in pairs:
            small, large = str(small), str(large)
            if small in assignments:
                raise ValueError(f"small area {small!r} assigned twice")
            assignments[small] = large
            if large not in large_ids:
                large_ids.append(large)
        return cls(assignments, tuple(large_ids))

    @property
    def small_ids(self) -> tuple[str, ...]:
        return tuple(self.assignments)

    def large_of(self, small_id: str) -> str:
        try:
            return self.assignments[small_id]
        except KeyError:
            raise KeyError(f"small area {small_id!r} not assigned in hierarchy") from None

    def smalls_of(self, large_id: str) -> tuple[str, ...]:
        return tuple(s for s, l in self.assignments.items() if l == large_id)

    def group_positions(self, area_ids: Sequence[str]) -> dict[str, np.ndarray]:
        """Positions of ``area_ids`` grouped by large area (large id order)."""
        groups: dict[str, list[int]] = {l: [] for l in self.large_ids}
        for pos, a in enumerate(area_ids):
            groups[self.large_of(a)].append(pos)
        return {l: np.asarray(p, dtype=int) for l, p in groups.items()}


@dataclass(frozen=True)
class MarginVector:
    """Labelled vector of non-negative totals at one aggregation level."""

    ids: tuple[str, ...]
    values: np.ndarray
    level: MarginLevel
    reference_time: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", _check_unique(self.ids, "margin ids"))
        arr = _as_readonly(self.values, "margin values")
        if arr.ndim != 1 or arr.shape[0] != len(self.ids):
            raise ValueError(
                f"margin values shape {arr.shape} does not match {len(self.ids)} ids"
            )
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "level", MarginLevel(self.level))

    def total(self) -> float:
        return float(self.values.sum())

    def value_of(self, id_: str) -> float:
        try:
            return float(self.values[self.ids.index(id_)])
        except ValueError:
            raise KeyError(f"unknown margin id {id_!r}") from None

    def as_dict(self) -> dict[str, float]:
        return {i: float(v) for i, v in zip(self.ids, self.values)}

    def with_values(self, values: np.ndarray) -> "MarginVector":
        return MarginVector(self.ids, values, self.level, self.reference_time)


@dataclass(frozen=True)
class ProbabilityMatrix:
    """Row-normalised composition: within-area category probabilities.

    Rows with zero source population cannot be normalised; they are kept as
    zero rows and listed in ``zero_row_ids`` so samplers can skip them.
    """

    area_ids: tuple[str, ...]
    category_ids: tuple[str, ...]
    probs: np.ndarray
    zero_row_ids: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "area_ids", _check_unique(self.area_ids, "area ids"))
        object.__setattr__(
            self, "category_ids", _check_unique(self.category_ids, "category ids")
        )
        arr = _as_readonly(self.probs, "probabilities")
        if arr.shape != (len(self.area_ids), len(self.category_ids)):
            raise ValueError("probability matrix shape does not match ids")
        if np.any(arr > 1 + 1e-12):
            raise ValueError("probabilities exceed 1")
        zero = set(self.zero_row_ids)
        row_sums = arr.sum(axis=1)
        for i, a in enumerate(self.area_ids):
            if a in zero:
                continue
            if abs(row_sums[i] - 1.0) > 1e-9:
                raise ValueError(f"row {a!r} sums to {row_sums[i]!r}, expected 1")
        object.__setattr__(self, "probs", arr)
        object.__setattr__(self, "zero_row_ids", tuple(self.zero_row_ids))


def row_margins(c: Composition) -> MarginVector:
    """Per-area population totals (sum over categories)."""
    return MarginVector(
        c.area_ids, c.counts.sum(axis=1), MarginLevel.SMALL_AREA, c.reference_time
    )


def column_margins(c: Composition) -> MarginVector:
    """Per-category totals over all areas."""
    return MarginVector(
        c.category_ids, c.counts.sum(axis=0), MarginLevel.CATEGORY, c.reference_time
    )


def aggregate_to_large(c: Composition, h: AreaHierarchy) -> Composition:
    """Collapse the small-area rows of ``c`` into large-area rows.

    Every area of ``c`` must be assigned in ``h``; totals are conserved.
    """
    unassigned = [a for a in c.area_ids if a not in h.assignments]
    if unassigned:
        raise KeyError(f"areas not assigned in hierarchy: {unassigned}")
    out = np.zeros((len(h.large_ids), c.n_categories))
    large_pos = {l: i for i, l in enumerate(h.large_ids)}
    for i, a in enumerate(c.area_ids):
        out[large_pos[h.large_of(a)]] += c.counts[i]
    return Composition(h.large_ids, c.category_ids, out, c.reference_time)


def to_probabilities(c: Composition) -> ProbabilityMatrix:
    """Within-area category probabilities; zero-total rows are flagged."""
    totals = c.counts.sum(axis=1)
    zero = totals == 0
    safe = np.where(zero, 1.0, totals)
    probs = c.counts / safe[:, None]
    probs[zero] = 0.0
    flagged = tuple(a for a, z in zip(c.area_ids, zero) if z)
    return ProbabilityMatrix(c.area_ids, c.category_ids, probs, flagged)
