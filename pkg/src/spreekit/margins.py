"""Row-margin construction: population shares, distribution, reconciliation.

Large-area totals (from demographic projections or the cohort component
identity) are spread to small areas through within-large-area population
shares.  Shares can be frozen at the census (fixed), re-estimated each year
from auxiliary population data (dynamic), or mixed per region (hybrid:
dynamic only where projections show the strongest change).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Literal, NamedTuple

import numpy as np

from spreekit.composition import (
    AreaHierarchy,
    Composition,
    MarginLevel,
    MarginVector,
    _check_unique,
    row_margins,
)

SHARE_SUM_TOL = 1e-9

Provenance = Literal["fixed-census", "dynamic-auxiliary", "hybrid"]
ReconcilePolicy = Literal["scale-col-to-row", "scale-row-to-col", "error"]

# Mismatches at float noise level are left untouched rather than scaled by a
# factor within an ulp of 1, which would perturb exact degenerate pipelines.
_RECONCILE_NOISE_TOL = 1e-12


@dataclass(frozen=True)
class ShareVector:
    """Within-large-area population shares for every small area.

    Shares of the small areas inside each large area sum to one; the
    provenance records which construction produced them.
    """

    small_ids: tuple[str, ...]
    shares: np.ndarray
    hierarchy: AreaHierarchy
    reference_time: int = 0
    provenance: Provenance = "fixed-census"

    def __post_init__(self) -> None:
        object.__setattr__(self, "small_ids", _check_unique(self.small_ids, "small ids"))
        arr = np.array(self.shares, dtype=float)
        if arr.shape != (len(self.small_ids),):
            raise ValueError("shares shape does not match small ids")
        if np.any(arr < 0) or np.any(arr > 1 + SHARE_SUM_TOL):
            raise ValueError("shares must lie in [0, 1]")
        for large, pos in self.hierarchy.group_positions(self.small_ids).items():
            if pos.size == 0:
                continue
            s = arr[pos].sum()
            if abs(s - 1.0) > SHARE_SUM_TOL:
                raise ValueError(
                    f"shares in large area {large!r} sum to {s!r}, expected 1"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "shares", arr)

    def share_of(self, small_id: str) -> float:
        return float(self.shares[self.small_ids.index(small_id)])


@dataclass(frozen=True)
class ComponentInputs:
    """Demographic flows for one projection period, at large-area level."""

    base_population: MarginVector
    births: MarginVector
    deaths: MarginVector
    immigration: MarginVector
    emigration: MarginVector

    def __post_init__(self) -> None:
        ids = self.base_population.ids
        for name in ("births", "deaths", "immigration", "emigration"):
            m: MarginVector = getattr(self, name)
            if m.ids != ids:
                raise ValueError(f"{name} ids do not match base population ids")


@dataclass(frozen=True)
class HybridSelection:
    """Large areas that switch to dynamic shares, by projected change.

    The selected set is the top ``quantile_cutoff`` fraction of large areas
    by change score (ceiling count, ties broken by id order).
    """

    selected_large_ids: tuple[str, ...]
    change_scores: dict[str, float]
    quantile_cutoff: float

    def __post_init__(self) -> None:
        if not 0 < self.quantile_cutoff < 1:
            raise ValueError("quantile_cutoff must lie in (0, 1)")
        unknown = [s for s in self.selected_large_ids if s not in self.change_scores]
        if unknown:
            raise ValueError(f"selected ids without change scores: {unknown}")
        object.__setattr__(self, "selected_large_ids", tuple(self.selected_large_ids))


class ReconcileResult(NamedTuple):
    row: MarginVector
    col: MarginVector
    factor: float


def fixed_shares(census: Composition, h: AreaHierarchy) -> ShareVector:
    """Shares frozen at the census: area total over its large-area total."""
    totals = row_margins(census)
    groups = h.group_positions(census.area_ids)
    shares = np.empty(census.n_areas)
    for large, pos in groups.items():
        if pos.size == 0:
            continue
        large_total = totals.values[pos].sum()
        if large_total <= 0:
            raise ValueError(
                f"large area {large!r} has zero census population; shares undefined"
            )
        shares[pos] = totals.values[pos] / large_total
    return ShareVector(
        census.area_ids, shares, h, census.reference_time, "fixed-census"
    )


def dynamic_shares(aux_pop: MarginVector, h: AreaHierarchy) -> ShareVector:
    """Shares from an auxiliary small-area population estimate.

    Only the within-large-area distribution of the auxiliary values is used,
    never their totals, so any positive rescaling of the input leaves the
    shares unchanged.
    """
    groups = h.group_positions(aux_pop.ids)
    shares = np.empty(len(aux_pop.ids))
    for large, pos in groups.items():
        if pos.size == 0:
            continue
        large_total = aux_pop.values[pos].sum()
        if large_total <= 0:
            raise ValueError(
                f"large area {large!r} has zero auxiliary population; shares undefined"
            )
        shares[pos] = aux_pop.values[pos] / large_total
    return ShareVector(
        aux_pop.ids, shares, h, aux_pop.reference_time, "dynamic-auxiliary"
    )


def select_by_change(
    projected: MarginVector,
    baseline: MarginVector,
    quantile_cutoff: float = 0.25,
) -> HybridSelection:
    """Pick the large areas with the strongest projected population change.

    Change score is the absolute relative change |projected/baseline - 1|,
    so both growth and decline count.  Selects ceil(cutoff * K) areas; equal
    scores are resolved by id order for reproducibility.
    """
    if projected.ids != baseline.ids:
        raise ValueError("projected and baseline ids do not match")
    if np.any(baseline.values <= 0):
        zero = [i for i, v in zip(baseline.ids, baseline.values) if v <= 0]
        raise ValueError(f"baseline population must be positive, got zero for: {zero}")
    scores = np.abs(projected.values / baseline.values - 1.0)
    n_select = math.ceil(quantile_cutoff * len(projected.ids))
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    selected = tuple(projected.ids[i] for i in order[:n_select])
    return HybridSelection(
        selected,
        {i: float(s) for i, s in zip(projected.ids, scores)},
        quantile_cutoff,
    )


def hybrid_shares(
    fixed: ShareVector, dynamic: ShareVector, sel: HybridSelection
) -> ShareVector:
    """Dynamic shares inside selected large areas, fixed shares elsewhere.

    Each large area is taken wholesale from one source, so per-large-area
    sums stay one.
    """
    if fixed.small_ids != dynamic.small_ids:
        raise ValueError("fixed and dynamic share vectors cover different small areas")
    if fixed.hierarchy.assignments != dynamic.hierarchy.assignments:
        raise ValueError("fixed and dynamic share vectors use different hierarchies")
    selected = set(sel.selected_large_ids)
    use_dynamic = np.array(
        [fixed.hierarchy.large_of(a) in selected for a in fixed.small_ids]
    )
    shares = np.where(use_dynamic, dynamic.shares, fixed.shares)
    return ShareVector(
        fixed.small_ids, shares, fixed.hierarchy, dynamic.reference_time, "hybrid"
    )


def _conserving_block(total: float, shares_block: np.ndarray) -> np.ndarray:
    """total * shares with one entry absorbing the rounding residual.

    Recomputes a single positive-share entry as the total minus the exact
    rational sum of the others, trying the largest share first and then the
    remaining entries from smallest up (a finer float grid can represent
    the residual when the largest cannot).  The accepted candidate makes
    the exact sum of the returned floats equal the total; zero shares stay
    exactly zero.
    """
    block = total * shares_block
    order = np.argsort(shares_block, kind="stable")
    t = Fraction(total)
    for idx in (int(order[-1]), *map(int, order[:-1])):
        if shares_block[idx] <= 0.0:
            continue
        rest = sum(Fraction(float(v)) for i, v in enumerate(block) if i != idx)
        cand = float(t - rest)
        if cand <= 0.0:
            continue
        old = block[idx]
        block[idx] = cand
        if math.fsum(block) == total:
            return block
        block[idx] = old
    # Degenerate ulp-scale inputs: keep the nearest-rounded largest entry.
    anchor = int(order[-1])
    rest = sum(Fraction(float(v)) for i, v in enumerate(block) if i != anchor)
    block[anchor] = max(float(t - rest), 0.0)
    return block


def distribute(large_totals: MarginVector, shares: ShareVector) -> MarginVector:
    """Small-area margin: each large total spread by the within-area shares.

    Conservation is exact, not approximate: the values returned for the
    small areas of one large area sum back to its total in exact (not
    merely floating-point) arithmetic.
    """
    if large_totals.level is not MarginLevel.LARGE_AREA:
        raise ValueError("large_totals must be a large-area margin")
    totals = large_totals.as_dict()
    values = np.empty(len(shares.small_ids))
    for large, pos in shares.hierarchy.group_positions(shares.small_ids).items():
        if pos.size == 0:
            continue
        if large not in totals:
            raise KeyError(f"no total supplied for large area {large!r}")
        values[pos] = _conserving_block(float(totals[large]), shares.shares[pos])
    return MarginVector(
        shares.small_ids, values, MarginLevel.SMALL_AREA, large_totals.reference_time
    )


def cohort_component(inputs: ComponentInputs) -> MarginVector:
    """Projected population: base + births - deaths + immigration - emigration."""
    base = inputs.base_population
    values = (
        base.values
        + inputs.births.values
        - inputs.deaths.values
        + inputs.immigration.values
        - inputs.emigration.values
    )
    if np.any(values < 0):
        neg = [i for i, v in zip(base.ids, values) if v < 0]
        raise ValueError(f"projected population negative for: {neg}")
    return MarginVector(base.ids, values, base.level, base.reference_time + 1)


def reconcile_margins(
    row: MarginVector,
    col: MarginVector,
    policy: ReconcilePolicy = "scale-col-to-row",
) -> ReconcileResult:
    """Force the two margin totals to agree so raking can run.

    Default scales the column margin onto the row total: row margins derive
    from demographic projections, which serve as the population benchmark.
    Under ``error`` a relative mismatch above 1e-6 raises instead.
    """
    total_r, total_c = row.total(), col.total()
    if total_r <= 0 or total_c <= 0:
        raise ValueError("margin totals must be positive to reconcile")
    mismatch = abs(total_r - total_c) / max(total_r, total_c)
    if mismatch <= _RECONCILE_NOISE_TOL:
        return ReconcileResult(row, col, 1.0)
    if policy == "scale-col-to-row":
        factor = total_r / total_c
        return ReconcileResult(row, col.with_values(col.values * factor), factor)
    if policy == "scale-row-to-col":
        factor = total_c / total_r
        return ReconcileResult(row.with_values(row.values * factor), col, factor)
    if policy == "error":
        if mismatch > 1e-6:
            raise ValueError(
                f"margin totals disagree by {mismatch:.3e} relative "
                f"(rows {total_r!r}, columns {total_c!r})"
            )
        return ReconcileResult(row, col, 1.0)
    raise ValueError(f"unknown reconcile policy {policy!r}")
