"""Design-based Monte Carlo harness comparing margin strategies.

Each round replicates the base-year census (Poisson row totals, multinomial
split), builds the fixed, dynamic, and hybrid row margins from that
replicate, re-runs the update against a resampled column margin, and scores
the result against an independently replicated target-year census.  Metrics
are aggregated per area, then grouped into quartiles of the true
within-region share change.

Replicate r draws from RNG stream r, in this order: base-year census
replication, target-year census replication, then column-margin resampling.
The dynamic margin uses pool entry ``r % len(aux_pool)`` and consumes no
randomness.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from spreekit import rng as rngmod
from spreekit.bootstrap import SurveyDesign, resample_column_margin
from spreekit.composition import (
    AreaHierarchy,
    Composition,
    MarginLevel,
    MarginVector,
    aggregate_to_large,
    column_margins,
    row_margins,
)
from spreekit.ipf import IpfConfig
from spreekit.margins import (
    ShareVector,
    dynamic_shares,
    fixed_shares,
    hybrid_shares,
    select_by_change,
)
from spreekit.mpi import POVERTY_CATEGORIES
from spreekit.update import UpdateError, UpdateRequest, spree_update

STRATEGIES = ("fixed", "dynamic", "hybrid")
QUARTILE_NAMES = ("lowest", "second", "third", "highest")
SUMMARY_COLUMNS = ("q2.5", "q25", "median", "mean", "q75", "q97.5")


def relative_bias(estimates: Sequence[float], truths: Sequence[float]) -> float:
    """mean(est - truth) / mean(truth); NaN when the mean truth is zero."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape or est.ndim != 1 or est.size == 0:
        raise ValueError("estimates and truths must be equal-length 1-D sequences")
    denom = tru.mean()
    if denom == 0:
        return float("nan")
    return float((est - tru).mean() / denom)


def relative_rmse(estimates: Sequence[float], truths: Sequence[float]) -> float:
    """sqrt(mean((est - truth)^2)) / mean(truth); NaN when the mean truth is zero."""
    est = np.asarray(estimates, dtype=float)
    tru = np.asarray(truths, dtype=float)
    if est.shape != tru.shape or est.ndim != 1 or est.size == 0:
        raise ValueError("estimates and truths must be equal-length 1-D sequences")
    denom = tru.mean()
    if denom == 0:
        return float("nan")
    return float(np.sqrt(((est - tru) ** 2).mean()) / denom)


def quartile_grouping(change_scores: Sequence[float]) -> np.ndarray:
    """Quartile label (0 = lowest .. 3 = highest) per area.

    Areas are ranked by ascending absolute change, ties broken by position,
    and split into four groups whose sizes differ by at most one; the
    earlier groups absorb the remainder, so 103 areas split 26/26/26/25.
    """
    scores = np.abs(np.asarray(change_scores, dtype=float))
    n = len(scores)
    if n < 4:
        raise ValueError("quartile grouping needs at least 4 areas")
    order = sorted(range(n), key=lambda i: (scores[i], i))
    base, rem = divmod(n, 4)
    sizes = [base + 1 if q < rem else base for q in range(4)]
    labels = np.empty(n, dtype=int)
    start = 0
    for q, size in enumerate(sizes):
        for i in order[start : start + size]:
            labels[i] = q
        start += size
    return labels


def replicate_census(truth: Composition, rng: np.random.Generator) -> Composition:
    """Redraw a census: Poisson row totals, then a multinomial split per area.

    One vectorised Poisson call over areas, then one multinomial per area
    with positive mass, in area order.  Zero-total rows stay zero.
    """
    totals = truth.counts.sum(axis=1)
    draws = rng.poisson(totals).astype(float)
    counts = np.zeros_like(truth.counts)
    for a in range(truth.n_areas):
        if totals[a] > 0 and draws[a] > 0:
            counts[a] = rng.multinomial(int(draws[a]), truth.counts[a] / totals[a])
    return Composition(truth.area_ids, truth.category_ids, counts, truth.reference_time)


def _within_large_shares(
    row_totals: np.ndarray, positions: dict[str, np.ndarray]
) -> np.ndarray:
    shares = np.zeros_like(row_totals)
    for pos in positions.values():
        block = row_totals[pos].sum()
        if block > 0:
            shares[pos] = row_totals[pos] / block
    return shares


@dataclass(frozen=True)
class SimulationPlan:
    """Inputs for one Monte Carlo comparison run.

    ``quartile_basis`` overrides the per-area change score used for
    grouping; by default it is the absolute relative change of the true
    within-region share between the two truth censuses (infinite when a
    share appears from zero).  The ``replicate_*`` and ``resample_columns``
    switches exist for exactness tests: turning them all off makes every
    round deterministic.
    """

    replicates: int
    seed: int
    truth_t0: Composition
    truth_t: Composition
    hierarchy: AreaHierarchy
    large_totals_t: MarginVector
    strategies: tuple[str, ...] = STRATEGIES
    survey_design: SurveyDesign | None = None
    aux_pool: tuple[MarginVector, ...] = ()
    quantile_cutoff: float = 0.25
    ipf_config: IpfConfig = field(default_factory=IpfConfig)
    reconcile_policy: str = "scale-col-to-row"
    quartile_basis: tuple[float, ...] | None = None
    replicate_t0: bool = True
    replicate_t: bool = True
    resample_columns: bool = True

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if (
            self.truth_t.area_ids != self.truth_t0.area_ids
            or self.truth_t.category_ids != self.truth_t0.category_ids
        ):
            raise ValueError("truth compositions must share area and category ids")
        if not self.strategies:
            raise ValueError("at least one strategy required")
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown:
            raise ValueError(f"unknown strategies: {unknown}")
        needs_aux = {"dynamic", "hybrid"} & set(self.strategies)
        if needs_aux and not self.aux_pool:
            raise ValueError("dynamic/hybrid strategies need a non-empty aux_pool")
        for m in self.aux_pool:
            if m.ids != self.truth_t0.area_ids:
                raise ValueError("aux_pool ids must match the truth area ids")
        if self.quartile_basis is not None and len(self.quartile_basis) != len(
            self.truth_t0.area_ids
        ):
            raise ValueError("quartile_basis length must match the area count")


@dataclass(frozen=True)
class StrategyMetrics:
    """Per-area accuracy of one margin strategy.

    Cell metrics follow the replicate-ratio displays (NaN where the mean
    replicate truth is zero).  Share metrics compare the estimated
    within-region shares against the true target-year shares.  Headcount
    metrics are present only for {poor, non-poor} compositions.
    """

    strategy: str
    completed: int
    failures: tuple[str, ...]
    cell_bias: np.ndarray
    cell_rmse: np.ndarray
    share_bias: np.ndarray
    share_rmse: np.ndarray
    headcount_bias: np.ndarray | None = None
    headcount_rmse: np.ndarray | None = None


@dataclass(frozen=True)
class SimulationReport:
    area_ids: tuple[str, ...]
    category_ids: tuple[str, ...]
    change_scores: np.ndarray
    quartile_labels: np.ndarray
    metrics: dict[str, StrategyMetrics]
    share_accuracy: dict[str, np.ndarray]
    quartile_summary: dict[str, dict[str, np.ndarray]]
    correlations: dict[str, np.ndarray]
    win_counts: dict[str, int]

    def quartile_areas(self, quartile: int) -> tuple[str, ...]:
        return tuple(
            a for a, q in zip(self.area_ids, self.quartile_labels) if q == quartile
        )


def _nd_bias(est: np.ndarray, tru: np.ndarray) -> np.ndarray:
    denom = tru.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (est - tru).mean(axis=0) / denom
    return np.where(denom == 0, np.nan, out)


def _nd_rmse(est: np.ndarray, tru: np.ndarray) -> np.ndarray:
    denom = tru.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.sqrt(((est - tru) ** 2).mean(axis=0)) / denom
    return np.where(denom == 0, np.nan, out)


def _headcounts(counts: np.ndarray, poor_col: int) -> np.ndarray:
    totals = counts.sum(axis=-1)
    safe = np.where(totals > 0, totals, 1.0)
    return np.where(totals > 0, counts[..., poor_col] / safe, np.nan)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if x.size < 2 or np.std(x) == 0 or np.std(y) == 0:
        return float("nan")
    return float(np.corrcoef(x, y)[0, 1])


def run_simulation(plan: SimulationPlan, threads: int = 1) -> SimulationReport:
    """Run the replication study and aggregate the comparison report.

    Rounds where a strategy's update fails are dropped for that strategy
    only and recorded in its ``failures``; the report carries the completed
    count per strategy.
    """
    h = plan.hierarchy
    area_ids = plan.truth_t0.area_ids
    category_ids = plan.truth_t0.category_ids
    positions = h.group_positions(area_ids)
    t_time = plan.truth_t.reference_time

    rows_t0 = row_margins(plan.truth_t0).values
    rows_t = row_margins(plan.truth_t).values
    shares_t0 = _within_large_shares(rows_t0, positions)
    shares_t = _within_large_shares(rows_t, positions)

    if plan.quartile_basis is not None:
        change_scores = np.abs(np.asarray(plan.quartile_basis, dtype=float))
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(shares_t0 > 0, shares_t / np.where(shares_t0 > 0, shares_t0, 1.0), np.inf)
        change_scores = np.abs(ratio - 1.0)
        change_scores[(shares_t0 == 0) & (shares_t == 0)] = 0.0
    labels = quartile_grouping(change_scores)

    selection = None
    if "hybrid" in plan.strategies:
        baseline_large = MarginVector(
            h.large_ids,
            aggregate_to_large(plan.truth_t0, h).counts.sum(axis=1),
            MarginLevel.LARGE_AREA,
            plan.truth_t0.reference_time,
        )
        selection = select_by_change(
            plan.large_totals_t, baseline_large, plan.quantile_cutoff
        )

    def build_shares(strategy: str, census0: Composition, r: int) -> ShareVector:
        if strategy == "fixed":
            return fixed_shares(census0, h)
        aux = plan.aux_pool[r % len(plan.aux_pool)]
        if strategy == "dynamic":
            return dynamic_shares(aux, h)
        return hybrid_shares(fixed_shares(census0, h), dynamic_shares(aux, h), selection)

    def one_round(r: int):
        rng = rngmod.stream(plan.seed, r)
        census0 = replicate_census(plan.truth_t0, rng) if plan.replicate_t0 else plan.truth_t0
        census_t = replicate_census(plan.truth_t, rng) if plan.replicate_t else plan.truth_t
        if plan.survey_design is not None:
            if plan.resample_columns:
                col = resample_column_margin(plan.survey_design, rng, t_time)
            else:
                col = plan.survey_design.point_margin(t_time)
        else:
            col = MarginVector(
                category_ids, column_margins(census_t).values, MarginLevel.CATEGORY, t_time
            )
        outcomes: dict[str, tuple[np.ndarray, np.ndarray] | str] = {}
        for strategy in plan.strategies:
            try:
                sv = build_shares(strategy, census0, r)
                req = UpdateRequest(
                    seed=census0,
                    col_margin=col,
                    large_totals=plan.large_totals_t,
                    shares=sv,
                    ipf_config=plan.ipf_config,
                    reconcile_policy=plan.reconcile_policy,
                )
                res = spree_update(req)
                outcomes[strategy] = (res.fitted.counts, np.asarray(sv.shares, dtype=float))
            except (UpdateError, ValueError) as e:
                outcomes[strategy] = f"replicate {r}: {e}"
        return census_t.counts, outcomes

    indices = range(plan.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rounds = list(pool.map(one_round, indices))
    else:
        rounds = [one_round(r) for r in indices]

    truth_cells = np.stack([t for t, _ in rounds])
    poor_col = (
        category_ids.index("poor")
        if set(category_ids) == set(POVERTY_CATEGORIES)
        else None
    )

    metrics: dict[str, StrategyMetrics] = {}
    share_accuracy: dict[str, np.ndarray] = {}
    quartile_summary: dict[str, dict[str, np.ndarray]] = {}
    correlations: dict[str, np.ndarray] = {}
    est_h_by_strategy: dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    for strategy in plan.strategies:
        ok = [r for r in indices if not isinstance(rounds[r][1][strategy], str)]
        failures = tuple(
            o for _, out in rounds if isinstance(o := out[strategy], str)
        )
        if not ok:
            A, J = len(area_ids), len(category_ids)
            nanA = np.full(A, np.nan)
            metrics[strategy] = StrategyMetrics(
                strategy, 0, failures, np.full((A, J), np.nan), np.full((A, J), np.nan),
                nanA.copy(), nanA.copy(),
                nanA.copy() if poor_col is not None else None,
                nanA.copy() if poor_col is not None else None,
            )
            share_accuracy[strategy] = np.full(4, np.nan)
            quartile_summary[strategy] = {
                "bias": np.full((4, 6), np.nan),
                "rmse": np.full((4, 6), np.nan),
            }
            correlations[strategy] = np.full(4, np.nan)
            continue

        est_cells = np.stack([rounds[r][1][strategy][0] for r in ok])
        est_shares = np.stack([rounds[r][1][strategy][1] for r in ok])
        tru_cells = truth_cells[ok]

        cell_bias = _nd_bias(est_cells, tru_cells)
        cell_rmse = _nd_rmse(est_cells, tru_cells)
        tru_shares = np.broadcast_to(shares_t, est_shares.shape)
        share_bias = _nd_bias(est_shares, tru_shares)
        share_rmse = _nd_rmse(est_shares, tru_shares)

        headcount_bias = headcount_rmse = None
        if poor_col is not None:
            est_h = _headcounts(est_cells, poor_col)
            tru_h = _headcounts(tru_cells, poor_col)
            headcount_bias = _nd_bias(est_h, tru_h)
            headcount_rmse = _nd_rmse(est_h, tru_h)
            est_h_by_strategy[strategy] = (est_h, tru_h, np.asarray(ok))
        else:
            est_h_by_strategy[strategy] = (
                est_cells.sum(axis=2),
                tru_cells.sum(axis=2),
                np.asarray(ok),
            )

        metrics[strategy] = StrategyMetrics(
            strategy, len(ok), failures, cell_bias, cell_rmse,
            share_bias, share_rmse, headcount_bias, headcount_rmse,
        )

        share_accuracy[strategy] = np.asarray(
            [np.nanmean(share_bias[labels == q]) for q in range(4)]
        )

        per_area_bias = headcount_bias if headcount_bias is not None else np.nanmean(cell_bias, axis=1)
        per_area_rmse = headcount_rmse if headcount_rmse is not None else np.nanmean(cell_rmse, axis=1)
        summary = {}
        for name, values in (("bias", per_area_bias), ("rmse", per_area_rmse)):
            table = np.full((4, 6), np.nan)
            for q in range(4):
                vals = values[labels == q]
                vals = vals[~np.isnan(vals)]
                if vals.size:
                    qs = np.quantile(vals, [0.025, 0.25, 0.5, 0.75, 0.975])
                    table[q] = [qs[0], qs[1], qs[2], vals.mean(), qs[3], qs[4]]
            summary[name] = table
        quartile_summary[strategy] = summary

        est_h, tru_h, _ = est_h_by_strategy[strategy]
        corr = np.full(4, np.nan)
        for q in range(4):
            mask = labels == q
            per_rep = [
                c
                for r in range(len(ok))
                if not np.isnan(c := _pearson(est_h[r][mask], tru_h[r][mask]))
            ]
            corr[q] = float(np.mean(per_rep)) if per_rep else float("nan")
        correlations[strategy] = corr

    win_counts = {s: 0 for s in plan.strategies}
    abs_share = {
        s: np.abs(metrics[s].share_bias) for s in plan.strategies
    }
    for a in range(len(area_ids)):
        best = None
        for s in plan.strategies:
            v = abs_share[s][a]
            if np.isnan(v):
                continue
            if best is None or v < abs_share[best][a]:
                best = s
        if best is not None:
            win_counts[best] += 1

    return SimulationReport(
        area_ids,
        category_ids,
        change_scores,
        labels,
        metrics,
        share_accuracy,
        quartile_summary,
        correlations,
        win_counts,
    )
