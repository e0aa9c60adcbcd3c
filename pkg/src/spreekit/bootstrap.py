"""Mixed semiparametric bootstrap for cell-level MSE and CV.

Per replicate, the census composition is re-drawn (Poisson row totals, then
a multinomial split within each area), the row margin is resampled from the
auxiliary side, the column margin is resampled from the survey design, and
the update is re-run on the replicate composition.  The cell MSE is the mean
squared difference between the re-updated replicate and the replicate
composition it was raked from.

Replicate b draws from RNG stream b (see :mod:`spreekit.rng`), in this fixed
order, which independent re-implementations must follow to reproduce runs:

1. Poisson row totals: one vectorised ``rng.poisson`` over areas.
2. Multinomial split: one ``rng.multinomial`` per area with positive
   probability mass, in area order (zero-mass areas draw nothing).
3. Auxiliary row margin: one ``rng.integers(0, len(pool))`` when a replicate
   pool is supplied, else one vectorised ``rng.lognormal`` over areas for
   the labelled perturbation fallback.
4. Column margin: under ``psu-cluster``, one ``rng.integers(0, n, size=n)``
   per stratum in first-appearance order (PSUs within a stratum in
   first-appearance order); under ``iid-category``, a single
   ``rng.integers(0, n_obs, size=n_obs)`` over observations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from spreekit import rng as rngmod
from spreekit.composition import (
    Composition,
    MarginLevel,
    MarginVector,
    to_probabilities,
)
from spreekit.ipf import IpfError, ipf_fit
from spreekit.margins import reconcile_margins
from spreekit.mpi import POVERTY_CATEGORIES
from spreekit.update import UpdateRequest, spree_update

ColResample = Literal["psu-cluster", "iid-category", "none"]
AuxResample = Literal["resample-pool", "none"]

QUANTILE_LABELS = ("q2.5", "q25", "median", "q75", "q97.5")
QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


class BootstrapError(RuntimeError):
    pass


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, master seed, and resampling switches.

    ``poisson_mode`` / ``multinomial_mode`` set to ``"mean"`` replace the
    census replication draws by their expectation; together with
    ``aux_resample="none"``, ``aux_perturb_cv=0`` and ``col_resample="none"``
    every noise source is degenerate and the MSE is exactly zero, which
    anchors the formula tests.
    """

    replicates: int = 100
    seed: int = 0
    col_resample: ColResample = "psu-cluster"
    aux_resample: AuxResample = "resample-pool"
    aux_perturb_cv: float = 0.05
    poisson_mode: Literal["sample", "mean"] = "sample"
    multinomial_mode: Literal["sample", "mean"] = "sample"
    max_dropped_fraction: float = 0.10

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.aux_perturb_cv < 0:
            raise ValueError("aux_perturb_cv must be >= 0")

    @property
    def fully_degenerate(self) -> bool:
        return (
            self.poisson_mode == "mean"
            and self.multinomial_mode == "mean"
            and self.aux_resample == "none"
            and self.col_resample == "none"
        )


@dataclass(frozen=True)
class SurveyDesign:
    """Per-observation survey records feeding the column margin.

    Each observation contributes ``weight * value`` to its category's total.
    Strata and PSUs keep first-appearance order; resampling draws PSUs with
    replacement within each stratum, keeping the per-stratum PSU count.
    """

    psu: np.ndarray
    stratum: np.ndarray
    weight: np.ndarray
    category: np.ndarray
    value: np.ndarray
    category_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        psu = np.asarray(self.psu, dtype=object)
        stratum = np.asarray(self.stratum, dtype=object)
        category = np.asarray(self.category, dtype=object)
        weight = np.asarray(self.weight, dtype=float)
        value = np.asarray(self.value, dtype=float)
        n = len(psu)
        if not (len(stratum) == len(category) == len(weight) == len(value) == n):
            raise ValueError("design arrays must have equal length")
        if n == 0:
            raise ValueError("empty survey design")
        if np.any(weight <= 0):
            raise ValueError("design weights must be positive")
        if np.any(value < 0) or not np.all(np.isfinite(value)):
            raise ValueError("design values must be finite and non-negative")

        if self.category_ids:
            cat_ids = tuple(str(c) for c in self.category_ids)
            unknown = sorted({str(c) for c in category} - set(cat_ids))
            if unknown:
                raise ValueError(f"design categories not in category_ids: {unknown}")
        else:
            cat_ids = tuple(dict.fromkeys(str(c) for c in category))
        cat_pos = {c: i for i, c in enumerate(cat_ids)}

        strata = tuple(dict.fromkeys(str(s) for s in stratum))
        psu_keys: list[tuple[str, str]] = list(
            dict.fromkeys(zip((str(s) for s in stratum), (str(p) for p in psu)))
        )
        psu_pos = {k: i for i, k in enumerate(psu_keys)}
        totals = np.zeros((len(psu_keys), len(cat_ids)))
        for i in range(n):
            key = (str(stratum[i]), str(psu[i]))
            totals[psu_pos[key], cat_pos[str(category[i])]] += weight[i] * value[i]
        psus_by_stratum = {
            s: np.asarray([i for i, (ss, _) in enumerate(psu_keys) if ss == s], dtype=int)
            for s in strata
        }
        for s, rows in psus_by_stratum.items():
            if rows.size == 0:
                raise ValueError(f"stratum {s!r} has no PSUs")

        object.__setattr__(self, "psu", psu)
        object.__setattr__(self, "stratum", stratum)
        object.__setattr__(self, "category", category)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "category_ids", cat_ids)
        object.__setattr__(self, "_strata", strata)
        object.__setattr__(self, "_psu_totals", totals)
        object.__setattr__(self, "_psus_by_stratum", psus_by_stratum)

    @property
    def strata(self) -> tuple[str, ...]:
        return self._strata  # type: ignore[attr-defined]

    def psu_totals(self) -> np.ndarray:
        """Per-PSU weighted category totals, PSUs in first-appearance order."""
        return self._psu_totals.copy()  # type: ignore[attr-defined]

    def point_margin(self, reference_time: int = 0) -> MarginVector:
        """Weighted category totals without any resampling."""
        totals = self._psu_totals.sum(axis=0)  # type: ignore[attr-defined]
        return MarginVector(self.category_ids, totals, MarginLevel.CATEGORY, reference_time)


def resample_column_margin(
    design: SurveyDesign, rng: np.random.Generator, reference_time: int = 0
) -> MarginVector:
    """Column margin from PSUs redrawn with replacement within strata."""
    totals = np.zeros(len(design.category_ids))
    psu_totals = design._psu_totals  # type: ignore[attr-defined]
    for s in design.strata:
        rows = design._psus_by_stratum[s]  # type: ignore[attr-defined]
        chosen = rng.integers(0, rows.size, size=rows.size)
        totals += psu_totals[rows[chosen]].sum(axis=0)
    return MarginVector(design.category_ids, totals, MarginLevel.CATEGORY, reference_time)


def _resample_iid(
    design: SurveyDesign, rng: np.random.Generator, reference_time: int = 0
) -> MarginVector:
    """Observation-level resample, ignoring the cluster structure."""
    n = len(design.weight)
    chosen = rng.integers(0, n, size=n)
    totals = np.zeros(len(design.category_ids))
    cat_pos = {c: i for i, c in enumerate(design.category_ids)}
    for i in chosen:
        totals[cat_pos[str(design.category[i])]] += design.weight[i] * design.value[i]
    return MarginVector(design.category_ids, totals, MarginLevel.CATEGORY, reference_time)


def resample_aux_margin(
    pool: Sequence[MarginVector] | MarginVector,
    rng: np.random.Generator,
    perturb_cv: float = 0.05,
) -> MarginVector:
    """Replicate of the auxiliary-based row margin.

    A pool of pre-generated replicate margins is sampled uniformly.  Given
    only a single vector there is nothing to resample from, so an area-level
    multiplicative lognormal perturbation with unit mean and the given CV is
    applied instead; this fallback is a pragmatic stand-in, not a resampling
    scheme, and ``perturb_cv=0`` returns the vector unchanged.
    """
    if isinstance(pool, MarginVector):
        if perturb_cv == 0:
            return pool
        sigma = math.sqrt(math.log(1.0 + perturb_cv**2))
        factors = rng.lognormal(mean=-0.5 * sigma**2, sigma=sigma, size=len(pool.ids))
        return pool.with_values(pool.values * factors)
    if len(pool) == 0:
        raise ValueError("empty auxiliary pool")
    return pool[int(rng.integers(0, len(pool)))]


@dataclass(frozen=True)
class CellUncertainty:
    """Per-cell MSE/CV plus replicate summaries.

    CV is reported only where the point estimate is strictly positive (NaN
    elsewhere).  When the composition categories are {poor, non-poor} the
    per-area headcount-ratio uncertainty is filled in as well.
    """

    area_ids: tuple[str, ...]
    category_ids: tuple[str, ...]
    point: np.ndarray
    mse: np.ndarray
    cv: np.ndarray
    rep_mean: np.ndarray
    rep_quantiles: dict[str, np.ndarray]
    completed_replicates: int
    dropped_replicates: int
    drop_reasons: tuple[str, ...]
    headcount_point: np.ndarray | None = None
    headcount_mse: np.ndarray | None = None
    headcount_cv: np.ndarray | None = None


def _headcount(counts: np.ndarray, poor_col: int) -> np.ndarray:
    totals = counts.sum(axis=1)
    return np.where(totals > 0, counts[:, poor_col] / np.where(totals > 0, totals, 1.0), np.nan)


def bootstrap_mse(
    req: UpdateRequest,
    design: SurveyDesign | None,
    aux_pool: Sequence[MarginVector] | None = None,
    cfg: BootstrapConfig = BootstrapConfig(),
    threads: int = 1,
) -> CellUncertainty:
    """Bootstrap the update in ``req`` and estimate per-cell MSE and CV.

    Requires a converged point estimate.  Replicates whose raking fails
    (for example a replicate row drawn to zero against a positive target)
    are dropped and counted; more than ``cfg.max_dropped_fraction`` dropped
    aborts the run.  The MSE divisor is the completed replicate count.
    """
    point = spree_update(req)
    if not point.ipf.converged:
        raise BootstrapError("point estimate did not converge; cannot bootstrap")
    fitted = point.fitted.counts
    area_ids = point.fitted.area_ids
    category_ids = point.fitted.category_ids
    lam = point.row_margin_used.values
    probs = to_probabilities(point.fitted).probs
    row_mass = fitted.sum(axis=1)

    if cfg.col_resample != "none":
        if design is None:
            raise BootstrapError("survey design required unless col_resample='none'")
        if design.category_ids != category_ids:
            raise BootstrapError(
                "survey design categories do not match the composition categories"
            )
    if cfg.aux_resample == "resample-pool" and aux_pool:
        for m in aux_pool:
            if m.ids != area_ids:
                raise BootstrapError("auxiliary pool ids do not match the seed areas")

    t = point.row_margin_used.reference_time

    def one_replicate(b: int) -> tuple[np.ndarray, np.ndarray] | str:
        rng = rngmod.stream(cfg.seed, b)

        if cfg.fully_degenerate:
            # Zero-variance limit: the replicate composition is the point
            # composition and the margins are its own realised margins, so
            # raking is an exact no-op and the MSE vanishes identically.
            mult = fitted.copy()
            row_values = mult.sum(axis=1)
            col_values = mult.sum(axis=0)
        else:
            if cfg.poisson_mode == "sample":
                pois = rng.poisson(lam).astype(float)
            else:
                pois = row_mass.copy()
            if cfg.multinomial_mode == "sample":
                mult = np.zeros_like(fitted)
                for a in range(len(area_ids)):
                    if row_mass[a] > 0 and pois[a] > 0:
                        mult[a] = rng.multinomial(int(round(pois[a])), probs[a])
            else:
                mult = pois[:, None] * probs

            if cfg.aux_resample == "resample-pool":
                if aux_pool:
                    drawn = resample_aux_margin(list(aux_pool), rng)
                else:
                    drawn = resample_aux_margin(
                        point.row_margin_used, rng, cfg.aux_perturb_cv
                    )
                row_values = drawn.values
            else:
                row_values = lam
            if cfg.col_resample == "psu-cluster":
                col_values = resample_column_margin(design, rng, t).values
            elif cfg.col_resample == "iid-category":
                col_values = _resample_iid(design, rng, t).values
            else:
                col_values = point.col_margin_used.values

        row_m = MarginVector(area_ids, row_values, MarginLevel.SMALL_AREA, t)
        col_m = MarginVector(category_ids, col_values, MarginLevel.CATEGORY, t)
        try:
            row_m, col_m, _ = reconcile_margins(row_m, col_m, req.reconcile_policy)
            seed_b = Composition(area_ids, category_ids, mult, t)
            res = ipf_fit(seed_b, row_m, col_m, req.ipf_config)
        except (IpfError, ValueError) as e:
            return f"replicate {b}: {e}"
        if not res.converged:
            return f"replicate {b}: did not converge (deviation {res.final_deviation:.3e})"
        return res.fitted.counts, mult

    indices = range(cfg.replicates)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            outcomes = list(pool_exec.map(one_replicate, indices))
    else:
        outcomes = [one_replicate(b) for b in indices]

    reasons = tuple(o for o in outcomes if isinstance(o, str))
    pairs = [o for o in outcomes if not isinstance(o, str)]
    dropped = len(reasons)
    if dropped > cfg.max_dropped_fraction * cfg.replicates:
        detail = "; ".join(reasons[:5])
        raise BootstrapError(
            f"{dropped}/{cfg.replicates} replicates dropped (limit "
            f"{cfg.max_dropped_fraction:.0%}): {detail}"
        )

    fitted_reps = np.stack([p[0] for p in pairs])
    mult_reps = np.stack([p[1] for p in pairs])
    diff = fitted_reps - mult_reps
    mse = (diff**2).sum(axis=0) / len(pairs)
    cv = np.where(fitted > 0, np.sqrt(mse) / np.where(fitted > 0, fitted, 1.0), np.nan)
    rep_mean = fitted_reps.mean(axis=0)
    rep_quantiles = {
        label: np.quantile(fitted_reps, q, axis=0)
        for label, q in zip(QUANTILE_LABELS, QUANTILE_LEVELS)
    }

    headcount_point = headcount_mse = headcount_cv = None
    if set(category_ids) == set(POVERTY_CATEGORIES):
        poor_col = category_ids.index("poor")
        headcount_point = _headcount(fitted, poor_col)
        h_fit = np.stack([_headcount(p[0], poor_col) for p in pairs])
        h_mult = np.stack([_headcount(p[1], poor_col) for p in pairs])
        h_diff = h_fit - h_mult
        with np.errstate(invalid="ignore"):
            headcount_mse = np.nanmean(h_diff**2, axis=0)
            headcount_cv = np.where(
                headcount_point > 0,
                np.sqrt(headcount_mse) / np.where(headcount_point > 0, headcount_point, 1.0),
                np.nan,
            )

    return CellUncertainty(
        area_ids,
        category_ids,
        fitted.copy(),
        mse,
        cv,
        rep_mean,
        rep_quantiles,
        len(pairs),
        dropped,
        reasons,
        headcount_point,
        headcount_mse,
        headcount_cv,
    )
