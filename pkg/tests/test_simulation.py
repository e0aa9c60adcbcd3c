import math

import numpy as np
import pytest

from spreekit import (
    MarginLevel,
    MarginVector,
    SimulationPlan,
    aggregate_to_large,
    build_scenario,
    column_margins,
    migration_shock_config,
    quartile_grouping,
    relative_bias,
    relative_rmse,
    replicate_census,
    row_margins,
    run_simulation,
)
from spreekit import rng as rngmod
from spreekit.scenario import ScenarioConfig

from conftest import make_composition, two_region_hierarchy


class TestMetricFormulas:
    def test_relative_bias_direct_formula(self):
        rng = np.random.default_rng(51)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            est = rng.normal(10.0, 3.0, size=n)
            tru = rng.uniform(1.0, 20.0, size=n)
            want = (est - tru).mean() / tru.mean()
            assert relative_bias(est, tru) == pytest.approx(want, abs=1e-12)

    def test_relative_rmse_direct_formula(self):
        rng = np.random.default_rng(52)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            est = rng.normal(10.0, 3.0, size=n)
            tru = rng.uniform(1.0, 20.0, size=n)
            want = math.sqrt(((est - tru) ** 2).mean()) / tru.mean()
            assert relative_rmse(est, tru) == pytest.approx(want, abs=1e-12)

    def test_rmse_dominates_abs_bias(self):
        rng = np.random.default_rng(53)
        for _ in range(300):
            n = int(rng.integers(2, 20))
            est = rng.normal(5.0, 2.0, size=n)
            tru = rng.uniform(0.5, 9.0, size=n)
            assert relative_rmse(est, tru) >= abs(relative_bias(est, tru)) - 1e-15

    def test_zero_mean_truth_gives_nan(self):
        assert math.isnan(relative_bias([1.0, 2.0], [0.0, 0.0]))
        assert math.isnan(relative_rmse([1.0, 2.0], [0.0, 0.0]))

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            relative_bias([1.0], [1.0, 2.0])
        with pytest.raises(ValueError):
            relative_rmse([], [])


class TestQuartileGrouping:
    def test_even_split(self):
        labels = quartile_grouping([0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.4, 0.6])
        assert labels.tolist() == [0, 3, 0, 3, 1, 2, 1, 2]

    def test_remainder_goes_to_earlier_groups(self):
        labels = quartile_grouping(list(range(103)))
        sizes = [int((labels == q).sum()) for q in range(4)]
        assert sizes == [26, 26, 26, 25]
        # Ascending: the largest scores land in the top group.
        assert labels[102] == 3
        assert labels[0] == 0

    def test_five_areas(self):
        labels = quartile_grouping([5.0, 1.0, 2.0, 3.0, 4.0])
        sizes = [int((labels == q).sum()) for q in range(4)]
        assert sizes == [2, 1, 1, 1]
        assert labels[1] == 0 and labels[2] == 0  # two smallest share group 0
        assert labels[0] == 3

    def test_absolute_value_and_ties(self):
        # Signs are ignored; exact ties resolve by position order.
        labels = quartile_grouping([-0.5, 0.5, -0.1, 0.1])
        assert labels.tolist() == [2, 3, 0, 1]

    def test_too_few_areas(self):
        with pytest.raises(ValueError, match="at least 4"):
            quartile_grouping([1.0, 2.0, 3.0])


class TestReplicateCensus:
    def test_zero_rows_stay_zero(self):
        truth = make_composition([[0.0, 0.0], [50.0, 50.0]])
        rep = replicate_census(truth, rngmod.stream(0, 0))
        assert np.all(rep.counts[0] == 0.0)
        assert rep.counts[1].sum() > 0

    def test_row_totals_are_poisson_with_truth_mean(self):
        truth = make_composition([[600.0, 400.0]])
        totals = [
            replicate_census(truth, rngmod.stream(1, b)).counts.sum()
            for b in range(400)
        ]
        # Poisson(1000): mean 1000, sd sqrt(1000); 3 sigma over 400 draws.
        assert np.mean(totals) == pytest.approx(1000.0, abs=3 * math.sqrt(1000 / 400))

    def test_composition_follows_truth_probabilities(self):
        truth = make_composition([[600.0, 400.0]])
        poor = [
            replicate_census(truth, rngmod.stream(2, b)).counts[0, 0]
            for b in range(400)
        ]
        sd = math.sqrt(1000 * 0.6 * 0.4 + 0.36 * 1000)  # multinomial + Poisson
        assert np.mean(poor) == pytest.approx(600.0, abs=3 * sd / math.sqrt(400))

    def test_stream_reproducibility(self):
        truth = make_composition([[600.0, 400.0], [30.0, 70.0]])
        a = replicate_census(truth, rngmod.stream(3, 7))
        b = replicate_census(truth, rngmod.stream(3, 7))
        np.testing.assert_array_equal(a.counts, b.counts)


def deterministic_plan(**overrides):
    """All randomness off, target truth equals base truth: every strategy
    reconstructs the truth and all error metrics vanish."""
    from spreekit import Composition

    truth = Composition(
        ("a1", "a2", "a3", "a4"),
        ("poor", "non-poor"),
        [[400.0, 600.0], [300.0, 700.0], [550.0, 450.0], [200.0, 800.0]],
    )
    h = two_region_hierarchy(4)
    large = aggregate_to_large(truth, h)
    totals = MarginVector(
        large.area_ids, large.counts.sum(axis=1), MarginLevel.LARGE_AREA, 0
    )
    kw = dict(
        replicates=3,
        seed=0,
        truth_t0=truth,
        truth_t=truth,
        hierarchy=h,
        large_totals_t=totals,
        strategies=("fixed", "dynamic"),
        aux_pool=(row_margins(truth),),
        replicate_t0=False,
        replicate_t=False,
        resample_columns=False,
    )
    kw.update(overrides)
    return SimulationPlan(**kw)


class TestRunSimulation:
    def test_deterministic_self_update_has_zero_error(self):
        rep = run_simulation(deterministic_plan())
        for s in ("fixed", "dynamic"):
            m = rep.metrics[s]
            assert m.completed == 3
            assert np.all(np.abs(m.cell_bias) < 1e-8)
            assert np.all(np.abs(m.cell_rmse) < 1e-8)
            assert np.all(np.abs(m.share_bias) < 1e-12)
            assert np.all(np.abs(m.headcount_bias) < 1e-8)

    def test_exact_aux_pool_zeroes_dynamic_share_error(self):
        cfg = ScenarioConfig(replicates=6, aux_exact=True, seed=4)
        rep = run_simulation(build_scenario(cfg))
        m = rep.metrics["dynamic"]
        assert np.all(m.share_bias == 0.0)
        assert np.all(m.share_rmse == 0.0)
        assert np.all(rep.share_accuracy["dynamic"] == 0.0)
        assert np.any(rep.metrics["fixed"].share_bias != 0.0)

    def test_migration_shock_regression_values(self):
        rep = run_simulation(build_scenario(migration_shock_config(replicates=8)))
        assert rep.quartile_labels.tolist() == [1, 1, 0, 0, 2, 2, 0, 1, 3, 3, 3, 2]
        assert rep.win_counts == {"fixed": 9, "dynamic": 3, "hybrid": 0}
        assert {s: m.completed for s, m in rep.metrics.items()} == {
            "fixed": 8, "dynamic": 8, "hybrid": 8,
        }
        # The shock region R3 dominates the top quartile.
        assert rep.quartile_areas(3) == ("R3-A1", "R3-A2", "R3-A3")

    def test_report_shapes_and_ranges(self):
        rep = run_simulation(build_scenario(migration_shock_config(replicates=6)))
        for s, m in rep.metrics.items():
            assert m.cell_bias.shape == (12, 2)
            assert m.share_bias.shape == (12,)
            assert np.all(m.cell_rmse[np.isfinite(m.cell_rmse)] >= 0)
            assert rep.share_accuracy[s].shape == (4,)
            for table in rep.quartile_summary[s].values():
                assert table.shape == (4, 6)
                # Columns q2.5, q25, median, q75, q97.5 are ordered.
                quant = table[:, [0, 1, 2, 4, 5]]
                assert np.all(np.diff(quant, axis=1) >= -1e-12)
            corr = rep.correlations[s]
            finite = corr[np.isfinite(corr)]
            assert np.all(finite >= -1.0) and np.all(finite <= 1.0)

    def test_failing_strategy_is_isolated(self):
        # A zero-region auxiliary margin makes dynamic shares undefined in
        # every round; fixed must be unaffected.
        bad_aux = MarginVector(
            ("a1", "a2", "a3", "a4"),
            np.array([0.0, 0.0, 10.0, 30.0]),
            MarginLevel.SMALL_AREA,
        )
        rep = run_simulation(deterministic_plan(aux_pool=(bad_aux,)))
        assert rep.metrics["dynamic"].completed == 0
        assert len(rep.metrics["dynamic"].failures) == 3
        assert np.all(np.isnan(rep.metrics["dynamic"].cell_bias))
        assert rep.metrics["fixed"].completed == 3
        assert rep.win_counts == {"fixed": 4, "dynamic": 0}

    def test_threads_do_not_change_results(self):
        plan = build_scenario(migration_shock_config(replicates=6))
        serial = run_simulation(plan, threads=1)
        parallel = run_simulation(plan, threads=3)
        for s in plan.strategies:
            np.testing.assert_array_equal(
                serial.metrics[s].cell_bias, parallel.metrics[s].cell_bias
            )
            np.testing.assert_array_equal(
                serial.metrics[s].share_rmse, parallel.metrics[s].share_rmse
            )
        assert serial.win_counts == parallel.win_counts

    def test_plan_validation(self):
        truth = make_composition([[1.0, 2.0], [3.0, 4.0]])
        h = two_region_hierarchy(2)
        totals = MarginVector(("g1", "g2"), np.array([3.0, 7.0]),
                              MarginLevel.LARGE_AREA)
        with pytest.raises(ValueError, match="aux_pool"):
            SimulationPlan(
                replicates=1, seed=0, truth_t0=truth, truth_t=truth,
                hierarchy=h, large_totals_t=totals,
                strategies=("dynamic",), aux_pool=(),
            )
        with pytest.raises(ValueError, match="unknown strategies"):
            SimulationPlan(
                replicates=1, seed=0, truth_t0=truth, truth_t=truth,
                hierarchy=h, large_totals_t=totals, strategies=("zigzag",),
            )
        with pytest.raises(ValueError, match="replicates"):
            SimulationPlan(
                replicates=0, seed=0, truth_t0=truth, truth_t=truth,
                hierarchy=h, large_totals_t=totals, strategies=("fixed",),
            )
