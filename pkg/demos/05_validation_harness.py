"""
Design-based comparison of the share strategies
===============================================

Builds a synthetic world where one region grows much faster than the
others (a migration shock), then repeatedly simulates the whole
pipeline against known truth: draw a census, update it with each share
strategy, and score the estimates.  The question the harness answers is
where dynamic auxiliary shares beat frozen census shares.
"""

import numpy as np

from spreekit import build_scenario, migration_shock_config, run_simulation

# The shipped scenario: 3 regions of 4 areas, one region growing 9% a
# year, auxiliary populations observed with 10% noise and a small bias.
# Replicates are reduced here so the demo runs in a couple of seconds;
# the release gate runs the full 500.
cfg = migration_shock_config(replicates=60, seed=20250823)
plan = build_scenario(cfg)
print(f"areas: {len(plan.truth_t0.area_ids)}  replicates: {plan.replicates}")

report = run_simulation(plan)

# Areas are grouped into quartiles of true share change; quartile 3
# holds the shock region's fast movers.
print("\nmean |relative bias| of population shares (%) by change quartile:")
header = "  ".join(f"Q{q}" for q in range(4))
print(f"  {'strategy':<8} {header}")
for strategy, m in report.metrics.items():
    cells = []
    for q in range(4):
        mask = report.quartile_labels == q
        cells.append(f"{100 * np.nanmean(np.abs(m.share_bias[mask])):5.2f}")
    print(f"  {strategy:<8} " + "  ".join(cells))

# Per-area winner counts: the strategy with the smallest |share bias|.
print("\nareas won by strategy:", report.win_counts)
print("\nreading: fixed shares stay accurate where nothing moves, but miss")
print("the shock region badly; dynamic shares pay a noise premium in calm")
print("regions and win where the change is concentrated.")
