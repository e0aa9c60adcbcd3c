"""
Fixed, dynamic, and hybrid allocation shares
============================================

Regional projections give one total per region; shares decide how that
total is split across the region's areas.  Three strategies ship:

* fixed    - each area keeps its census share of the region,
* dynamic  - shares follow an auxiliary population source (for example
             a building-footprint estimate), so recent shifts register,
* hybrid   - dynamic only in the regions with the strongest projected
             change, fixed everywhere else.
"""

from pathlib import Path

from spreekit import (
    MarginLevel,
    MarginVector,
    distribute,
    dynamic_shares,
    fixed_shares,
    hybrid_shares,
    select_by_change,
)
from spreekit import io as sio

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
MINI = FIXTURES / "mini"

census = sio.load_composition(MINI / "census2002.csv")
hierarchy = sio.load_hierarchy(MINI / "hierarchy.csv")
aux = sio.load_aux_populations(MINI / "aux.csv")[2013]
totals = sio.load_projections(MINI / "projections.csv")[2013]

fixed = fixed_shares(census, hierarchy)
dynamic = dynamic_shares(aux, hierarchy)

# Hybrid selection: rank regions by |projected/baseline - 1| and take the
# top quarter (at least one region).
baseline = MarginVector(
    totals.ids,
    [sum(census.counts[i].sum()
         for i, a in enumerate(census.area_ids)
         if hierarchy.large_of(a) == region)
     for region in totals.ids],
    MarginLevel.LARGE_AREA,
    census.reference_time,
)
selection = select_by_change(totals, baseline)
hybrid = hybrid_shares(fixed, dynamic, selection)
print("regions ranked by projected change:",
      {k: round(v, 4) for k, v in selection.change_scores.items()})
print("dynamic-share regions:", selection.selected_large_ids)

print("\nshares by strategy:")
print(f"  {'area':<6} {'fixed':>8} {'dynamic':>8} {'hybrid':>8}")
for i, area in enumerate(fixed.small_ids):
    print(f"  {area:<6} {fixed.shares[i]:8.4f} "
          f"{dynamic.shares[i]:8.4f} {hybrid.shares[i]:8.4f}")

# Whatever the strategy, distributing a regional total conserves it
# exactly: the area values of one region sum back to the region total.
for name, sv in (("fixed", fixed), ("dynamic", dynamic), ("hybrid", hybrid)):
    margin = distribute(totals, sv)
    print(f"\n{name} row margin:",
          {a: round(float(v), 2) for a, v in zip(margin.ids, margin.values)})
