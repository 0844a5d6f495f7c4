"""Minimum load shedding after corridor outages.

    python demos/load_shedding.py
"""

from typhoon_resilience.grid_case import bundled_case
from typhoon_resilience.load_shed import LoadShedModel

toy = LoadShedModel(bundled_case("toy3"))
for failed in [(), (3,), (1,), (2, 3)]:
    sol = toy.solve(failed)
    print(f"toy3 without {list(failed) or 'nothing'}: shed {sol.total:.1f} MW, binding {sol.binding or '-'}")

rts = LoadShedModel(bundled_case("rts79"))
print(f"\nRTS-79 intact: shed {rts.solve().total:.2f} MW")
worst = max(((c,) for c in bundled_case("rts79").corridor_ids), key=lambda s: rts.solve(s).total)
print(f"worst single outage {worst}: {rts.solve(worst).total:.2f} MW")
for pair in [(5, 10), (3, 9), (19, 23), (11, 13)]:
    sol = rts.solve(pair)
    print(f"corridors {pair} out: {len(sol.islands)} island(s), shed {sol.total:.2f} MW")
