"""Walk a typhoon across the bundled coastal RTS-79 network.

Prints the storm's decay along its track, the wind reaching each corridor
midpoint, and the corridors most likely to fail when the storm passes.

    python demos/storm_over_grid.py
"""

import numpy as np

from typhoon_resilience.failure_model import UnitTable, scenario_failure_profile
from typhoon_resilience.grid_case import TerrainGrid, bundled_case, bundled_path
from typhoon_resilience.typhoon_field import load_typhoon, simulation_times, storm_state, wind_series

case = bundled_case("rts79")
storm = load_typhoon(bundled_path("mangkhut.toml"))
times = simulation_times(storm, case.bbox())
print(f"{len(case.corridors)} corridors, storm horizon {times[-1]:.1f} h in {len(times)} steps")

for t in times[:: max(1, len(times) // 6)]:
    s = storm_state(storm, t)
    print(f"  t={t:5.1f} h  centre=({s.lat:.3f}, {s.lon:.3f})  dP={s.P:5.1f} hPa  "
          f"vmax={s.vmax:5.1f} m/s  rmax={s.rmax:5.1f} km")

mids = np.array([c.midpoint for c in case.corridors])
speed, _ = wind_series(storm, times, mids[:, 0], mids[:, 1])
peak = speed.max(axis=0)
print("\nstrongest wind at a corridor midpoint:")
for j in np.argsort(-peak)[:5]:
    print(f"  corridor {case.corridors[j].id:2d}: {peak[j]:.1f} m/s")

# every 500 m tower-line unit gets its own wind history
table = UnitTable.build(case, 500.0, TerrainGrid.load(bundled_path("rts79_terrain.csv")))
prof = scenario_failure_profile(case, table, storm)
print(f"\n{len(table)} tower-line units; model-driven corridor failure probability:")
for cid, p in sorted(prof.corridor_map(corrected=False).items(), key=lambda kv: -kv[1])[:8]:
    print(f"  corridor {cid:2d}: {p:.4f}")
