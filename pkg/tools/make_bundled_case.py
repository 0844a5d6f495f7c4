"""Regenerate the bundled RTS-79 coastal case, terrain raster and toy cases.

The electrical data are the standard IEEE RTS-79 values (peak bus loads,
unit capacities aggregated per bus, branch reactances and continuous
ratings).  Geography is synthetic: buses are laid out with a Kamada-Kawai
embedding around the Mangkhut landfall point and each corridor polyline is
bent so its length matches the RTS line mileage.  Design wind speeds,
operation times and terrain are illustrative.

    python tools/make_bundled_case.py
"""

import csv
import math
from pathlib import Path

import networkx as nx
import numpy as np

from typhoon_resilience import geo
from typhoon_resilience.grid_case import TerrainGrid, CellAttributes, format_polyline

OUT = Path(__file__).resolve().parents[1] / "src" / "typhoon_resilience" / "data"
MILE = 1.609344

LOADS = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195, 11: 0, 12: 0,
         13: 265, 14: 194, 15: 317, 16: 100, 17: 0, 18: 333, 19: 181, 20: 128, 21: 0, 22: 0, 23: 0, 24: 0}

# bus: unit capacities (MW)
UNITS = {1: [20, 20, 76, 76], 2: [20, 20, 76, 76], 7: [100, 100, 100], 13: [197, 197, 197],
         15: [12] * 5 + [155], 16: [155], 18: [400], 21: [400], 22: [50] * 6, 23: [155, 155, 350]}

# id, from, to, x (p.u.), rating (MW), length (miles; 0 = transformer)
BRANCHES = [
    (1, 1, 2, 0.0139, 175, 3), (2, 1, 3, 0.2112, 175, 55), (3, 1, 5, 0.0845, 175, 22),
    (4, 2, 4, 0.1267, 175, 33), (5, 2, 6, 0.1920, 175, 50), (6, 3, 9, 0.1190, 175, 31),
    (7, 3, 24, 0.0839, 400, 0), (8, 4, 9, 0.1037, 175, 27), (9, 5, 10, 0.0883, 175, 23),
    (10, 6, 10, 0.0605, 175, 16), (11, 7, 8, 0.0614, 175, 16), (12, 8, 9, 0.1651, 175, 43),
    (13, 8, 10, 0.1651, 175, 43), (14, 9, 11, 0.0839, 400, 0), (15, 9, 12, 0.0839, 400, 0),
    (16, 10, 11, 0.0839, 400, 0), (17, 10, 12, 0.0839, 400, 0), (18, 11, 13, 0.0476, 500, 33),
    (19, 11, 14, 0.0418, 500, 29), (20, 12, 13, 0.0476, 500, 33), (21, 12, 23, 0.0966, 500, 67),
    (22, 13, 23, 0.0865, 500, 60), (23, 14, 16, 0.0389, 500, 27), (24, 15, 16, 0.0173, 500, 12),
    (25, 15, 21, 0.0490, 500, 34), (26, 15, 21, 0.0490, 500, 34), (27, 15, 24, 0.0519, 500, 36),
    (28, 16, 17, 0.0259, 500, 18), (29, 16, 19, 0.0231, 500, 16), (30, 17, 18, 0.0144, 500, 10),
    (31, 17, 22, 0.1053, 500, 73), (32, 18, 21, 0.0259, 500, 18), (33, 18, 21, 0.0259, 500, 18),
    (34, 19, 20, 0.0396, 500, 27.5), (35, 19, 20, 0.0396, 500, 27.5), (36, 20, 23, 0.0216, 500, 15),
    (37, 20, 23, 0.0216, 500, 15), (38, 21, 22, 0.0678, 500, 47),
]
TRANSFORMER_KM = 2.0

CENTER = (22.15, 112.15)
ROTATE_DEG = 200.0   # puts the 138 kV area (buses 1-10) toward the coast


def layout():
    g = nx.Graph()
    for cid, a, b, _, _, miles in BRANCHES:
        L = miles * MILE if miles else TRANSFORMER_KM
        if g.has_edge(a, b):
            continue
        g.add_edge(a, b, weight=L)
    pos = nx.kamada_kawai_layout(g, weight="weight")
    # rescale so that the median edge ratio is 0.8 (leaves room to bend)
    ratios = [np.linalg.norm(pos[a] - pos[b]) / d["weight"] for a, b, d in g.edges(data=True)]
    scale = 0.8 / np.median(ratios)
    th = math.radians(ROTATE_DEG)
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    xy = {b: R @ (p * scale) for b, p in pos.items()}
    mean = np.mean(list(xy.values()), axis=0)
    out = {}
    for b, p in xy.items():
        x, y = p - mean  # km east, km north
        lat, lon = geo.offset(CENTER[0], CENTER[1], math.hypot(x, y), math.degrees(math.atan2(x, y)) % 360)
        out[b] = (float(lat), float(lon))
    return out


def polyline(cid, a, b, target, pos, nudge=0.0):
    (la, oa), (lb, ob) = pos[a], pos[b]
    d = float(geo.haversine(la, oa, lb, ob))
    if d >= target - 1e-6:
        return [(la, oa), (lb, ob)]
    h = math.sqrt(max((target / 2) ** 2 - (d / 2) ** 2, 0.0))
    brg = float(geo.bearing(la, oa, lb, ob))
    side = 90.0 if cid % 2 else -90.0
    mlat, mlon = 0.5 * (la + lb), 0.5 * (oa + ob)
    mlat, mlon = geo.offset(mlat, mlon, nudge, brg)
    vlat, vlon = geo.offset(mlat, mlon, h, (brg + side) % 360)
    return [(la, oa), (float(vlat), float(vlon)), (lb, ob)]


def corridor_attributes(cid, rng):
    vd_line = float(rng.uniform(47.0, 56.0))
    vd_tower = float(rng.uniform(51.0, 58.0))
    op_years = float(rng.integers(4, 36))
    return vd_line, vd_tower, op_years


def write_rts79():
    pos = layout()
    rng = np.random.default_rng(79)
    with open(OUT / "rts79_buses.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "load_mw", "lat", "lon"])
        for b in sorted(LOADS):
            w.writerow([b, LOADS[b], f"{pos[b][0]:.6f}", f"{pos[b][1]:.6f}"])
    with open(OUT / "rts79_generators.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus", "pmax_mw", "pmin_mw"])
        for b in sorted(UNITS):
            w.writerow([b, sum(UNITS[b]), 0])
    polys = {}
    with open(OUT / "rts79_corridors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "from", "to", "x_pu", "limit_mw", "vd_line", "vd_tower", "gamma", "op_years",
                    "polyline"])
        seen = {}
        for cid, a, b, x, rate, miles in BRANCHES:
            target = miles * MILE if miles else TRANSFORMER_KM
            nudge = 0.4 * seen.get((a, b), 0)
            seen[(a, b)] = seen.get((a, b), 0) + 1
            poly = polyline(cid - (nudge > 0), a, b, target, pos, nudge)
            polys[cid] = poly
            vd_line, vd_tower, op = corridor_attributes(cid, rng)
            w.writerow([cid, a, b, x, rate, f"{vd_line:.1f}", f"{vd_tower:.1f}", "", f"{op:.0f}",
                        format_polyline(poly)])
    return polys


def write_terrain(polys):
    pts = []
    for poly in polys.values():
        p = np.asarray(poly)
        for (a, b), (c, d) in zip(p[:-1], p[1:]):
            n = max(2, int(geo.haversine(a, b, c, d) / 0.25) + 2)
            pts.extend(zip(np.linspace(a, c, n), np.linspace(b, d, n)))
    pts = np.asarray(pts)
    lat0, lon0 = pts[:, 0].min() - 0.05, pts[:, 1].min() - 0.05
    grid = TerrainGrid(lat0, lon0, 1.0, default=CellAttributes(10.0, 2.0, 80.0))
    keep = set()
    for lat, lon in pts:
        x, y = grid.to_local(lat, lon)
        cx, cy = int(math.floor(x)), int(math.floor(y))
        for dx in (-2, -1, 0, 1, 2):
            for dy in (-2, -1, 0, 1, 2):
                keep.add((cx + dx, cy + dy))
    rng = np.random.default_rng(1809)
    hills = [(rng.uniform(0, 200), rng.uniform(0, 200), rng.uniform(40, 220), rng.uniform(6, 20))
             for _ in range(40)]

    def altitude(x, y):
        base = -10.0 + 0.9 * y  # rises inland (northward)
        return base + sum(h * math.exp(-((x - hx) ** 2 + (y - hy) ** 2) / (2 * s * s)) for hx, hy, h, s in hills)

    lf_x, lf_y = grid.to_local(21.8, 112.7)
    cells = {}
    for cx, cy in keep:
        x, y = cx + 0.5, cy + 0.5
        z = altitude(x, y)
        dzdx = (altitude(x + 0.5, y) - altitude(x - 0.5, y)) / 1000.0
        dzdy = (altitude(x, y + 0.5) - altitude(x, y - 0.5)) / 1000.0
        slope = math.degrees(math.atan(math.hypot(dzdx, dzdy)))
        # rain band along the storm track, heaviest near landfall
        dist = math.hypot(x - lf_x, y - lf_y)
        rain = 60.0 + 260.0 * math.exp(-dist / 90.0) + 20.0 * math.sin(0.11 * x) * math.cos(0.07 * y)
        cells[(cx, cy)] = CellAttributes(round(z, 1), round(slope, 2), round(max(rain, 0.0), 1))
    grid.cells = cells
    grid.save(OUT / "rts79_terrain.csv")


def write_toys():
    # 3-bus triangle: generator at bus 1, 100 MW load at bus 3
    toy3 = OUT / "toy3"
    toy3.mkdir(exist_ok=True)
    _write_small(toy3, {1: 0, 2: 0, 3: 100}, [(1, 200)],
                 [(1, 1, 2, 0.1, 60), (2, 2, 3, 0.1, 60), (3, 1, 3, 0.1, 100)],
                 {1: (22.00, 112.00), 2: (22.10, 112.10), 3: (22.00, 112.20)})
    # 4-bus ring with a chord: two generators, two loads
    toy4 = OUT / "toy4"
    toy4.mkdir(exist_ok=True)
    _write_small(toy4, {1: 0, 2: 80, 3: 0, 4: 120}, [(1, 150), (3, 100)],
                 [(1, 1, 2, 0.1, 70), (2, 2, 3, 0.1, 70), (3, 3, 4, 0.1, 90), (4, 4, 1, 0.1, 90),
                  (5, 1, 3, 0.2, 50)],
                 {1: (22.00, 112.00), 2: (22.10, 112.00), 3: (22.10, 112.12), 4: (22.00, 112.12)})


def _write_small(d, loads, gens, lines, pos):
    with open(d / "buses.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "load_mw"])
        for b, l in loads.items():
            w.writerow([b, l])
    with open(d / "generators.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus", "pmax_mw", "pmin_mw"])
        for b, p in gens:
            w.writerow([b, p, 0])
    with open(d / "corridors.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "from", "to", "x_pu", "limit_mw", "vd_line", "vd_tower", "gamma", "op_years",
                    "polyline"])
        for cid, a, b, x, lim in lines:
            w.writerow([cid, a, b, x, lim, 36, 42, "", 15, format_polyline([pos[a], pos[b]])])


if __name__ == "__main__":
    polys = write_rts79()
    write_terrain(polys)
    write_toys()
    print("wrote", OUT)
