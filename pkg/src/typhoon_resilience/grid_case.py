"""Electrical network case, corridor geography and terrain raster.

Case files are delimiter-separated text with a header row:

* buses: ``id,load_mw``
* generators: ``bus,pmax_mw,pmin_mw``
* corridors: ``id,from,to,x_pu,limit_mw,vd_line,vd_tower,gamma,op_years,polyline``
  where ``polyline`` is ``"lat,lon;lat,lon;..."`` (quote the field when the
  delimiter is a comma) and an empty ``gamma`` selects the default
  ``ln(20)/vd_tower``.  An optional ``length_km`` column is checked against
  the polyline length.

The terrain raster is ``cell_x,cell_y,altitude_m,slope_deg,rain24h_mm`` with
``# key = value`` comment lines giving ``origin_lat``, ``origin_lon``,
``cell_km`` and the default cell (``default_altitude_m`` ...).
"""

import csv
import hashlib
import json
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import geo

log = logging.getLogger(__name__)

DEFAULT_SPACING_M = 500.0
LENGTH_TOLERANCE = 0.01


class CaseError(ValueError):
    pass


class MissingBus(CaseError):
    def __init__(self, bus, corridor=None):
        self.bus = bus
        self.corridor = corridor
        where = f" (corridor {corridor})" if corridor is not None else ""
        super().__init__(f"MissingBus({bus}){where}")


class NonPositiveReactance(CaseError):
    def __init__(self, corridor, x):
        self.corridor = corridor
        super().__init__(f"NonPositiveReactance: corridor {corridor} has x = {x}")


class NonPositiveLimit(CaseError):
    def __init__(self, corridor, limit):
        self.corridor = corridor
        super().__init__(f"NonPositiveLimit: corridor {corridor} has limit = {limit}")


class DisconnectedBaseGraph(CaseError):
    def __init__(self, components):
        self.components = components
        super().__init__(f"DisconnectedBaseGraph: {len(components)} components, "
                         f"first isolated group {components[1]}")


class InsufficientGeneration(CaseError):
    pass


class LengthMismatch(CaseError):
    pass


class ZeroLengthCorridor(CaseError):
    def __init__(self, corridor):
        self.corridor = corridor
        super().__init__(f"ZeroLengthCorridor: corridor {corridor}")


@dataclass(frozen=True)
class Generator:
    bus: int
    pmax: float
    pmin: float = 0.0


@dataclass
class Corridor:
    id: int
    from_bus: int
    to_bus: int
    x: float
    limit: float
    vd_line: float
    vd_tower: float
    gamma: float
    op_years: float
    polyline: np.ndarray = field(repr=False)

    @property
    def length_km(self):
        return geo.polyline_length(self.polyline)

    @property
    def midpoint(self):
        """Point halfway along the polyline (by arc length)."""
        return point_at_distance(self.polyline, 0.5 * self.length_km)


@dataclass
class NetworkCase:
    buses: dict  # bus id -> load MW
    generators: list
    corridors: list

    def __post_init__(self):
        self._by_id = {c.id: c for c in self.corridors}

    @property
    def bus_ids(self):
        return sorted(self.buses)

    @property
    def corridor_ids(self):
        return [c.id for c in self.corridors]

    def corridor(self, cid):
        return self._by_id[cid]

    @property
    def total_load(self):
        return float(sum(self.buses.values()))

    @property
    def total_pmax(self):
        return float(sum(g.pmax for g in self.generators))

    def bbox(self):
        """(lat_min, lon_min, lat_max, lon_max) over all corridor vertices."""
        if not self.corridors:
            raise CaseError("case has no corridors")
        pts = np.vstack([c.polyline for c in self.corridors])
        return (float(pts[:, 0].min()), float(pts[:, 1].min()),
                float(pts[:, 0].max()), float(pts[:, 1].max()))

    def canonical(self):
        return {
            "buses": [[b, self.buses[b]] for b in self.bus_ids],
            "generators": [[g.bus, g.pmax, g.pmin] for g in self.generators],
            "corridors": [[c.id, c.from_bus, c.to_bus, c.x, c.limit, c.vd_line, c.vd_tower,
                           c.gamma, c.op_years, c.polyline.tolist()] for c in self.corridors],
        }

    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def default_gamma(vd_tower):
    """Tower coefficient giving a 0.05 tower rate exactly at the design speed."""
    return math.log(20.0) / vd_tower


def parse_polyline(text):
    pts = []
    for pair in text.strip().split(";"):
        if not pair.strip():
            continue
        lat, lon = pair.split(",")
        pts.append((float(lat), float(lon)))
    return np.asarray(pts, dtype=float).reshape(-1, 2)


def format_polyline(points):
    return ";".join(f"{lat:.6f},{lon:.6f}" for lat, lon in points)


def _rows(path, delimiter):
    with open(path, newline="") as fh:
        lines = (ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#"))
        reader = csv.DictReader(lines, delimiter=delimiter)
        return [{k.strip(): (v or "").strip() for k, v in row.items()} for row in reader]


def load_case(buses_path, generators_path, corridors_path, geography_path=None, delimiter=","):
    """Read and validate a network case.

    ``geography_path`` optionally supplies ``id,polyline`` rows that replace
    the corridor polylines, so one electrical case can be remapped.
    """
    buses = {}
    for row in _rows(buses_path, delimiter):
        buses[int(row["id"])] = float(row["load_mw"])
    generators = [Generator(int(r["bus"]), float(r["pmax_mw"]), float(r.get("pmin_mw") or 0.0))
                  for r in _rows(generators_path, delimiter)]
    geography = {}
    if geography_path is not None:
        geography = {int(r["id"]): parse_polyline(r["polyline"]) for r in _rows(geography_path, delimiter)}
    corridors = []
    for r in _rows(corridors_path, delimiter):
        cid = int(r["id"])
        vd_tower = float(r["vd_tower"])
        gamma = float(r["gamma"]) if r.get("gamma") else default_gamma(vd_tower)
        poly = geography.get(cid, parse_polyline(r.get("polyline", "")))
        c = Corridor(
            id=cid, from_bus=int(r["from"]), to_bus=int(r["to"]), x=float(r["x_pu"]),
            limit=float(r["limit_mw"]), vd_line=float(r["vd_line"]), vd_tower=vd_tower,
            gamma=gamma, op_years=float(r["op_years"]), polyline=poly,
        )
        if r.get("length_km"):
            stated = float(r["length_km"])
            if abs(c.length_km - stated) > LENGTH_TOLERANCE * stated:
                raise LengthMismatch(f"corridor {cid}: stated {stated} km, polyline {c.length_km:.3f} km")
        corridors.append(c)
    case = NetworkCase(buses=buses, generators=generators, corridors=corridors)
    validate_case(case)
    return case


def validate_case(case):
    for g in case.generators:
        if g.bus not in case.buses:
            raise MissingBus(g.bus)
        if g.pmin > g.pmax:
            raise CaseError(f"generator at bus {g.bus}: pmin > pmax")
    seen = set()
    for c in case.corridors:
        if c.id in seen:
            raise CaseError(f"duplicate corridor id {c.id}")
        seen.add(c.id)
        for b in (c.from_bus, c.to_bus):
            if b not in case.buses:
                raise MissingBus(b, c.id)
        if not c.x > 0:
            raise NonPositiveReactance(c.id, c.x)
        if not c.limit > 0:
            raise NonPositiveLimit(c.id, c.limit)
        if not (c.vd_line > 0 and c.vd_tower > 0 and c.gamma > 0):
            raise CaseError(f"corridor {c.id}: design speeds and gamma must be > 0")
    comps = components(case, failed=())
    if len(comps) > 1:
        raise DisconnectedBaseGraph(comps)
    if case.total_pmax < case.total_load:
        raise InsufficientGeneration(f"sum Pmax {case.total_pmax} < sum load {case.total_load}")


def components(case, failed=()):
    """Connected bus groups of the graph of surviving corridors, sorted by lowest bus id."""
    ids = case.bus_ids
    index = {b: i for i, b in enumerate(ids)}
    failed = set(failed)
    rows, cols = [], []
    for c in case.corridors:
        if c.id not in failed:
            rows.append(index[c.from_bus])
            cols.append(index[c.to_bus])
    n = len(ids)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    groups = {}
    for b, lab in zip(ids, labels):
        groups.setdefault(lab, []).append(b)
    return sorted(groups.values(), key=lambda g: g[0])


def bundled_path(name):
    return Path(str(resources.files("typhoon_resilience") / "data" / name))


def bundled_case(name="rts79"):
    """Load a case shipped in the package data directory."""
    if name == "rts79":
        d = bundled_path("")
        return load_case(d / "rts79_buses.csv", d / "rts79_generators.csv", d / "rts79_corridors.csv")
    d = bundled_path(name)
    return load_case(d / "buses.csv", d / "generators.csv", d / "corridors.csv")


# --------------------------------------------------------------------------
# tower-line units

@dataclass(frozen=True)
class TowerLineUnit:
    corridor_id: int
    index: int
    lat: float
    lon: float
    span_km: float
    bearing: float
    cell: tuple = None


def point_at_distance(polyline, s_km):
    """Point at arc length ``s_km`` along the polyline (linear within segments)."""
    pts = np.asarray(polyline, dtype=float)
    seg = geo.haversine(pts[:-1, 0], pts[:-1, 1], pts[1:, 0], pts[1:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    k = int(np.clip(np.searchsorted(cum, s_km, side="right") - 1, 0, len(seg) - 1))
    frac = 0.0 if seg[k] == 0 else (s_km - cum[k]) / seg[k]
    frac = min(max(frac, 0.0), 1.0)
    p = pts[k] + frac * (pts[k + 1] - pts[k])
    return float(p[0]), float(p[1])


def discretize_corridor(corridor, spacing_m=DEFAULT_SPACING_M, grid=None):
    """Split a corridor into tower-line units every ``spacing_m`` metres of arc length.

    Unit ``i`` is the tower at arc length ``i * spacing`` plus the span to
    the next tower; the final span takes the remainder.
    """
    if not spacing_m > 0:
        raise ValueError("spacing must be > 0")
    length = corridor.length_km
    if not length > 0:
        raise ZeroLengthCorridor(corridor.id)
    spacing = spacing_m / 1000.0
    n = max(1, math.ceil(length / spacing - 1e-9))
    units = []
    for i in range(n):
        s0 = i * spacing
        s1 = length if i == n - 1 else (i + 1) * spacing
        lat0, lon0 = point_at_distance(corridor.polyline, s0)
        lat1, lon1 = point_at_distance(corridor.polyline, s1)
        units.append(TowerLineUnit(
            corridor_id=corridor.id, index=i, lat=lat0, lon=lon0, span_km=s1 - s0,
            bearing=float(geo.bearing(lat0, lon0, lat1, lon1)),
            cell=grid.cell_index(lat0, lon0) if grid is not None else None,
        ))
    return units


def discretize_case(case, spacing_m=DEFAULT_SPACING_M, grid=None):
    return {c.id: discretize_corridor(c, spacing_m, grid) for c in case.corridors}


# --------------------------------------------------------------------------
# terrain raster

CellAttributes = namedtuple("CellAttributes", "altitude slope rain24h")


class TerrainGrid:
    """Square-cell raster in the local tangent plane anchored at an origin.

    Cell ``(cx, cy)`` covers ``[cx, cx+1) x [cy, cy+1)`` cell widths east and
    north of the origin.  A point on a shared edge belongs to the
    lower-index cell (row ``cy`` first, then column ``cx``).  Points outside
    coverage get ``default`` and a logged warning.
    """

    def __init__(self, origin_lat, origin_lon, cell_km=1.0, cells=None,
                 default=CellAttributes(0.0, 0.0, 0.0)):
        if not cell_km > 0:
            raise ValueError("cell_km must be > 0")
        self.origin_lat = float(origin_lat)
        self.origin_lon = float(origin_lon)
        self.cell_km = float(cell_km)
        self.cells = dict(cells or {})
        self.default = CellAttributes(*default)

    def to_local(self, lat, lon):
        k = math.pi / 180.0 * geo.EARTH_RADIUS_KM
        x = (lon - self.origin_lon) * k * math.cos(math.radians(self.origin_lat))
        y = (lat - self.origin_lat) * k
        return x, y

    def from_local(self, x, y):
        k = math.pi / 180.0 * geo.EARTH_RADIUS_KM
        return self.origin_lat + y / k, self.origin_lon + x / (k * math.cos(math.radians(self.origin_lat)))

    def cell_center(self, cx, cy):
        return self.from_local((cx + 0.5) * self.cell_km, (cy + 0.5) * self.cell_km)

    @staticmethod
    def _candidates(u):
        f = math.floor(u)
        if abs(u - round(u)) < 1e-9:
            r = round(u)
            return [r - 1, r]
        return [f]

    def cell_index(self, lat, lon):
        """Index of the cell containing the point, or None when outside coverage."""
        x, y = self.to_local(lat, lon)
        for cy in self._candidates(y / self.cell_km):
            for cx in self._candidates(x / self.cell_km):
                if (cx, cy) in self.cells:
                    return (cx, cy)
        return None

    def lookup(self, lat, lon):
        idx = self.cell_index(lat, lon)
        if idx is None:
            log.warning("point (%.5f, %.5f) outside terrain coverage; using default cell", lat, lon)
            return self.default
        return self.cells[idx]

    @classmethod
    def load(cls, path, delimiter=","):
        meta = {}
        with open(path) as fh:
            for line in fh:
                s = line.strip()
                if s.startswith("#") and "=" in s:
                    k, v = s[1:].split("=", 1)
                    meta[k.strip()] = float(v)
        cells = {}
        for r in _rows(path, delimiter):
            cells[(int(r["cell_x"]), int(r["cell_y"]))] = CellAttributes(
                float(r["altitude_m"]), float(r["slope_deg"]), float(r["rain24h_mm"]))
        default = CellAttributes(meta.get("default_altitude_m", 0.0), meta.get("default_slope_deg", 0.0),
                                 meta.get("default_rain24h_mm", 0.0))
        return cls(meta["origin_lat"], meta["origin_lon"], meta.get("cell_km", 1.0), cells, default)

    def save(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(f"# origin_lat = {self.origin_lat!r}\n# origin_lon = {self.origin_lon!r}\n")
            fh.write(f"# cell_km = {self.cell_km!r}\n")
            fh.write(f"# default_altitude_m = {self.default.altitude!r}\n")
            fh.write(f"# default_slope_deg = {self.default.slope!r}\n")
            fh.write(f"# default_rain24h_mm = {self.default.rain24h!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["cell_x", "cell_y", "altitude_m", "slope_deg", "rain24h_mm"])
            for (cx, cy) in sorted(self.cells, key=lambda k: (k[1], k[0])):
                a = self.cells[(cx, cy)]
                w.writerow([cx, cy, f"{a.altitude:.1f}", f"{a.slope:.2f}", f"{a.rain24h:.1f}"])


def cell_lookup(grid, lat, lon):
    return grid.lookup(lat, lon)
