"""Model-driven unit failure probabilities and corridor/scenario profiles.

Each tower-line unit is a line section (hazard per hour per km, exponential
in wind speed over the line design speed) in series with a tower (a
per-step collapse rate that is zero below the tower design speed, rises
exponentially and saturates at twice the design speed).  Hazards are
integrated over the storm with left-endpoint sums; units of a corridor are
in series, so the corridor fails if any unit fails.
"""

from dataclasses import dataclass, field

import numpy as np

from . import feature_engine, typhoon_field
from .grid_case import discretize_case

TOWER_RATE_CAP = 1.0 - 1e-9


def line_section_rate(v, vd_line, dl):
    return np.exp(11.0 * np.asarray(v, dtype=float) / vd_line - 18.0) * dl


def tower_rate(v, vd_tower, gamma):
    v = np.asarray(v, dtype=float)
    mid = np.clip(np.exp(gamma * (v - 2.0 * vd_tower)), 0.0, 1.0)
    out = np.where(v < vd_tower, 0.0, np.where(v >= 2.0 * vd_tower, 1.0, mid))
    return float(out) if out.ndim == 0 else out


def _tower_hazard(rates, dt):
    rates = np.asarray(rates, dtype=float)
    certain = rates >= 1.0
    lam = np.minimum(rates, TOWER_RATE_CAP)
    h = lam / (1.0 - lam) * dt
    return np.where(certain, np.inf, h)


def cumulative_unit_probability(rates, dt, kind="line"):
    """Probability of failure over a rate series (axis 0 is time)."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    rates = np.asarray(rates, dtype=float)
    if kind == "line":
        h = rates * dt
    elif kind == "tower":
        h = _tower_hazard(rates, dt)
    else:
        raise ValueError(f"kind must be 'line' or 'tower', got {kind!r}")
    out = -np.expm1(-np.sum(h, axis=0))
    return float(out) if out.ndim == 0 else out


def corridor_probability(unit_probabilities):
    """Series-system failure probability ``1 - prod(1 - p_i)``."""
    p = np.asarray(unit_probabilities, dtype=float)
    if p.size == 0:
        return 0.0
    if np.any(p >= 1.0):
        return 1.0
    return float(-np.expm1(np.sum(np.log1p(-p))))


def corrected_probability(k, p):
    return np.minimum(1.0, np.asarray(k) * np.asarray(p))


@dataclass
class UnitTable:
    """Flat per-unit arrays for a discretised case, grouped by corridor."""

    corridor_ids: list
    offsets: np.ndarray  # start index of each corridor's units
    corridor_index: np.ndarray
    unit_index: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    span: np.ndarray
    bearing: np.ndarray
    vd_line: np.ndarray
    vd_tower: np.ndarray
    gamma: np.ndarray
    op_years: np.ndarray
    altitude: np.ndarray
    slope: np.ndarray
    rain24h: np.ndarray

    def __len__(self):
        return len(self.lat)

    @classmethod
    def build(cls, case, spacing_m=500.0, terrain=None):
        units = discretize_case(case, spacing_m, terrain)
        rows, ci, offsets = [], [], []
        for j, c in enumerate(case.corridors):
            offsets.append(len(rows))
            for u in units[c.id]:
                cell = terrain.lookup(u.lat, u.lon) if terrain is not None else (0.0, 0.0, 0.0)
                rows.append((u.index, u.lat, u.lon, u.span_km, u.bearing, c.vd_line, c.vd_tower,
                             c.gamma, c.op_years, *cell))
                ci.append(j)
        a = np.asarray(rows, dtype=float).reshape(-1, 12)
        return cls(
            corridor_ids=list(case.corridor_ids), offsets=np.asarray(offsets, dtype=int),
            corridor_index=np.asarray(ci, dtype=int), unit_index=a[:, 0].astype(int),
            lat=a[:, 1], lon=a[:, 2], span=a[:, 3], bearing=a[:, 4], vd_line=a[:, 5],
            vd_tower=a[:, 6], gamma=a[:, 7], op_years=a[:, 8], altitude=a[:, 9],
            slope=a[:, 10], rain24h=a[:, 11],
        )

    def per_corridor_log_survival(self, p):
        """Sum of log(1 - p) per corridor along the last axis."""
        with np.errstate(divide="ignore"):
            ls = np.log1p(-np.minimum(p, 1.0))
        return np.add.reduceat(ls, self.offsets, axis=-1)


@dataclass
class FailureProfile:
    """Failure probabilities of every unit and corridor for one scenario."""

    params: object
    probability: float
    corridor_ids: list
    times: np.ndarray
    p_unit: np.ndarray          # model-driven cumulative probability per unit
    k: np.ndarray               # correction coefficient per unit
    p_unit_corrected: np.ndarray
    P_model: np.ndarray         # per corridor, k = 1
    P_mc: np.ndarray            # per corridor, corrected
    curve_model: np.ndarray = field(repr=False)   # (steps, corridors)
    curve_mc: np.ndarray = field(repr=False)
    features: np.ndarray = field(default=None, repr=False)
    W: np.ndarray = field(default=None, repr=False)

    def corridor_map(self, corrected=True):
        vals = self.P_mc if corrected else self.P_model
        return dict(zip(self.corridor_ids, vals.tolist()))


def _fold(table, p):
    return -np.expm1(table.per_corridor_log_survival(p))


def scenario_failure_profile(case, table, params, probability=1.0, weights=None,
                             ranges=feature_engine.DEFAULT_RANGES, bbox=None, force_k=None):
    """Step a storm across the case and build its FailureProfile.

    ``table`` is the case's UnitTable.  With ``weights`` None (model-driven
    mode) every correction coefficient is 1; otherwise the per-unit
    features are scored with those feature weights.  ``force_k`` overrides
    the coefficients with a constant (scores are still computed).
    """
    bbox = bbox or case.bbox()
    times = typhoon_field.simulation_times(params, bbox)
    n_units, n_corr = len(table), len(table.corridor_ids)
    if len(times) == 0:
        speed = np.zeros((0, n_units))
        direction = np.zeros((0, n_units))
    else:
        speed, direction = typhoon_field.wind_series(params, times, table.lat, table.lon)
    dt = params.dt_hours

    h_line = line_section_rate(speed, table.vd_line, table.span) * dt
    h_tower = _tower_hazard(tower_rate(speed, table.vd_tower, table.gamma), dt)
    H = np.cumsum(h_line + h_tower, axis=0)
    p_curve = -np.expm1(-H)  # (steps, units)
    p_unit = p_curve[-1] if len(times) else np.zeros(n_units)

    if len(times):
        imax = np.argmax(speed, axis=0)
        cols = np.arange(n_units)
        max_wind = speed[imax, cols]
        dir_at_max = direction[imax, cols]
    else:
        max_wind = np.zeros(n_units)
        dir_at_max = np.zeros(n_units)
    X = feature_engine.unit_features(max_wind, dir_at_max, table.bearing, table.altitude,
                                     table.slope, table.rain24h, table.vd_line, table.op_years)
    if weights is None:
        k = np.ones(n_units)
        W = None
    else:
        W, k = feature_engine.coefficients(weights, X, ranges)
    if force_k is not None:
        k = np.full(n_units, float(force_k))

    p_corr = corrected_probability(k, p_unit)
    if len(times):
        curve_model = _fold(table, p_curve)
        curve_mc = _fold(table, corrected_probability(k[None, :], p_curve))
    else:
        curve_model = curve_mc = np.zeros((0, n_corr))
    return FailureProfile(
        params=params, probability=float(probability), corridor_ids=list(table.corridor_ids),
        times=times, p_unit=p_unit, k=k, p_unit_corrected=p_corr,
        P_model=_fold(table, p_unit), P_mc=_fold(table, p_corr),
        curve_model=curve_model, curve_mc=curve_mc, features=X, W=W,
    )


def scenario_profiles(case, table, scenario_set, weights=None, ranges=feature_engine.DEFAULT_RANGES,
                      force_k=None):
    bbox = case.bbox()
    return [scenario_failure_profile(case, table, params, prob, weights, ranges, bbox, force_k)
            for params, prob in scenario_set]
