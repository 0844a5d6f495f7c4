"""Per-unit feature vectors and the data-driven correction coefficient.

Seven features describe every tower-line unit.  Each is clamped into its
plausible range and normalised so that 1 is the hazardous end: '+'
features grow with risk, '-' features (design wind speed, operation time by
default) shrink with it.  A weighted sum of the normalised features is
mapped linearly onto a correction coefficient in [0.9, 1.4].
"""

import logging
from dataclasses import dataclass, replace

import numpy as np

from . import geo

log = logging.getLogger(__name__)

FEATURES = ("max_wind", "rain_intensity", "altitude", "slope", "wind_angle", "design_wind", "op_time")

K_MIN = 0.9
K_SPAN = 0.5


class NondegenerateRangeRequired(ValueError):
    """A feature range has min >= max."""


@dataclass(frozen=True)
class FeatureRange:
    lo: float
    hi: float
    sign: str  # '+' or '-'


@dataclass(frozen=True)
class FeatureRanges:
    ranges: tuple  # FeatureRange per entry of FEATURES

    @classmethod
    def default(cls, op_time_sign="-"):
        """Standard ranges; ``op_time_sign='+'`` treats older towers as more fragile."""
        table = {
            "max_wind": FeatureRange(0.0, 60.0, "+"),
            "rain_intensity": FeatureRange(0.0, 60.0, "+"),
            "altitude": FeatureRange(-20.0, 150.0, "+"),
            "slope": FeatureRange(0.0, 180.0, "+"),
            "wind_angle": FeatureRange(0.0, 180.0, "+"),
            "design_wind": FeatureRange(20.0, 50.0, "-"),
            "op_time": FeatureRange(0.0, 40.0, op_time_sign),
        }
        return cls(tuple(table[f] for f in FEATURES))

    def with_sign(self, feature, sign):
        i = FEATURES.index(feature)
        r = list(self.ranges)
        r[i] = replace(r[i], sign=sign)
        return FeatureRanges(tuple(r))

    @property
    def lo(self):
        return np.array([r.lo for r in self.ranges])

    @property
    def hi(self):
        return np.array([r.hi for r in self.ranges])

    @property
    def positive(self):
        return np.array([r.sign == "+" for r in self.ranges])

    def check(self):
        for name, r in zip(FEATURES, self.ranges):
            if not r.lo < r.hi:
                raise NondegenerateRangeRequired(f"{name}: min {r.lo} must be < max {r.hi}")
            if r.sign not in "+-" or len(r.sign) != 1:
                raise ValueError(f"{name}: sign must be '+' or '-'")


DEFAULT_RANGES = FeatureRanges.default()


def rain_10min(r24h):
    """Ten-minute rainfall intensity (mm/h) from 24 h accumulated rainfall (mm)."""
    r = np.asarray(r24h, dtype=float)
    if np.any(r < 0):
        raise ValueError("rainfall must be >= 0")
    out = 27.08 * np.power(r, 0.6021)
    return float(out) if out.ndim == 0 else out


def normalize(x, lo, hi, sign):
    """Clamp ``x`` into [lo, hi] and scale to [0, 1] with 1 at the hazardous end."""
    if not lo < hi:
        raise NondegenerateRangeRequired(f"min {lo} must be < max {hi}")
    x = np.clip(np.asarray(x, dtype=float), lo, hi)
    out = (x - lo) / (hi - lo) if sign == "+" else (hi - x) / (hi - lo)
    return float(out) if out.ndim == 0 else out


def normalize_matrix(X, ranges=DEFAULT_RANGES):
    """Row-wise normalisation of an (n, 7) raw feature matrix."""
    ranges.check()
    X = np.clip(np.asarray(X, dtype=float), ranges.lo, ranges.hi)
    up = (X - ranges.lo) / (ranges.hi - ranges.lo)
    return np.where(ranges.positive, up, 1.0 - up)


def as_weights(weights):
    w = np.asarray(getattr(weights, "weights", weights), dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must be non-negative and sum to 1, got {w}")
    return w


def boundary_assignments(ranges=DEFAULT_RANGES):
    """Raw feature vectors at the hazardous and the benign corner of the ranges."""
    ranges.check()
    worst = np.where(ranges.positive, ranges.hi, ranges.lo)
    best = np.where(ranges.positive, ranges.lo, ranges.hi)
    return worst, best


def score_bounds(weights, ranges=DEFAULT_RANGES):
    """Composite-score bounds ``(W_min, W_max)`` over the two boundary assignments."""
    w = as_weights(weights)
    worst, best = boundary_assignments(ranges)
    a = float(normalize_matrix(worst[None, :], ranges)[0] @ w)
    b = float(normalize_matrix(best[None, :], ranges)[0] @ w)
    return min(a, b), max(a, b)


def composite_score(weights, X, ranges=DEFAULT_RANGES):
    return normalize_matrix(np.atleast_2d(X), ranges) @ as_weights(weights)


def correction_coefficient(W, bounds):
    """Map composite score(s) linearly from ``bounds`` onto [0.9, 1.4]."""
    lo, hi = bounds
    W = np.asarray(W, dtype=float)
    if np.any(W < lo - 1e-12) or np.any(W > hi + 1e-12):
        log.warning("composite score outside [%g, %g]; clamping", lo, hi)
    k = K_SPAN * (np.clip(W, lo, hi) - lo) / (hi - lo) + K_MIN
    return float(k) if k.ndim == 0 else k


def coefficients(weights, X, ranges=DEFAULT_RANGES):
    """Correction coefficient per row of a raw (n, 7) feature matrix; returns (W, k)."""
    W = composite_score(weights, X, ranges)
    return W, correction_coefficient(W, score_bounds(weights, ranges))


def wind_angle(wind_direction, span_bearing):
    """Angle between wind direction and span bearing, folded to [0, 180]."""
    return geo.fold_angle(np.asarray(wind_direction) - np.asarray(span_bearing))


def unit_features(max_wind, wind_dir_at_max, span_bearing, altitude, slope, rain24h, design_wind, op_years):
    """Assemble the raw (n, 7) feature matrix in FEATURES order."""
    cols = {
        "max_wind": max_wind,
        "rain_intensity": rain_10min(np.asarray(rain24h, dtype=float)),
        "altitude": altitude,
        "slope": slope,
        "wind_angle": wind_angle(wind_dir_at_max, span_bearing),
        "design_wind": design_wind,
        "op_time": op_years,
    }
    n = len(np.atleast_1d(max_wind))
    return np.column_stack([np.broadcast_to(np.asarray(cols[f], dtype=float), (n,)) for f in FEATURES])
