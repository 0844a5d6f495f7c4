"""Parametric (Batts-type) typhoon wind field and discretized scenario sets.

A storm starts at its landfall point at ``t = 0`` and moves in a straight
line (local tangent plane) along ``heading`` at ``vT``.  Its central pressure
difference decays linearly in time; the peak gradient wind and the radius of
maximum wind follow from the pressure difference and the latitude of the
centre.  Wind at a site is a Rankine-like profile: linear inside the radius
of maximum wind and a ``(rmax/d)**0.6`` power-law decay outside.

Times are hours, distances km, wind m/s, pressure hPa.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize, stats

from . import geo
from ._toml import load_toml

log = logging.getLogger(__name__)

KMH_TO_MS = 1.0 / 3.6
DEFAULT_K = 6.93


class DegenerateMarginal(ValueError):
    """A scenario bin carries zero probability mass."""


@dataclass(frozen=True)
class TyphoonParameters:
    deltaP0: float
    heading: float
    vT: float
    landfall_lat: float
    landfall_lon: float
    K: float = DEFAULT_K
    dt: float = 10.0  # minutes

    def __post_init__(self):
        if not self.deltaP0 > 0:
            raise ValueError(f"deltaP0 must be > 0, got {self.deltaP0}")
        if not self.vT >= 0:
            raise ValueError(f"vT must be >= 0, got {self.vT}")
        if not 0.0 <= self.heading < 360.0:
            raise ValueError(f"heading must be in [0, 360), got {self.heading}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.K > 0:
            raise ValueError(f"K must be > 0, got {self.K}")

    @property
    def dt_hours(self):
        return self.dt / 60.0


@dataclass(frozen=True)
class TyphoonState:
    t: float
    lat: float
    lon: float
    P: float
    vmax: float
    rmax: float

    @property
    def center(self):
        return self.lat, self.lon


def central_pressure(params, t):
    """Central pressure difference after ``t`` hours, clamped at zero."""
    decay = 0.02 + 0.02 * math.sin(math.radians(params.heading))
    return np.maximum(0.0, params.deltaP0 - decay * np.asarray(t, dtype=float))


def peak_wind(params, P):
    return 0.865 * params.K * np.sqrt(P) + 0.5 * params.vT * KMH_TO_MS


def radius_max_wind(P, lat):
    return np.exp(2.63 - 5.086e-5 * np.asarray(P, dtype=float) ** 2 + 0.0395 * np.asarray(lat, dtype=float))


def track_position(params, t):
    """Storm centre (lat, lon) after ``t`` hours."""
    distance = params.vT * np.asarray(t, dtype=float)
    return geo.offset(params.landfall_lat, params.landfall_lon, distance, params.heading)


def storm_state(params, t):
    if t < 0:
        raise ValueError("t must be >= 0")
    P = float(central_pressure(params, t))
    lat, lon = track_position(params, t)
    return TyphoonState(
        t=float(t), lat=float(lat), lon=float(lon), P=P,
        vmax=float(peak_wind(params, P)), rmax=float(radius_max_wind(P, lat)),
    )


def radial_profile(vmax, rmax, d):
    """Wind speed at distance ``d`` from the centre."""
    d = np.asarray(d, dtype=float)
    safe = np.where(d > 0, d, 1.0)
    return np.where(d <= rmax, vmax * d / rmax, vmax * np.power(rmax / safe, 0.6))


def wind_at(state, lat, lon):
    """Wind (speed m/s, direction deg) at the given point(s).

    Direction is the bearing the air moves toward: tangential, cyclonic
    (counter-clockwise) north of the equator and clockwise south of it.
    """
    d = geo.haversine(state.lat, state.lon, lat, lon)
    speed = radial_profile(state.vmax, state.rmax, d)
    radial = geo.bearing(state.lat, state.lon, lat, lon)
    turn = -90.0 if state.lat >= 0 else 90.0
    direction = np.where(d > 0, np.mod(radial + turn, 360.0), 0.0)
    if np.ndim(speed) == 0:
        return float(speed), float(direction)
    return speed, direction


def simulation_times(params, bbox, max_hours=240.0):
    """Left-endpoint step times (hours) for a storm crossing ``bbox``.

    ``bbox`` is ``(lat_min, lon_min, lat_max, lon_max)``.  Stepping stops
    when the storm has dissipated, or when its centre has left the box
    inflated by three radii of maximum wind and is moving away from it.
    """
    dt = params.dt_hours
    lat_c = 0.5 * (bbox[0] + bbox[2])
    lon_c = 0.5 * (bbox[1] + bbox[3])
    times = []
    prev_dist = None
    n = 0
    while True:
        t = n * dt
        if t > max_hours:
            log.warning("storm horizon capped at %.1f h", max_hours)
            break
        state = storm_state(params, t)
        if state.P <= 0.0:
            break
        pad_lat = 3.0 * state.rmax / geo.EARTH_RADIUS_KM * 180.0 / math.pi
        pad_lon = pad_lat / math.cos(math.radians(lat_c))
        inside = (bbox[0] - pad_lat <= state.lat <= bbox[2] + pad_lat
                  and bbox[1] - pad_lon <= state.lon <= bbox[3] + pad_lon)
        dist = float(geo.haversine(state.lat, state.lon, lat_c, lon_c))
        if not inside and prev_dist is not None and dist >= prev_dist:
            break
        if not inside and params.vT == 0:
            break
        times.append(t)
        prev_dist = dist
        n += 1
    return np.asarray(times)


def track_arrays(params, times):
    """Vectorised storm states: dict of arrays keyed like TyphoonState fields."""
    times = np.asarray(times, dtype=float)
    P = central_pressure(params, times)
    lat, lon = track_position(params, times)
    lat = np.broadcast_to(lat, times.shape)
    lon = np.broadcast_to(lon, times.shape)
    return {
        "t": times, "lat": lat, "lon": lon, "P": P,
        "vmax": peak_wind(params, P), "rmax": radius_max_wind(P, lat),
    }


def wind_series(params, times, lat, lon):
    """Wind speed and direction at sites for every step; arrays of shape (steps, sites)."""
    tr = track_arrays(params, times)
    lat = np.asarray(lat, dtype=float)[None, :]
    lon = np.asarray(lon, dtype=float)[None, :]
    clat = tr["lat"][:, None]
    clon = tr["lon"][:, None]
    d = geo.haversine(clat, clon, lat, lon)
    speed = radial_profile(tr["vmax"][:, None], tr["rmax"][:, None], d)
    radial = geo.bearing(clat, clon, lat, lon)
    turn = np.where(clat >= 0, -90.0, 90.0)
    direction = np.where(d > 0, np.mod(radial + turn, 360.0), 0.0)
    return speed, direction


# --------------------------------------------------------------------------
# scenario marginals

class Marginal:
    """Univariate distribution used to bin one storm parameter."""

    lower = -math.inf
    upper = math.inf
    tail = 0.005

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def ppf(self, q):
        raise NotImplementedError

    def edges(self, bins):
        if bins < 1:
            raise ValueError("bins must be >= 1")
        inner = np.linspace(self.ppf(self.tail), self.ppf(1.0 - self.tail), bins + 1)[1:-1]
        return np.concatenate([[self.lower], inner, [self.upper]])

    def bin(self, bins):
        """Return (masses, representatives) for ``bins`` contiguous bins."""
        e = self.edges(bins)
        cdf = np.array([0.0 if x == self.lower else 1.0 if x == self.upper else float(self.cdf(x))
                        for x in e])
        masses = np.diff(cdf)
        # finite integration limits; quad can miss a narrow peak on an open interval
        lo_q, hi_q, mid = (float(self.ppf(q)) for q in (1e-13, 1.0 - 1e-13, 0.5))
        reps = []
        for a, b, m in zip(e[:-1], e[1:], masses):
            if not m > 1e-15:
                raise DegenerateMarginal(f"bin [{a}, {b}] of {self!r} has zero mass")
            a, b = max(a, lo_q), min(b, hi_q)
            hint = [mid] if a < mid < b else None
            first, _ = integrate.quad(lambda x: x * self.pdf(x), a, b, points=hint, limit=200)
            reps.append(first / m)
        return masses, np.asarray(reps)


@dataclass(frozen=True)
class LogNormal(Marginal):
    mu: float
    sigma: float
    lower = 0.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    @property
    def _dist(self):
        return stats.lognorm(s=self.sigma, scale=math.exp(self.mu))

    def cdf(self, x):
        return self._dist.cdf(x)

    def pdf(self, x):
        return self._dist.pdf(x)

    def ppf(self, q):
        return self._dist.ppf(q)


@dataclass(frozen=True)
class Normal(Marginal):
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be > 0")

    def cdf(self, x):
        return stats.norm.cdf(x, self.mu, self.sigma)

    def pdf(self, x):
        return stats.norm.pdf(x, self.mu, self.sigma)

    def ppf(self, q):
        return stats.norm.ppf(q, self.mu, self.sigma)


@dataclass(frozen=True)
class NormalMixture(Marginal):
    """Two-component normal mixture ("bi-normal"), weight ``w1`` on the first."""

    mu1: float
    sigma1: float
    w1: float
    mu2: float
    sigma2: float

    def __post_init__(self):
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise ValueError("sigmas must be > 0")
        if not 0.0 <= self.w1 <= 1.0:
            raise ValueError("w1 must be in [0, 1]")

    def cdf(self, x):
        return (self.w1 * stats.norm.cdf(x, self.mu1, self.sigma1)
                + (1 - self.w1) * stats.norm.cdf(x, self.mu2, self.sigma2))

    def pdf(self, x):
        return (self.w1 * stats.norm.pdf(x, self.mu1, self.sigma1)
                + (1 - self.w1) * stats.norm.pdf(x, self.mu2, self.sigma2))

    def ppf(self, q):
        lo = min(self.mu1 - 12 * self.sigma1, self.mu2 - 12 * self.sigma2)
        hi = max(self.mu1 + 12 * self.sigma1, self.mu2 + 12 * self.sigma2)
        return optimize.brentq(lambda x: self.cdf(x) - q, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class Uniform(Marginal):
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("high must exceed low")

    def cdf(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.low) / (self.high - self.low), 0.0, 1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where((x >= self.low) & (x <= self.high), 1.0 / (self.high - self.low), 0.0)

    def ppf(self, q):
        return self.low + q * (self.high - self.low)

    def edges(self, bins):
        if bins < 1:
            raise ValueError("bins must be >= 1")
        return np.linspace(self.low, self.high, bins + 1)

    def bin(self, bins):
        e = self.edges(bins)
        masses = np.diff(e) / (self.high - self.low)
        return masses, 0.5 * (e[:-1] + e[1:])


DISTRIBUTIONS = {
    "lognormal": LogNormal,
    "normal": Normal,
    "normal_mixture": NormalMixture,
    "binormal": NormalMixture,
    "uniform": Uniform,
}

SCENARIO_DIMENSIONS = ("deltaP0", "vT", "heading")


@dataclass
class ScenarioSet:
    scenarios: list  # of (TyphoonParameters, probability)
    marginals: dict = field(default_factory=dict)
    bins: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def probabilities(self):
        return np.array([p for _, p in self.scenarios])


def enumerate_scenarios(marginals, bins, base):
    """Cartesian product of binned marginals for deltaP0, vT and heading.

    ``base`` supplies landfall point, K and dt; the binned representatives
    replace its deltaP0, vT and heading.  Each scenario probability is the
    product of its three bin masses.
    """
    per_dim = []
    for name in SCENARIO_DIMENSIONS:
        masses, reps = marginals[name].bin(bins.get(name, 1))
        per_dim.append(list(zip(masses, reps)))
    scenarios = []
    for (m_p, r_p), (m_v, r_v), (m_h, r_h) in itertools.product(*per_dim):
        params = replace(base, deltaP0=float(r_p), vT=float(r_v), heading=float(r_h % 360.0))
        scenarios.append((params, float(m_p * m_v * m_h)))
    return ScenarioSet(scenarios=scenarios, marginals=dict(marginals), bins=dict(bins))


def single_scenario(params):
    return ScenarioSet(scenarios=[(params, 1.0)])


# --------------------------------------------------------------------------
# file formats

def load_typhoon(path):
    """Read a typhoon configuration (TOML, keys deltaP0_hPa, heading_deg, ...)."""
    return typhoon_from_mapping(load_toml(path))


def typhoon_from_mapping(raw):
    return TyphoonParameters(
        deltaP0=float(raw["deltaP0_hPa"]),
        heading=float(raw["heading_deg"]) % 360.0,
        vT=float(raw["vT_kmh"]),
        landfall_lat=float(raw["landfall_lat"]),
        landfall_lon=float(raw["landfall_lon"]),
        K=float(raw.get("K", DEFAULT_K)),
        dt=float(raw.get("dt_min", 10.0)),
    )


def load_marginals(path):
    """Read scenario marginals: one TOML table per dimension.

    Each table has ``distribution`` (lognormal, normal, normal_mixture,
    uniform), that distribution's parameters and ``bins``.
    Returns ``(marginals, bins)`` dicts keyed by dimension.
    """
    raw = load_toml(path)
    marginals, bins = {}, {}
    for name in SCENARIO_DIMENSIONS:
        spec = dict(raw[name])
        kind = spec.pop("distribution")
        bins[name] = int(spec.pop("bins", 1))
        try:
            cls = DISTRIBUTIONS[kind]
        except KeyError:
            raise ValueError(f"unknown distribution {kind!r} for {name}") from None
        marginals[name] = cls(**{k: float(v) for k, v in spec.items()})
    return marginals, bins
