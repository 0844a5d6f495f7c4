import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from typhoon_resilience import geo
from typhoon_resilience.grid_case import bundled_path
from typhoon_resilience.typhoon_field import (
    DegenerateMarginal, LogNormal, Normal, NormalMixture, TyphoonParameters, Uniform, central_pressure,
    enumerate_scenarios, load_marginals, load_typhoon, peak_wind, radial_profile, radius_max_wind,
    simulation_times, single_scenario, storm_state, track_position, wind_at, wind_series,
)


def storm(**kw):
    base = dict(deltaP0=58.0, heading=292.0, vT=30.0, landfall_lat=21.8, landfall_lon=112.7)
    base.update(kw)
    return TyphoonParameters(**base)


def test_rmax_spot_value():
    # exp(2.63 - 5.086e-5 * 58^2 + 0.0395 * 21.8) by hand
    expected = math.exp(2.63 - 5.086e-5 * 3364 + 0.0395 * 21.8)
    assert radius_max_wind(58.0, 21.8) == pytest.approx(expected, rel=1e-12)
    assert abs(radius_max_wind(58.0, 21.8) - 27.66) < 0.01


def test_peak_wind_adds_half_translation_speed():
    p = storm(vT=36.0)
    assert peak_wind(p, 58.0) == pytest.approx(0.865 * 6.93 * math.sqrt(58.0) + 5.0)


def test_pressure_decay_rate_depends_on_heading():
    # due west: sin = -1, no decay; due east: 0.04 hPa/h
    assert central_pressure(storm(heading=270.0), 50.0) == pytest.approx(58.0)
    assert central_pressure(storm(heading=90.0), 10.0) == pytest.approx(57.6)
    assert central_pressure(storm(heading=90.0), 1e4) == 0.0


@given(st.floats(10, 120), st.floats(0, 359.9), st.floats(0, 300))
def test_pressure_non_increasing(dp, heading, t):
    p = storm(deltaP0=dp, heading=heading)
    ts = np.linspace(0, t, 25)
    P = central_pressure(p, ts)
    assert np.all(np.diff(P) <= 0)
    assert np.all(P >= 0)


def test_profile_continuous_at_rmax():
    vmax, rmax = 52.3, 27.66
    inside = radial_profile(vmax, rmax, rmax - 1e-12)
    at = radial_profile(vmax, rmax, rmax)
    outside = radial_profile(vmax, rmax, rmax * (1 + 1e-12))
    assert abs(at - vmax) < 1e-9
    assert abs(inside - outside) < 1e-9


@given(st.floats(20, 80), st.floats(5, 80), st.floats(1.01, 50))
def test_outer_log_log_slope(vmax, rmax, factor):
    d1, d2 = rmax * factor, rmax * factor * 1.7
    v1, v2 = radial_profile(vmax, rmax, d1), radial_profile(vmax, rmax, d2)
    slope = (math.log(v2) - math.log(v1)) / (math.log(d2) - math.log(d1))
    assert abs(slope + 0.6) < 1e-6


def test_profile_linear_inside_and_zero_at_centre():
    assert radial_profile(40.0, 20.0, 0.0) == 0.0
    assert radial_profile(40.0, 20.0, 5.0) == pytest.approx(10.0)


def test_track_moves_along_heading():
    p = storm(heading=0.0, vT=36.0)
    lat, lon = track_position(p, 2.0)
    assert lon == pytest.approx(p.landfall_lon)
    assert geo.haversine(p.landfall_lat, p.landfall_lon, lat, lon) == pytest.approx(72.0, rel=1e-6)


def test_wind_is_cyclonic_north_of_equator():
    st_ = storm_state(storm(), 0.0)
    north = geo.offset(st_.lat, st_.lon, 40.0, 0.0)
    east = geo.offset(st_.lat, st_.lon, 40.0, 90.0)
    _, d_north = wind_at(st_, *north)
    _, d_east = wind_at(st_, *east)
    # counter-clockwise: air north of the eye moves west, east of it moves north
    assert d_north == pytest.approx(270.0, abs=0.1)
    assert min(d_east, 360 - d_east) == pytest.approx(0.0, abs=0.5)


def test_wind_series_matches_pointwise():
    p = storm()
    lat = np.array([21.9, 22.3, 22.8])
    lon = np.array([112.5, 112.1, 111.8])
    times = np.array([0.0, 1.0, 2.5])
    speed, direction = wind_series(p, times, lat, lon)
    for i, t in enumerate(times):
        s = storm_state(p, t)
        for j in range(3):
            v, d = wind_at(s, lat[j], lon[j])
            assert speed[i, j] == pytest.approx(v, rel=1e-12)
            assert direction[i, j] == pytest.approx(d, abs=1e-9)


def test_simulation_times_stop_after_exit():
    p = storm()
    bbox = (21.4, 111.2, 23.3, 113.2)
    t = simulation_times(p, bbox)
    assert len(t) > 5
    assert np.allclose(np.diff(t), p.dt_hours)
    # the last centre is still within a few rmax of the box
    last = storm_state(p, t[-1])
    assert last.lon > bbox[1] - 1.5


def test_simulation_stops_when_storm_dissipates():
    # stationary storm inside the box, 0.5 hPa decaying at 0.04 hPa/h -> gone at 12.5 h
    p = storm(deltaP0=0.5, heading=90.0, vT=0.0)
    t = simulation_times(p, (21.0, 112.0, 23.0, 114.0))
    assert t[-1] < 12.5 <= t[-1] + p.dt_hours + 1e-9


@pytest.mark.parametrize("kw", [dict(deltaP0=0.0), dict(vT=-1.0), dict(heading=360.0), dict(dt=0.0)])
def test_parameter_validation(kw):
    with pytest.raises(ValueError):
        storm(**kw)


def test_bundled_typhoon_file():
    p = load_typhoon(bundled_path("mangkhut.toml"))
    assert (p.deltaP0, p.vT, p.landfall_lat, p.landfall_lon) == (58.0, 30.0, 21.8, 112.7)


def test_bundled_scenarios_sum_to_one():
    marginals, bins = load_marginals(bundled_path("scenarios.toml"))
    s = enumerate_scenarios(marginals, bins, storm())
    assert len(s) == 27
    assert abs(s.probabilities.sum() - 1.0) < 1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(2.5, 4.5), st.floats(0.05, 0.6), st.integers(1, 6))
def test_lognormal_bins(mu, sigma, n):
    m = LogNormal(mu, sigma)
    masses, reps = m.bin(n)
    e = m.edges(n)
    assert abs(masses.sum() - 1.0) < 1e-12
    assert np.all((reps > e[:-1]) & (reps < e[1:]))
    # bin means recombine to the distribution mean
    assert np.dot(masses, reps) == pytest.approx(math.exp(mu + sigma ** 2 / 2), rel=1e-6)


def test_mixture_and_uniform_bins():
    m = NormalMixture(292.0, 12.0, 0.8, 330.0, 15.0)
    masses, reps = m.bin(4)
    assert masses.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.dot(masses, reps) == pytest.approx(0.8 * 292 + 0.2 * 330, rel=1e-6)
    u = Uniform(10.0, 20.0)
    masses, reps = u.bin(4)
    assert np.allclose(masses, 0.25)
    assert np.allclose(reps, [11.25, 13.75, 16.25, 18.75])


def test_normal_single_bin_is_mean():
    masses, reps = Normal(5.0, 2.0).bin(1)
    assert masses[0] == pytest.approx(1.0)
    assert reps[0] == pytest.approx(5.0, abs=1e-8)


def test_empty_bin_is_rejected():
    m = NormalMixture(0.0, 0.1, 0.5, 1000.0, 0.1)
    with pytest.raises(DegenerateMarginal):
        m.bin(5)


def test_single_scenario():
    s = single_scenario(storm())
    assert len(s) == 1 and s.probabilities[0] == 1.0
