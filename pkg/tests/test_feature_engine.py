import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typhoon_resilience.feature_engine import (
    DEFAULT_RANGES, FEATURES, FeatureRange, FeatureRanges, NondegenerateRangeRequired, as_weights,
    boundary_assignments, coefficients, composite_score, correction_coefficient, normalize, rain_10min,
    score_bounds, unit_features, wind_angle,
)

weight_vectors = st.lists(st.floats(0.0, 1.0), min_size=7, max_size=7).filter(lambda w: sum(w) > 1e-3).map(
    lambda w: np.asarray(w) / sum(w))


def test_rain_intensity_spot_value():
    assert rain_10min(100.0) == pytest.approx(27.08 * 100 ** 0.6021)
    assert abs(rain_10min(100.0) - 433.4) < 0.1
    with pytest.raises(ValueError):
        rain_10min(-1.0)


def test_normalize_direction_and_clamp():
    assert normalize(30.0, 0.0, 60.0, "+") == 0.5
    assert normalize(25.0, 20.0, 50.0, "-") == pytest.approx(25 / 30)
    assert normalize(500.0, 0.0, 60.0, "+") == 1.0
    assert normalize(-5.0, 20.0, 50.0, "-") == 1.0
    with pytest.raises(NondegenerateRangeRequired):
        normalize(1.0, 5.0, 5.0, "+")


def test_feature_order_and_default_signs():
    assert FEATURES[0] == "max_wind" and FEATURES[-1] == "op_time"
    signs = dict(zip(FEATURES, (r.sign for r in DEFAULT_RANGES.ranges)))
    assert signs["design_wind"] == "-" and signs["op_time"] == "-"
    assert DEFAULT_RANGES.with_sign("op_time", "+").ranges[-1].sign == "+"
    assert FeatureRanges.default("+").positive[-1]


def test_degenerate_range_rejected():
    bad = FeatureRanges(DEFAULT_RANGES.ranges[:2] + (FeatureRange(5.0, 5.0, "+"),) + DEFAULT_RANGES.ranges[3:])
    with pytest.raises(NondegenerateRangeRequired):
        score_bounds(np.full(7, 1 / 7), bad)


def test_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        as_weights([0.2] * 7)
    with pytest.raises(ValueError):
        as_weights([-0.1, 0.3, 0.2, 0.2, 0.2, 0.1, 0.1])


@given(weight_vectors)
def test_bounds_span_zero_to_one(w):
    lo, hi = score_bounds(w)
    assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(1.0, abs=1e-12)
    worst, best = boundary_assignments()
    assert coefficients(w, worst[None, :])[1][0] == pytest.approx(1.4)
    assert coefficients(w, best[None, :])[1][0] == pytest.approx(0.9)


@given(weight_vectors, st.integers(0, 2 ** 31))
def test_coefficients_stay_in_range(w, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(DEFAULT_RANGES.lo - 10, DEFAULT_RANGES.hi + 10, size=(50, 7))
    W, k = coefficients(w, X)
    assert np.all((k >= 0.9) & (k <= 1.4))
    assert np.all((W >= -1e-12) & (W <= 1 + 1e-12))


def test_coefficient_formula():
    assert correction_coefficient(0.5, (0.0, 1.0)) == pytest.approx(1.15)
    assert correction_coefficient(0.3, (0.2, 0.6)) == pytest.approx(0.5 * 0.25 + 0.9)


def test_out_of_bounds_score_clamped(caplog):
    assert correction_coefficient(1.2, (0.0, 1.0)) == 1.4
    assert "clamping" in caplog.text


def test_composite_score_is_weighted_sum():
    w = np.array([0.4, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1])
    x = np.array([30.0, 30.0, 65.0, 90.0, 90.0, 35.0, 20.0])
    # every feature sits mid-range -> normalised 0.5
    assert composite_score(w, x)[0] == pytest.approx(0.5)


def test_wind_angle_folds():
    assert wind_angle(270.0, 90.0) == 180.0
    assert wind_angle(350.0, 10.0) == 20.0
    assert wind_angle(10.0, 350.0) == 20.0


def test_unit_features_columns():
    X = unit_features([40.0, 20.0], [90.0, 0.0], [0.0, 0.0], [10.0, 20.0], [1.0, 2.0], [100.0, 0.0], 45.0, 12.0)
    assert X.shape == (2, 7)
    assert X[0, FEATURES.index("rain_intensity")] == pytest.approx(rain_10min(100.0))
    assert X[1, FEATURES.index("rain_intensity")] == 0.0
    assert X[0, FEATURES.index("wind_angle")] == 90.0
    assert np.all(X[:, FEATURES.index("design_wind")] == 45.0)
    assert math.isclose(X[1, FEATURES.index("op_time")], 12.0)
