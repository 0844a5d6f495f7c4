import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from typhoon_resilience.ahp_decision import (
    DimensionMismatch, NonReciprocalMatrix, ahp_priority, decide, load_pairwise, select_scheme, waa_scores,
)
from typhoon_resilience.feature_engine import FEATURES
from typhoon_resilience.grid_case import bundled_path
from typhoon_resilience.importance import load_schemes

TABLE3_ORDER = ("max_wind", "rain_intensity", "altitude", "op_time", "wind_angle", "design_wind", "slope")
TABLE3_ROWS = ["1 3 4 9 5 7 5", "1/3 1 2 6 3 5 3", "1/4 1/2 1 5 2 4 2", "1/9 1/6 1/5 1 1/4 1/2 1/4",
               "1/5 1/3 1/2 4 1 3 1", "1/7 1/5 1/4 2 1/3 1 1/3", "1/5 1/3 1/2 4 1 3 1"]


def table3_matrix():
    return [[Fraction(v) for v in row.split()] for row in TABLE3_ROWS]


def test_bundled_pairwise_is_reordered():
    A = load_pairwise(bundled_path("pairwise_expert.csv"))
    raw = table3_matrix()
    for i, fi in enumerate(FEATURES):
        for j, fj in enumerate(FEATURES):
            assert A[i, j] == pytest.approx(float(raw[TABLE3_ORDER.index(fi)][TABLE3_ORDER.index(fj)]))


def test_geometric_priority_against_hand_computation():
    raw = table3_matrix()
    g = [math.prod(float(v) for v in row) ** (1 / 7) for row in raw]
    expected = {f: gi / sum(g) for f, gi in zip(TABLE3_ORDER, g)}
    pr = ahp_priority(load_pairwise(bundled_path("pairwise_expert.csv")))
    for f, q in zip(FEATURES, pr.q):
        assert q == pytest.approx(expected[f], rel=1e-12)
    assert pr.q[FEATURES.index("max_wind")] == pytest.approx(0.4083, abs=5e-5)
    assert pr.q[FEATURES.index("altitude")] == pytest.approx(0.1390, abs=5e-5)
    assert pr.cr < 0.10


@given(st.lists(st.floats(0.1, 10.0), min_size=3, max_size=9), st.sampled_from(["geometric", "column"]))
def test_consistent_matrix_recovers_weights(w, method):
    w = np.asarray(w)
    A = w[:, None] / w[None, :]
    pr = ahp_priority(A, method)
    assert np.allclose(pr.q, w / w.sum(), rtol=1e-9)
    assert pr.lambda_max == pytest.approx(len(w))
    assert pr.cr == pytest.approx(0.0, abs=1e-9)


def test_inconsistency_warning(caplog):
    A = np.array([[1, 9, 1 / 9], [1 / 9, 1, 9], [9, 1 / 9, 1]])
    assert ahp_priority(A).cr > 0.1
    assert "consistency ratio" in caplog.text


@pytest.mark.parametrize("A", [
    np.array([[1.0, 2.0], [0.4, 1.0]]),
    np.array([[1.0, 2.0, 3.0]]),
    np.array([[2.0, 1.0], [1.0, 2.0]]),
    np.array([[1.0, -1.0], [-1.0, 1.0]]),
])
def test_non_reciprocal(A):
    with pytest.raises(NonReciprocalMatrix):
        ahp_priority(A)


def test_unknown_method():
    with pytest.raises(ValueError):
        ahp_priority(np.eye(3), "eigen-ish")


def test_scores_and_dimension_check():
    Y = np.array([[0.5, 0.5], [0.9, 0.1]])
    assert np.allclose(waa_scores(Y, [0.25, 0.75]), [0.5, 0.3])
    with pytest.raises(DimensionMismatch):
        waa_scores(Y, [1.0, 0.0, 0.0])


def test_tie_break_lowest_index():
    assert select_scheme([0.3, 0.5, 0.5]) == (1, True)
    assert select_scheme([0.7, 0.5]) == (0, False)
    with pytest.raises(ValueError):
        select_scheme([])


def test_bundled_schemes_select_gini():
    schemes = load_schemes(bundled_path("weights_guangdong.csv"))
    d = decide(schemes, load_pairwise(bundled_path("pairwise_expert.csv")))
    assert d.names[d.selected] == "Scheme1" and not d.tie


def test_pairwise_label_mismatch(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text(",a,b\nb,1,2\na,1/2,1\n")
    with pytest.raises(DimensionMismatch):
        load_pairwise(p)
