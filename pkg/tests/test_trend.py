import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))
from oracles import GRID_STEP, logistic_grid, loglik, ols_exact  # noqa: E402

from trendparadox.trend import (
    SEPARATION_GUARD,
    FitError,
    distinct_bins,
    equal_width_bins,
    fit_linear,
    fit_logistic,
    fit_trend,
    quantile_bins,
    two_sided_p,
)


def test_linear_exact_fit_gives_infinite_statistic():
    f = fit_linear([0, 1, 2], [0, 1, 2])
    assert f.slope == 1.0 and f.intercept == 0.0
    assert f.statistic == math.inf and f.p_value == 0.0
    assert f.converged


def test_linear_small_closed_form():
    f = fit_linear([0, 1, 2], [0, 2, 2])
    assert f.slope == pytest.approx(1.0, abs=1e-15)
    assert f.intercept == pytest.approx(1 / 3, abs=1e-15)
    # RSS = 2/3, Sxx = 2, n - 2 = 1
    assert f.slope_stderr == pytest.approx(math.sqrt(1 / 3), rel=1e-12)


def test_linear_constant_outcome_is_flat():
    f = fit_linear([1, 2, 3, 4], [5, 5, 5, 5])
    assert f.slope == 0.0 and f.p_value == 1.0


@pytest.mark.parametrize("xs, ys, reason", [
    ([1, 2], [1, 2], "too_few"),
    ([3, 3, 3], [1, 2, 3], "constant_x"),
    ([1, 2, 3], [1, 2], "shape"),
])
def test_linear_preconditions(xs, ys, reason):
    with pytest.raises(FitError) as exc:
        fit_linear(xs, ys)
    assert exc.value.reason == reason


def test_linear_matches_exact_rationals_on_random_instances():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(3, 41))
        x = rng.normal(0, 3, n)
        y = 0.7 * x + rng.normal(0, 1, n)
        slope, intercept = ols_exact(x, y)
        f = fit_linear(x, y)
        assert abs(f.slope - float(slope)) < 1e-12
        assert abs(f.intercept - float(intercept)) < 1e-12


def test_logistic_symmetric_design_is_zero():
    f = fit_logistic([0, 0, 1, 1], [0, 1, 0, 1])
    assert abs(f.slope) < 1e-12 and abs(f.intercept) < 1e-12
    assert f.converged and f.p_value == pytest.approx(1.0)


def test_logistic_two_point_design_recovers_log_three():
    f = fit_logistic([0, 0, 1, 1, 1, 1], [1, 0, 1, 1, 1, 0])
    assert f.slope == pytest.approx(math.log(3), abs=1e-6)
    assert f.intercept == pytest.approx(0.0, abs=1e-6)
    b0, b1, _ = logistic_grid([0, 0, 1, 1, 1, 1], [1, 0, 1, 1, 1, 0])
    assert abs(b1 - math.log(3)) <= GRID_STEP and abs(b0) <= GRID_STEP


def test_logistic_separation_trips_guard():
    f = fit_logistic([-1, -1, 1, 1], [0, 0, 1, 1])
    assert not f.converged
    assert f.slope >= SEPARATION_GUARD


def test_logistic_preconditions():
    with pytest.raises(FitError) as exc:
        fit_logistic([1, 2, 3], [1, 1, 1])
    assert exc.value.reason == "one_class"
    with pytest.raises(FitError) as exc:
        fit_logistic([1, 2, 3], [0, 1, 2])
    assert exc.value.reason == "non_binary"


def test_logistic_beats_grid_oracle():
    rng = np.random.default_rng(5)
    done = 0
    while done < 40:
        n = int(rng.integers(6, 41))
        x = np.round(rng.uniform(-2, 2, n), 3)
        b0, b1 = rng.uniform(-1.5, 1.5, 2)
        y = (rng.random(n) < 1 / (1 + np.exp(-(b0 + b1 * x)))).astype(float)
        if y.min() == y.max():
            continue
        f = fit_logistic(x, y)
        if not f.converged or max(abs(f.slope), abs(f.intercept)) > 9:
            continue
        done += 1
        g0, g1, best = logistic_grid(x, y)
        assert loglik(f.intercept, f.slope, x, y) >= best - 1e-12
        assert max(abs(f.intercept - g0), abs(f.slope - g1)) <= GRID_STEP + 1e-9


def test_logistic_stderr_matches_observed_information():
    rng = np.random.default_rng(3)
    x = rng.normal(10, 4, 300)
    y = (rng.random(300) < 1 / (1 + np.exp(-(-2 + 0.2 * x)))).astype(float)
    f = fit_logistic(x, y)
    p = 1 / (1 + np.exp(-(f.intercept + f.slope * x)))
    w = p * (1 - p)
    info = np.array([[w.sum(), (w * x).sum()], [(w * x).sum(), (w * x * x).sum()]])
    assert f.slope_stderr == pytest.approx(math.sqrt(np.linalg.inv(info)[1, 1]), rel=1e-6)
    # score equations vanish at the optimum
    assert abs((y - p).sum()) < 1e-6 and abs(((y - p) * x).sum()) < 1e-5


def test_fit_trend_dispatch():
    assert fit_trend([0, 1, 2, 3], [0, 1, 0, 1], "binary").model == "logistic"
    assert fit_trend([0, 1, 2, 3], [0, 1, 0, 1], "count").model == "linear"


def test_two_sided_p():
    assert two_sided_p(0.0) == 1.0
    assert two_sided_p(1.959963984540054) == pytest.approx(0.05, rel=1e-9)
    assert two_sided_p(-3) == two_sided_p(3)
    assert two_sided_p(math.inf) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=5, max_size=30),
       st.floats(0.1, 10), st.floats(-100, 100), st.integers(0, 2**31))
def test_affine_x_preserves_sign_and_p(xs, a, b, seed):
    x = np.asarray(xs, float)
    if np.all(x == x[0]):
        return
    rng = np.random.default_rng(seed)
    y = x * 0.3 + rng.normal(0, 1, x.shape[0])
    f, g, h = fit_linear(x, y), fit_linear(a * x + b, y), fit_linear(-a * x + b, y)
    assert g.slope == pytest.approx(f.slope / a, rel=1e-6, abs=1e-9)
    assert g.p_value == pytest.approx(f.p_value, rel=1e-6, abs=1e-12)
    if f.sign:
        assert h.sign == -f.sign


def test_affine_x_logistic():
    rng = np.random.default_rng(9)
    x = rng.normal(0, 1, 200)
    y = (rng.random(200) < 1 / (1 + np.exp(-x))).astype(float)
    f = fit_logistic(x, y)
    g = fit_logistic(0.25 * x + 3, y)
    h = fit_logistic(-2 * x, y)
    assert g.slope == pytest.approx(f.slope / 0.25, rel=1e-6)
    assert g.p_value == pytest.approx(f.p_value, rel=1e-6)
    assert h.sign == -f.sign


# -- binning -------------------------------------------------------------------

def test_quantile_median_split():
    b = quantile_bins(np.arange(1, 9), 2)
    assert b.k_effective == 2
    assert list(b.counts()) == [4, 4]
    assert b.labels == ("[1, 4.5)", "[4.5, 8]")


def test_quantile_constant_values_collapse():
    b = quantile_bins([3.0] * 10, 5)
    assert b.k_requested == 5 and b.k_effective == 1
    assert list(b.counts()) == [10]


def test_quantile_heavy_tail_sizes():
    v = np.random.default_rng(0).pareto(1.2, 1000)
    b = quantile_bins(v, 5)
    assert b.k_effective == 5
    # sort-based count: bin i holds the values between the i-th and (i+1)-th 200-blocks
    s = np.sort(v)
    assert all(150 <= c <= 250 for c in b.counts())
    assert b.counts()[0] == np.count_nonzero(s < b.edges[1])


def test_quantile_errors():
    with pytest.raises(ValueError):
        quantile_bins([], 3)
    with pytest.raises(ValueError):
        quantile_bins([1, 2], 0)


def test_equal_width_and_distinct():
    b = equal_width_bins([0, 1, 2, 3, 4, 10], 2)
    assert list(b.counts()) == [5, 1]
    d = distinct_bins(["b", "a", "b"])
    assert d.labels == ("a", "b") and list(d.assignment) == [1, 0, 1]
    d = distinct_bins(np.array([3, 1, 3]))
    assert d.labels == ("1", "3")


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=200),
       st.integers(1, 12))
@example([0.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0], 2)
def test_quantile_partition(values, k):
    v = np.asarray(values)
    b = quantile_bins(v, k)
    assert b.assignment.shape == v.shape
    assert b.counts().sum() == v.shape[0]
    assert 1 <= b.k_effective <= k
    assert list(b.edges) == sorted(b.edges)
    lo = np.asarray(b.edges)[b.assignment]
    assert np.all(v >= lo)
    # rows below each interior edge sit within one tie block (plus rounding) of j*n/k
    _, ties = np.unique(v, return_counts=True)
    if b.k_effective == k:
        for j, e in enumerate(b.edges[1:-1], start=1):
            assert abs(np.sum(v < e) - j * v.shape[0] / k) <= ties.max() + 1
