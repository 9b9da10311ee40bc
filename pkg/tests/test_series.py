from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radial_biharmonic.series import (
    EvenSeries,
    OriginData,
    Problem,
    SeriesOrderError,
    eval_state,
    lift_factor,
    series_pow,
    startup_series,
    taylor_coeffs,
)


def test_quartic_coefficients():
    c = taylor_coeffs(Problem(3, 0.0), OriginData(1.0, 0.0), 3)
    assert c.coeffs == pytest.approx((1.0, 0.0, 1 / 120, 0.0), abs=1e-16)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 7])
def test_linear_mode_first_coefficients(n):
    c = taylor_coeffs(Problem(n, 1.0), OriginData(1.0, 1.0), 2)
    assert c.coeffs == pytest.approx((1.0, 1 / (2 * n), 1 / (8 * n * (n + 2))), rel=1e-15)


def test_cosh_coefficients():
    c = taylor_coeffs(Problem(1, 1.0), OriginData(1.0, 1.0), 4)
    assert c.coeffs == pytest.approx([1 / math.factorial(2 * l) for l in range(5)], rel=1e-15)


def test_general_first_coefficients():
    n, alpha, u0, lap0 = 4, -0.7, 2.0, 0.3
    c = taylor_coeffs(Problem(n, alpha), OriginData(u0, lap0), 5)
    assert c[0] == u0
    assert c[1] == pytest.approx(lap0 / (2 * n), rel=1e-15)
    assert c[2] == pytest.approx(u0**alpha / (8 * n * (n + 2)), rel=1e-15)


def test_series_pow_examples():
    assert series_pow([1, 1], 2, order=2).coeffs == (1.0, 2.0, 1.0)
    assert series_pow([1, 0, 0], 0).coeffs == (1.0, 0.0, 0.0)
    assert series_pow([1, 1, 0], -1).coeffs == (1.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        series_pow([0.0, 1.0], 0.5)


@settings(max_examples=60)
@given(
    st.lists(st.integers(-5, 5), min_size=2, max_size=6),
    st.integers(min_value=0, max_value=4),
)
def test_series_pow_integer_exponent_exact(tail, k):
    # compare with exact polynomial multiplication for non-negative integer powers
    a = [Fraction(3)] + [Fraction(x) for x in tail]
    exact = [Fraction(1)]
    for _ in range(k):
        prod = [Fraction(0)] * (len(exact) + len(a) - 1)
        for i, x in enumerate(exact):
            for j, y in enumerate(a):
                prod[i + j] += x * y
        exact = prod
    K = len(a) - 1
    got = series_pow([float(x) for x in a], k).coeffs
    for g, e in zip(got, exact[: K + 1]):
        assert g == pytest.approx(float(e), rel=1e-12, abs=1e-12)


@settings(max_examples=40)
@given(
    st.integers(min_value=1, max_value=6),
    st.floats(min_value=-3.0, max_value=1.0),
    st.floats(min_value=0.2, max_value=5.0),
    st.floats(min_value=-3.0, max_value=3.0),
)
def test_recursion_consistency(n, alpha, u0, lap0):
    # applying the Delta-lift twice reproduces the series of u^alpha up to K-2
    K = 10
    s = startup_series(Problem(n, alpha), OriginData(u0, lap0), K)
    rhs = series_pow(s.u, alpha)
    for j in range(K - 1):
        lifted = s.u[j + 2] * lift_factor(j + 1, n) * lift_factor(j, n)
        assert lifted == pytest.approx(rhs[j], rel=1e-11, abs=1e-13 * max(1.0, abs(rhs[j])))


def test_order_limits():
    with pytest.raises(SeriesOrderError):
        startup_series(Problem(3, 0.5), OriginData(1, 0), 1)
    with pytest.raises(SeriesOrderError):
        startup_series(Problem(3, 0.5), OriginData(1, 0), 41)
    with pytest.raises(ValueError):
        OriginData(0.0, 1.0)
    with pytest.raises(ValueError):
        Problem(0, 1.0)


def test_eval_state_quartic_at_one():
    s = startup_series(Problem(3, 0.0), OriginData(1.0, 0.0), 3)
    st_ = eval_state(s, 1.0, check=False)
    assert (st_.u, st_.du, st_.v, st_.dv) == pytest.approx((1 + 1 / 120, 4 / 120, 1 / 6, 1 / 3), rel=1e-15)


def test_eval_state_at_origin():
    n = 4
    s = startup_series(Problem(n, -1.5), OriginData(2.0, 0.7), 8)
    st_ = eval_state(s, 0.0)
    assert (st_.r, st_.u, st_.du, st_.v, st_.dv) == (0.0, 2.0, 0.0, 2 * n * s.u[1], 0.0)


def test_eval_state_sinh_over_r():
    s = startup_series(Problem(3, 1.0), OriginData(1.0, 1.0), 8)
    assert eval_state(s, 0.5, check=False).u == pytest.approx(math.sinh(0.5) / 0.5, rel=1e-12)


@pytest.mark.parametrize(
    "n, alpha, u0, lap0",
    [(3, 0.5, 1.0, 1.0), (2, -1.0, 1.0, 0.0), (1, -1 / 3, 1.0, 0.0), (5, -2.0, 0.5, 2.0), (3, 1.0, 1.0, 1.0)],
)
def test_validity_radius_truncation(n, alpha, u0, lap0):
    p, o = Problem(n, alpha), OriginData(u0, lap0)
    s = startup_series(p, o, 8)
    richer = startup_series(p, o, 10)
    r = min(s.validity_radius(), 1.0)
    assert eval_state(s, r).u == pytest.approx(eval_state(richer, r, check=False).u, rel=1e-12)
    assert s.handoff_radius() <= 1e-2
    if math.isfinite(s.validity_radius()):
        with pytest.raises(ValueError):
            eval_state(s, 2 * s.validity_radius() + 1.0)


def test_even_series_derivative():
    e = EvenSeries([1.0, 2.0, 3.0])
    assert e(2.0) == 1 + 8 + 48
    assert e.deriv(2.0) == 2 * 2 * 2 + 4 * 3 * 8
