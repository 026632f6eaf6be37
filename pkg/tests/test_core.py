import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from specopt.core import (OneSidedSlopes, angular_mean, optimality_certificate,
                          specular_directional, zero_direction_specular)
from specopt.exceptions import DomainError

finite = st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False)


def mp_angular_mean(a, b):
    mpmath.mp.dps = 50
    a, b = mpmath.mpf(a), mpmath.mpf(b)
    ca, cb = 1 / mpmath.sqrt(1 + a * a), 1 / mpmath.sqrt(1 + b * b)
    return (a * ca + b * cb) / (ca + cb)


def max0_limit(h):
    # limit definition on f(x) = max(x, 0) at 0, v = 1, by hand
    dq_plus, dq_minus = h / h, 0.0 / h
    nu = math.hypot(h, 0.0)
    nv = math.hypot(h, h)
    return (dq_plus * nu + dq_minus * nv) / (nu + nv)


def test_opposite_slopes_cancel():
    assert angular_mean(1.0, -1.0) == 0.0


def test_equal_slopes():
    assert angular_mean(2.5, 2.5) == 2.5


def test_one_zero_matches_limit_and_closed_form():
    closed = 1.0 / (1.0 + math.sqrt(2.0))
    assert abs(max0_limit(1e-6) - closed) < 1e-12
    assert angular_mean(1.0, 0.0) == pytest.approx(0.41421356237309503, abs=1e-15)
    assert angular_mean(1.0, 0.0) == pytest.approx(closed, abs=1e-15)


def test_three_one_high_precision():
    ref = float(mp_angular_mean(3, 1))
    assert ref == pytest.approx(1.6180339887498947, abs=1e-15)
    assert angular_mean(3.0, 1.0) == pytest.approx(ref, abs=1e-15)


def test_two_zero_is_inverse_golden_ratio():
    assert angular_mean(2.0, 0.0) == pytest.approx(2 / (1 + math.sqrt(5)), abs=1e-15)
    assert angular_mean(2.0, 0.0) == pytest.approx(float(mp_angular_mean(2, 0)), abs=1e-15)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(DomainError):
        angular_mean(bad, 0.0)
    with pytest.raises(DomainError):
        angular_mean(0.0, bad)


def test_vectorized_and_large_slopes():
    alpha = np.array([1.0, 1e9, -1e12, 3.0])
    beta = np.array([-1.0, 1e9, 1e12, 1.0])
    out = angular_mean(alpha, beta)
    assert out.shape == (4,)
    assert out[0] == 0.0 and out[1] == 1e9 and abs(out[2]) < 1e-2
    # steep kink stays between its arguments and matches high precision
    a = angular_mean(1e9, 0.0)
    assert a == pytest.approx(float(mp_angular_mean(1e9, 0)), rel=1e-12)


def test_specular_directional_examples():
    assert specular_directional(OneSidedSlopes(1.0, -1.0), 1.0) == 0.0
    assert specular_directional(OneSidedSlopes(2.0, 2.0), 5.0) == 2.0
    assert specular_directional((1.0, 0.0), 1.0) == pytest.approx(1 / (1 + math.sqrt(2)), abs=1e-15)
    with pytest.raises(DomainError):
        specular_directional((1.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        specular_directional((1.0, 0.0), -2.0)


def test_slopes_validation():
    with pytest.raises(DomainError):
        OneSidedSlopes(math.nan, 0.0)
    with pytest.raises(DomainError):
        OneSidedSlopes(-1.0, 1.0).check_convex()
    OneSidedSlopes(1.0, -1.0).check_convex()


def test_zero_direction():
    assert zero_direction_specular() == 0.0


def test_certificate_examples():
    c = optimality_certificate([0.0, 0.0, 0.0])
    assert c.sum_bound_ok and c.sum_value == 0.0 and c.bound == pytest.approx(math.sqrt(3))
    c = optimality_certificate([1.0, 1.0, 1.0, 1.0])
    assert not c.sum_bound_ok and c.sum_value == 4.0 and c.bound == 2.0
    assert optimality_certificate([2.0], tol=0.0).sum_bound_ok is False
    with pytest.raises(DomainError):
        optimality_certificate([])
    with pytest.raises(DomainError):
        optimality_certificate([math.nan])


@given(finite, finite)
def test_symmetry(a, b):
    assert angular_mean(a, b) == angular_mean(b, a)


@given(finite, finite)
def test_betweenness(a, b):
    assert min(a, b) <= angular_mean(a, b) <= max(a, b)


@given(finite)
def test_zero_line(a):
    assert abs(angular_mean(a, -a)) <= 1e-14


@given(finite)
def test_fixed_point(a):
    assert abs(angular_mean(a, a) - a) <= 1e-14 * abs(a)


@given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(1e-3, 1e3),
       st.floats(1e-6, 100.0))
def test_scaling_consistency(p, m, vn, c):
    base = specular_directional((p, m), vn)
    scaled = specular_directional((c * p, c * m), c * vn)
    assert scaled == pytest.approx(c * base, rel=1e-12, abs=1e-12 * (abs(p) + abs(m)) * c)


@given(finite, finite, finite)
def test_monotone_in_first_argument(a1, a2, b):
    lo, hi = min(a1, a2), max(a1, a2)
    # roundoff slack relative to the magnitudes involved
    slack = 1e-14 * (abs(lo) + abs(hi) + abs(b))
    assert angular_mean(lo, b) <= angular_mean(hi, b) + slack
