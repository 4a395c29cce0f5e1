import math

import mpmath
import numpy as np
import pytest

from dynvertex.tracy_widom import (F2Evaluator, NotConverged, airy, airy_asymptotic, airy_pair,
                                   airy_prime, airy_series, f2_cdf)


@pytest.mark.parametrize("x", [-12.5, -7.3, -2.0, 0.0, 0.7, 3.1, 6.0, 9.5, 14.0])
def test_airy_against_mpmath(x):
    ai, aip = airy_pair(x)
    ref, refp = float(mpmath.airyai(x)), float(mpmath.airyai(x, derivative=1))
    assert abs(ai - ref) <= 1e-13 * max(1.0, abs(ref)) + 1e-300
    assert abs(aip - refp) <= 1e-12 * max(1.0, abs(refp)) + 1e-300
    if x > 0:
        assert abs(ai - ref) <= 1e-12 * ref


@pytest.mark.parametrize("x", np.linspace(7.0, 8.0, 5).tolist() + [-7.0, -7.5, -8.0])
def test_series_and_asymptotic_overlap(x):
    s, sp = airy_series(x)
    a, ap = airy_asymptotic(x)
    assert abs(s - a) <= 1e-11 * max(abs(s), 1e-300) or abs(s - a) < 1e-14
    assert abs(sp - ap) <= 1e-10 * max(abs(sp), 1e-300) or abs(sp - ap) < 1e-13


def test_airy_positive_and_decreasing_on_positive_axis():
    xs = np.linspace(0.0, 20.0, 81)
    vals = [airy(x) for x in xs]
    assert all(v > 0 for v in vals)
    assert all(airy_prime(x) < 0 for x in xs)
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_airy_rejects_non_finite():
    with pytest.raises(ValueError):
        airy(math.inf)


def test_f2_limits():
    assert abs(f2_cdf(10.0) - 1.0) < 1e-10
    assert f2_cdf(50.0) == 1.0
    assert f2_cdf(-12.0) < 1e-6


@pytest.mark.parametrize("s,expected", [
    (0.0, 0.96937282835526267),
    (-2.0, 0.41322414250512255),
    (-4.0, 0.0035445535955092003),
])
def test_f2_regression_values(s, expected):
    # frozen from an independent 30-digit Nystrom evaluation built on mpmath.airyai
    # over (s, s + 16), with 48/96 (resp. 96/192) Gauss-Legendre nodes agreeing to 1e-27
    assert abs(f2_cdf(s) - expected) < 1e-9


def test_f2_monotone_on_grid():
    vals = [f2_cdf(s) for s in np.linspace(-6.0, 3.0, 60)]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_not_converged_when_orders_are_capped():
    ev = F2Evaluator(order=4, max_order=8, tol=1e-14)
    with pytest.raises(NotConverged):
        ev.evaluate(-3.0)


def test_evaluate_reports_order_and_difference():
    value, order, diff = F2Evaluator().evaluate(-2.0)
    assert 0 < value < 1 and order >= 64 and diff < 1e-9
