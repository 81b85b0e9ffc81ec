import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwtail.errors import DomainError
from gwtail.special_functions import LOG_C2, STIRLING, log_gamma, stirling_log_upper

mpmath.mp.dps = 40


def test_log_gamma_trivial_points():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == 0.0


def test_log_gamma_factorial():
    # 9! by integer product
    assert log_gamma(10.0) == pytest.approx(math.log(math.prod(range(1, 10))), rel=1e-14)
    assert log_gamma(10.0) == pytest.approx(12.8018275, abs=1e-7)


def test_log_gamma_half():
    assert log_gamma(0.5) == pytest.approx(0.57236494292470008707, rel=1e-14)


@pytest.mark.parametrize("x", np.geomspace(1e-3, 1e6, 60))
def test_log_gamma_against_mpmath(x):
    ref = float(mpmath.loggamma(mpmath.mpf(float(x))))
    got = log_gamma(float(x))
    # relative where the value is away from the zeros at 1 and 2
    assert abs(got - ref) <= 1e-12 * max(abs(ref), 1.0)


def test_log_gamma_array_and_large():
    xs = np.array([0.5, 1.0, 171.0, 1e6])
    out = log_gamma(xs)
    assert out.shape == xs.shape and np.all(np.isfinite(out))


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_log_gamma_domain(bad):
    with pytest.raises(DomainError):
        log_gamma(bad)


def test_c2_value():
    assert STIRLING.c2 == pytest.approx(2.7244644223408455, rel=1e-15)
    assert LOG_C2 == pytest.approx(1 / 12 + 0.5 * math.log(2 * math.pi), abs=1e-16)


def test_stirling_examples():
    assert stirling_log_upper(1.0) == pytest.approx(0.0022718665380060751, abs=1e-15)
    assert stirling_log_upper(1.0) > log_gamma(1.0)
    gap10 = stirling_log_upper(10.0) - log_gamma(10.0)
    assert 0 <= gap10 <= 1 / 120
    gap100 = stirling_log_upper(100.0) - log_gamma(100.0)
    assert 0 <= gap100 <= 1 / 1200


def test_stirling_domain():
    with pytest.raises(DomainError):
        stirling_log_upper(0.4)


@given(st.floats(min_value=0.5, max_value=1e6))
def test_stirling_sandwich(x):
    lg = log_gamma(x)
    up = stirling_log_upper(x)
    tol = 1e-12 * max(1.0, abs(lg))
    assert lg <= up + tol
    assert up <= lg + 1 / (12 * x) + tol


def test_recurrence_on_log_grid():
    x = np.geomspace(0.5, 1e5, 1000)
    lhs = log_gamma(x + 1) - log_gamma(x)
    rhs = np.log(x)
    scale = np.maximum(np.abs(rhs), 1.0)
    assert np.all(np.abs(lhs - rhs) <= 1e-10 * scale)


@settings(max_examples=50)
@given(st.floats(min_value=1e-3, max_value=1e4), st.floats(min_value=1e-3, max_value=1.0))
def test_convexity(x0, h):
    vals = log_gamma(np.array([x0, x0 + h, x0 + 2 * h]))
    assert vals[0] - 2 * vals[1] + vals[2] >= -1e-12 * max(1.0, abs(vals[1]))
