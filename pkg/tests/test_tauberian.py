import math

import numpy as np
import pytest

from gwtail.errors import DomainError
from gwtail.oracles import exponential, get_oracle
from gwtail.tauberian import (
    default_grid,
    duality_check,
    fit_limit,
    moment_ratio_sequence,
    tail_ratio_sequence,
)


def test_pure_exponential_tail():
    d = tail_ratio_sequence(lambda t: -t, default_grid())
    assert np.allclose(d.ratios, 1.0)
    assert d.limit_estimate == pytest.approx(1.0, abs=1e-12)


def test_power_corrected_tail():
    t = 2.0 ** np.arange(4, 15)
    d = tail_ratio_sequence(lambda x: 2 * math.log(x) - x, t)
    assert np.allclose(d.ratios, 1 - 2 * np.log(t) / t)
    assert abs(d.limit_estimate - 1.0) < 1e-3
    assert d.residual_coef == pytest.approx(-2.0, abs=1e-8)


def test_rate_two_tail():
    d = tail_ratio_sequence(lambda t: -2 * t, default_grid())
    assert d.limit_estimate == pytest.approx(2.0, abs=1e-12)


def test_moment_ratio_examples():
    exact = moment_ratio_sequence(lambda p: p * (math.log(p) - 1), default_grid())
    assert np.allclose(exact.ratios, 1.0)
    double = moment_ratio_sequence(lambda p: p * (math.log(2 * p) - 1), default_grid())
    assert double.limit_estimate == pytest.approx(2.0, abs=1e-12)


def test_moment_ratio_gamma():
    grid = np.geomspace(10.0, 16384.0, 12)
    d = moment_ratio_sequence(lambda p: math.lgamma(p + 1), grid)
    assert d.ratios[0] == pytest.approx(1.2310360898928973, rel=1e-12)
    assert abs(d.limit_estimate - 1.0) < 1e-3
    approx = (2 * math.pi * grid) ** (1 / (2 * grid))
    assert np.allclose(d.ratios, approx, rtol=1e-2)


def test_degenerate_grid():
    with pytest.raises(DomainError):
        tail_ratio_sequence(lambda t: -t, [16, 32, 64])
    with pytest.raises(DomainError):
        tail_ratio_sequence(lambda t: -t, np.linspace(10, 1, 10))


def test_tail_must_be_below_one():
    with pytest.raises(DomainError):
        tail_ratio_sequence(lambda t: 0.0, default_grid())


@pytest.mark.parametrize("name", ["exp1", "gamma3", "weibull2-transformed"])
def test_duality_on_oracles(name):
    rep = duality_check(get_oracle(name), default_grid(), default_grid())
    assert rep.passed
    assert abs(rep.tail.limit_estimate - 1) < 5e-3
    assert abs(rep.moment.limit_estimate - 1) < 5e-3


def test_gamma3_discrepancy():
    rep = duality_check(get_oracle("gamma3"))
    assert rep.discrepancy <= 5e-3


@pytest.mark.parametrize("rate", [0.5, 1.0, 2.0])
def test_limit_product_is_one(rate):
    rep = duality_check(exponential(rate))
    assert rep.tail.limit_estimate == pytest.approx(rate, abs=1e-9)
    assert rep.moment.limit_estimate == pytest.approx(1 / rate, rel=5e-3)
    assert rep.product == pytest.approx(1.0, abs=5e-3)


def test_non_unit_rate_fails_plain_duality():
    assert not duality_check(exponential(2.0)).passed


@pytest.mark.parametrize("n", [12, 24, 48])
def test_refinement_does_not_blow_up_residual(n):
    d = get_oracle("gamma3")
    coarse = moment_ratio_sequence(d.log_moment, default_grid(n=n))
    fine = moment_ratio_sequence(d.log_moment, default_grid(n=2 * n))
    assert fine.fit_residual <= 2 * coarse.fit_residual
    coarse_t = tail_ratio_sequence(d.log_tail, default_grid(n=n))
    fine_t = tail_ratio_sequence(d.log_tail, default_grid(n=2 * n))
    assert fine_t.fit_residual <= 2 * coarse_t.fit_residual


def test_fit_limit_recovers_model():
    x = np.geomspace(10, 1e4, 20)
    c0, c1, res = fit_limit(x, 0.7 + 3.0 * np.log(x) / x)
    assert (c0, c1) == pytest.approx((0.7, 3.0), abs=1e-10)
    assert res < 1e-12
