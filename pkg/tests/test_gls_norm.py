import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwtail.envelope import MomentEnvelope, TailEnvelope
from gwtail.errors import DomainError
from gwtail.gls_norm import GLSBoundaryWarning, PsiFunction, gls_norm, psi_eval
from gwtail.oracles import get_oracle


def test_psi_examples():
    assert psi_eval(0.0, 1.0) == 1.0
    assert psi_eval(0.0, 2.0) == pytest.approx(math.sqrt(2.0), abs=1e-15)
    assert psi_eval(1.0, 2.0) == pytest.approx(2.0, abs=1e-12)


def test_psi_domain():
    with pytest.raises(DomainError):
        psi_eval(0.0, 0.5)
    with pytest.raises(DomainError):
        PsiFunction(-1.0)


@given(st.floats(-0.5, 2.0))
def test_psi_asymptote(beta):
    assert abs(psi_eval(beta, 200.0) * math.e / 200.0 - 1.0) < 0.1


@settings(max_examples=30)
@given(st.floats(-0.9, 5.0), st.floats(1.0, 500.0))
def test_psi_positive(beta, p):
    assert psi_eval(beta, p) > 0


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_norm_of_defining_moments_is_one(beta):
    res = gls_norm(MomentEnvelope.from_beta(beta), PsiFunction(beta))
    assert res.norm == pytest.approx(1.0, abs=1e-12)


def test_gamma_moments_norm_one():
    m = MomentEnvelope(lambda p: math.lgamma(p + 1.0), 1.0, 400.0)
    assert gls_norm(m, PsiFunction(0.0)).norm == pytest.approx(1.0, abs=1e-12)


def test_quadrature_moments_in_unit_ball():
    m = MomentEnvelope.from_envelope(TailEnvelope(), p_max=200.0)
    assert gls_norm(m, PsiFunction(0.0), p_max=200.0).norm <= 1 + 1e-6


@pytest.mark.parametrize("a", [0.3, 2.0, 7.5])
def test_scaling_covariance(a):
    m = get_oracle("gamma3").moment_envelope(200.0)
    psi = PsiFunction(2.0)
    base = gls_norm(m, psi).norm
    assert gls_norm(m.scaled(a), psi).norm == pytest.approx(a * base, rel=1e-9)


def test_monotone_in_p_max():
    m = get_oracle("gamma:5").moment_envelope(400.0)
    psi = PsiFunction(4.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GLSBoundaryWarning)
        norms = [gls_norm(m, psi, p_max=pm).norm for pm in (10, 20, 50, 100, 200, 400)]
    assert all(b >= a - 1e-12 for a, b in zip(norms, norms[1:]))


def test_boundary_warning():
    # ratio ((p+4)/(24 p))^{1/p} increases towards 1, so the sup sits at p_max
    m = get_oracle("gamma:5").moment_envelope(400.0)
    with pytest.warns(GLSBoundaryWarning):
        res = gls_norm(m, PsiFunction(4.0), p_max=50.0)
    assert res.at_boundary and res.argmax_p == pytest.approx(50.0)


def test_gamma3_peak_at_one():
    res = gls_norm(get_oracle("gamma3").moment_envelope(200.0), PsiFunction(2.0))
    assert res.norm == pytest.approx(1.5, rel=1e-12)
    assert res.argmax_p == pytest.approx(1.0)


def test_weibull2_bound_by_brute_force():
    d = get_oracle("weibull2")
    ps = np.linspace(1.0, 200.0, 200_001)
    from scipy.special import gammaln

    brute = float(np.max(np.exp((gammaln(1 + ps / 2) - gammaln(ps + 1)) / ps)))
    assert brute == pytest.approx(d.gls_bound, rel=1e-12)
    assert gls_norm(d.moment_envelope(200.0), PsiFunction(0.0)).norm == pytest.approx(brute, rel=1e-9)


def test_requires_window():
    with pytest.raises(DomainError):
        gls_norm(MomentEnvelope.from_beta(0.0, p_max=50.0), PsiFunction(0.0), p_max=100.0)
    with pytest.raises(DomainError):
        gls_norm(MomentEnvelope.from_beta(0.0), PsiFunction(0.0), p_max=5.0)
