import math

import numpy as np
import pytest

from gwtail.envelope import MomentEnvelope, SlowVaryFactor, TailEnvelope
from gwtail.errors import DomainError
from gwtail.moment_to_tail import (
    prop21_round_trip,
    tail_chebyshev_optimized,
    tail_paper_p_eq_t,
    tail_prop21,
    tail_prop42,
    tail_stirling_form,
)
from gwtail.oracles import get_oracle
from gwtail.special_functions import LOG_C2

# brute force: min over p in [9, 10] step 1e-4 of lgamma(p+1) - p ln 10 (mpmath, 50 digits)
OPT_EXP1_T10 = -7.9339340296023943
OPT_EXP1_T10_P = 9.4958


class TestOptimized:
    def test_exp1_t10(self):
        b = tail_chebyshev_optimized(MomentEnvelope.from_beta(0.0), 10.0)
        assert b.log_value == pytest.approx(OPT_EXP1_T10, abs=1e-9)
        assert b.optimizer_p == pytest.approx(OPT_EXP1_T10_P, abs=1e-3)
        # leading-order Stirling picture
        assert b.log_value == pytest.approx(-10 + 0.5 * math.log(20 * math.pi), abs=0.01)

    def test_point_mass(self):
        a = 2.0
        m = MomentEnvelope(lambda p: p * math.log(a), 1.0, 50.0, "point_mass")
        b = tail_chebyshev_optimized(m, 5.0)
        assert b.log_value <= 50.0 * math.log(a / 5.0) + 1e-9
        assert "minimizer_at_p_max" in b.flags

    def test_cap_at_t1(self):
        b = tail_chebyshev_optimized(MomentEnvelope.from_beta(0.0), 1.0)
        assert b.log_value == 0.0

    def test_just_above_one(self):
        # p = 1 already gives 1/1.2
        b = tail_chebyshev_optimized(MomentEnvelope.from_beta(0.0), 1.2)
        assert b.log_value <= -math.log(1.2) + 1e-12

    @pytest.mark.parametrize("beta", [0.0, 1.0, 3.0])
    @pytest.mark.parametrize("t", [5.0, 10.0, 20.0, 50.0])
    def test_matches_brute_force(self, beta, t):
        m = MomentEnvelope.from_beta(beta)
        ps = np.linspace(1.0, 200.0, 400_001)
        from scipy.special import gammaln

        brute = float(np.min(np.log(ps) + gammaln(ps + beta) - ps * math.log(t)))
        assert tail_chebyshev_optimized(m, t).log_value == pytest.approx(min(brute, 0.0), abs=1e-8)


class TestClosedForms:
    def test_p_eq_t(self):
        assert tail_paper_p_eq_t(0.0, 10.0).log_value == pytest.approx(math.log(3628800 / 10**10), abs=1e-13)
        assert tail_paper_p_eq_t(0.0, 2.0).log_value == pytest.approx(math.log(0.5), abs=1e-14)
        assert tail_paper_p_eq_t(1.0, 5.0).log_value == pytest.approx(math.log(720 / 3125), abs=1e-13)

    def test_p_eq_t_flags_negative_beta(self):
        assert "negative_beta_relaxation_invalid" in tail_paper_p_eq_t(-0.5, 10.0).flags

    def test_stirling(self):
        assert tail_stirling_form(0.0, 10.0).log_value == pytest.approx(-7.846435586964971, abs=1e-13)
        assert tail_stirling_form(0.0, 10.0).log_value >= tail_paper_p_eq_t(0.0, 10.0).log_value

    @pytest.mark.parametrize("t", [20.0, 50.0, 100.0, 1000.0])
    def test_stirling_gap_is_sqrt_t(self, t):
        gap = tail_stirling_form(0.0, t).log_value - (-t) - 0.5 * math.log(t)
        assert gap == pytest.approx(LOG_C2, abs=1e-12)

    @pytest.mark.parametrize("fn", [tail_paper_p_eq_t, tail_stirling_form])
    def test_domain(self, fn):
        with pytest.raises(DomainError):
            fn(2.0, 2.5)
        with pytest.raises(DomainError):
            fn(-0.5, 1.0)

    def test_prop21(self, log_sq_factor):
        one = SlowVaryFactor()
        assert tail_prop21(0.0, one, 10.0).log_value == -10.0
        assert tail_prop21(1.0, one, 10.0).log_value == pytest.approx(math.log(10) - 10)
        assert tail_prop21(0.0, log_sq_factor, 20.0).log_value == pytest.approx(-17.722302997659456, abs=1e-12)
        with pytest.raises(DomainError):
            tail_prop21(2.0, one, 2.0)

    def test_prop42(self):
        one = SlowVaryFactor()
        exact = tail_prop42(0.0, 1.0, one, 10.0)
        assert exact.log_value == pytest.approx(tail_paper_p_eq_t(0.0, 10.0).log_value, abs=1e-12)
        st = tail_prop42(0.0, 2.0, one, 9.0, use_stirling=True)
        assert st.t == pytest.approx(3.0)
        assert st.log_value == pytest.approx(-6.899115844793884, abs=1e-12)
        assert tail_prop42(0.0, 1.0, one, 1.0).log_value == 0.0
        with pytest.raises(DomainError):
            tail_prop42(0.0, 1.0, one, 0.5)


class TestInvariants:
    @pytest.mark.parametrize("beta", [0.0, 0.5, 2.0])
    @pytest.mark.parametrize("t", [5.0, 10.0, 20.0, 50.0])
    def test_dominance_chain(self, beta, t):
        m = MomentEnvelope.from_beta(beta)
        opt = tail_chebyshev_optimized(m, t).log_value
        pe = tail_paper_p_eq_t(beta, t).log_value
        st = tail_stirling_form(beta, t).log_value
        assert opt <= pe + 1e-9
        assert pe <= st + 1e-9

    def test_negative_beta_breaks_relaxation(self):
        # t Gamma(t+beta) > Gamma(t+beta+1) when beta < 0, so the optimum sits above the relaxed form
        m = MomentEnvelope.from_beta(-0.5)
        assert tail_chebyshev_optimized(m, 10.0).log_value > tail_paper_p_eq_t(-0.5, 10.0).log_value

    @pytest.mark.parametrize("name", ["exp1", "gamma3", "weibull2", "weibull2-transformed", "exp2"])
    def test_soundness_against_oracles(self, name):
        d = get_oracle(name)
        m = d.moment_envelope(400.0)
        for t in (1.5, 2.0, 5.0, 10.0, 20.0, 50.0):
            true = d.log_tail(t)
            assert true <= tail_chebyshev_optimized(m, t).log_value + 1e-12
            if d.beta is not None and t >= d.beta + 1:
                assert true <= tail_paper_p_eq_t(d.beta, t).log_value
                assert true <= tail_stirling_form(d.beta, t).log_value

    def test_gamma3_beta_family_soundness(self):
        # T = e^{-t}(1 + t + t^2/2) and m_p = Gamma(p+3)/2 <= p Gamma(p+2) for p >= 2
        d = get_oracle("gamma3")
        for t in (2.0, 5.0, 10.0, 50.0):
            assert d.log_tail(t) <= tail_paper_p_eq_t(2.0, max(t, 3.0)).log_value or t < 3.0
            assert d.log_tail(t) <= tail_stirling_form(2.0, max(t, 3.0)).log_value or t < 3.0

    def test_weibull_prop42_soundness(self):
        d = get_oracle("weibull2")
        one = SlowVaryFactor()
        for s in (1.0, 2.0, 3.0, 5.0):
            b = tail_prop42(0.0, 2.0, one, s**2)
            assert b.t == pytest.approx(s)
            assert d.log_tail(s) <= b.log_value

    @pytest.mark.parametrize("t", [20.0, 50.0, 100.0, 200.0])
    def test_remark_gap_band(self, t):
        gap = tail_stirling_form(0.0, t).log_value - (-t) - 0.5 * math.log(t)
        assert LOG_C2 - 0.2 <= gap <= LOG_C2 + 0.2

    @pytest.mark.parametrize("env", [TailEnvelope(), TailEnvelope(theta=1.0), TailEnvelope(q=SlowVaryFactor(a=2.0))])
    def test_prop21_round_trip(self, env):
        ts = np.linspace(10.0, 100.0, 19)
        out = prop21_round_trip(env, ts)
        assert np.all(out["slack"] <= 1e-9)
        assert np.all(out["log_gap"] >= 0)
        assert np.all(out["log_gap"] <= 0.5 * np.log(ts) + 2.0)
        # the remainder over sqrt(t) is the fitted constant
        assert np.allclose(out["log_gap"] - 0.5 * np.log(ts), out["factor"].log_scale, atol=1e-9)
