"""Tail bounds from moment information.

Closed forms follow from Markov's inequality ``T(t) <= t^{-p} m_p`` at a fixed
choice of ``p``; :func:`tail_chebyshev_optimized` takes the infimum over ``p``
numerically.  All values are natural logs capped at 0 (probability 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .envelope import MomentEnvelope, ScaledFactor, SlowVaryFactor, TailEnvelope
from .errors import DomainError
from .special_functions import LOG_C2, log_gamma

__all__ = [
    "TailBound",
    "tail_chebyshev_optimized",
    "tail_paper_p_eq_t",
    "tail_stirling_form",
    "tail_prop21",
    "tail_prop42",
    "fit_moment_condition_factor",
    "prop21_round_trip",
]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TailBound:
    t: float
    log_value: float
    method: str
    optimizer_p: Optional[float] = None
    flags: tuple = ()
    params: dict = field(default_factory=dict)

    def __float__(self):
        return self.log_value


def _cap(x: float) -> float:
    return min(0.0, x)


def _golden(h, lo, hi, rel_tol):
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    hc, hd = h(c), h(d)
    while (b - a) > rel_tol * max(abs(a), abs(b), 1e-300):
        if hc <= hd:
            b, d, hd = d, c, hc
            c = b - _INVPHI * (b - a)
            hc = h(c)
        else:
            a, c, hc = c, d, hd
            d = a + _INVPHI * (b - a)
            hd = h(d)
    x = 0.5 * (a + b)
    return x, h(x)


def tail_chebyshev_optimized(m: MomentEnvelope, t: float, p_tol: float = 1e-6) -> TailBound:
    """``min(0, inf_p [ln m_p - p ln t])`` over the envelope's ``p`` domain.

    The objective is convex when ``ln m_p`` is; a 64-point geometric scan
    brackets the minimum before golden-section refinement, which guards
    against mild non-convexity in quadrature-backed envelopes.
    """
    if not t > 1:
        if t > 0:
            return TailBound(t, 0.0, "optimized", None, ("t_le_1_capped",))
        raise DomainError("t must be > 0")
    log_t = math.log(t)

    def h(p):
        return m(p) - p * log_t

    grid = np.geomspace(m.p_min, m.p_max, 64)
    vals = np.array([h(p) for p in grid])
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    p_star, best = _golden(h, lo, hi, p_tol)
    if vals[i] < best:
        p_star, best = float(grid[i]), float(vals[i])
    flags = ()
    if p_star >= m.p_max * (1 - 1e-6):
        flags = ("minimizer_at_p_max",)
    return TailBound(t, _cap(float(best)), "optimized", float(p_star), flags)


def _check_beta_t(beta, t):
    if beta <= -1:
        raise DomainError("beta must be > -1")
    if t < beta + 1 or t <= 1:
        raise DomainError(f"need t >= beta + 1 and t > 1, got t={t}, beta={beta}")


def tail_paper_p_eq_t(beta: float, t: float) -> TailBound:
    """``t^{-t} Gamma(t + beta + 1)``: Markov at ``p = t`` under ``m_p <= p Gamma(p+beta)``.

    The relaxation ``t Gamma(t+beta) <= Gamma(t+beta+1)`` behind this form
    only holds for ``beta >= 0``; negative ``beta`` is flagged.
    """
    _check_beta_t(beta, t)
    value = -t * math.log(t) + log_gamma(t + beta + 1.0)
    flags = ("negative_beta_relaxation_invalid",) if beta < 0 else ()
    return TailBound(t, _cap(value), "paper_p_eq_t", t, flags, {"beta": beta})


def tail_stirling_form(beta: float, t: float) -> TailBound:
    """``c2 (t + beta)^{beta + 1/2} e^{-t}``."""
    _check_beta_t(beta, t)
    value = LOG_C2 + (beta + 0.5) * math.log(t + beta) - t
    return TailBound(t, _cap(value), "stirling_form", None, (), {"beta": beta})


def tail_prop21(beta: float, l_factor, t: float) -> TailBound:
    """``t^beta e^{-t} L(t)`` for ``t >= beta + 1``.

    Valid when ``m_p <= (p+beta)^{p+beta} e^{-(p+beta)} L(p+beta)``; Markov
    is applied at ``p = t - beta``.  ``l_factor`` is anything with a
    ``log_eval`` method.
    """
    if t < beta + 1:
        raise DomainError(f"need t >= beta + 1, got t={t}, beta={beta}")
    value = beta * math.log(t) - t + float(l_factor.log_eval(t))
    return TailBound(t, _cap(value), "prop21_L", t - beta, (), {"beta": beta})


def tail_prop42(theta: float, gamma_exp: float, q_factor: SlowVaryFactor, t: float, use_stirling: bool = False) -> TailBound:
    """Bound on ``T[xi](s)`` at ``s = t^{1/gamma}`` from the general moment estimate.

    Exact form: ``t * t^{-t} Gamma(t + theta/gamma) Q(t + theta/gamma)``.
    Stirling form: ``c2 t^{1/2} e^{-t} (t + theta/gamma)^{theta/gamma} Q(t + theta/gamma)``.
    """
    if t < 1:
        raise DomainError(f"need t >= 1, got {t}")
    k = theta / gamma_exp
    x = t + k
    if x <= 0:
        raise DomainError("t + theta/gamma must be > 0")
    log_q = float(q_factor.log_eval(x))
    if use_stirling:
        value = LOG_C2 + 0.5 * math.log(t) - t + k * math.log(x) + log_q
        method = "prop42_stirling"
    else:
        value = math.log(t) - t * math.log(t) + log_gamma(x) + log_q
        method = "prop42_general"
    s = t ** (1.0 / gamma_exp)
    return TailBound(s, _cap(value), method, gamma_exp * t, (), {"theta": theta, "gamma": gamma_exp, "t_transformed": t})


def fit_moment_condition_factor(m: MomentEnvelope, beta: float, base: SlowVaryFactor, p_grid) -> ScaledFactor:
    """Smallest ``kappa`` with ``m_p <= s^s e^{-s} kappa sqrt(s) L(s)``, ``s = p + beta``, on ``p_grid``.

    The ``sqrt(s)`` term is the Stirling residue of ``p Gamma(p + beta)``;
    without it no constant multiple of a slowly varying ``L`` can dominate.
    """
    p = np.asarray(p_grid, dtype=float)
    s = p + beta
    log_m = np.array([m(x) for x in p])
    resid = log_m - (s * np.log(s) - s) - 0.5 * np.log(s) - base.log_eval(s)
    return ScaledFactor(base=base, log_scale=float(np.max(resid)), power=0.5)


def prop21_round_trip(env: TailEnvelope, t_grid, p_grid=None, rel_tol: float = 1e-10) -> dict:
    """Envelope -> quadrature moments -> fitted factor -> tail bound.

    Returns the fitted factor, the moment-condition slack on ``p_grid`` (all
    entries ``<= 0`` means the condition holds there), and the log-gap
    between the re-derived tail bound and the original envelope on ``t_grid``.
    """
    if env.gamma_exp != 1.0 or env.c_rate != 1.0:
        raise DomainError("round trip needs gamma = 1 and C = 1")
    beta = env.theta
    t_grid = np.asarray(t_grid, dtype=float)
    if p_grid is None:
        p_grid = np.unique(np.concatenate([np.arange(1.0, 201.0), t_grid - beta]))
    p_grid = np.asarray(p_grid, dtype=float)
    m = MomentEnvelope.from_envelope(env, p_max=float(np.max(p_grid)), rel_tol=rel_tol)
    factor = fit_moment_condition_factor(m, beta, env.q, p_grid)
    s = p_grid + beta
    slack = np.array([m(p) for p in p_grid]) - (s * np.log(s) - s + factor.log_eval(s))
    bounds = [tail_prop21(beta, factor, t) for t in t_grid]
    gap = np.array([b.log_value for b in bounds]) - env.log_eval(t_grid)
    return {"factor": factor, "slack": slack, "bounds": bounds, "log_gap": gap}
