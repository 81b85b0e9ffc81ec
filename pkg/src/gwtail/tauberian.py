"""Numerical diagnostics for the tail/moment limit equivalence.

``|ln T(t)| / t -> 1`` holds exactly when ``||xi||_p / (p/e) -> 1``.  Each
sequence is summarised by a least-squares fit ``r = c0 + c1 ln(x)/x`` on the
upper half of the grid; ``c0`` is the limit estimate.  ``ln(x)/x`` is the
leading correction for ``t^beta e^{-t}`` tails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError

__all__ = [
    "LimitDiagnostic",
    "DualityReport",
    "default_grid",
    "fit_limit",
    "tail_ratio_sequence",
    "moment_ratio_sequence",
    "duality_check",
]

MIN_POINTS = 8


def default_grid(lo: float = 16.0, hi: float = 16384.0, n: int = 12) -> np.ndarray:
    return np.geomspace(lo, hi, n)


@dataclass(frozen=True)
class LimitDiagnostic:
    grid: np.ndarray
    ratios: np.ndarray
    limit_estimate: float
    residual_coef: float
    fit_residual: float
    kind: str = ""

    def rows(self):
        return [(float(x), float(r)) for x, r in zip(self.grid, self.ratios)]


def fit_limit(x, r):
    """Fit ``r = c0 + c1 ln(x)/x`` on the upper half; return (c0, c1, rms residual)."""
    x = np.asarray(x, dtype=float)
    r = np.asarray(r, dtype=float)
    half = x.size // 2
    xs, rs = x[half:], r[half:]
    design = np.column_stack([np.ones_like(xs), np.log(xs) / xs])
    coef, *_ = np.linalg.lstsq(design, rs, rcond=None)
    resid = rs - design @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


def _check_grid(grid):
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < MIN_POINTS:
        raise DomainError(f"need a 1-D grid with at least {MIN_POINTS} points")
    if np.any(np.diff(g) <= 0) or g[0] <= 0:
        raise DomainError("grid must be positive and strictly increasing")
    return g


def tail_ratio_sequence(log_tail: Callable, t_grid) -> LimitDiagnostic:
    """Ratios ``|ln T(t)| / t`` with a fitted limit."""
    t = _check_grid(t_grid)
    lt = np.asarray([float(log_tail(x)) for x in t])
    if np.any(lt >= 0) or np.any(~np.isfinite(lt)):
        raise DomainError("log tail must be finite and < 0 on the grid")
    ratios = np.abs(lt) / t
    c0, c1, res = fit_limit(t, ratios)
    return LimitDiagnostic(t, ratios, c0, c1, res, "tail")


def moment_ratio_sequence(m: Callable, p_grid) -> LimitDiagnostic:
    """Ratios ``||xi||_p / (p/e) = exp(ln m_p / p) e / p`` with a fitted limit."""
    p = _check_grid(p_grid)
    lm = np.asarray([float(m(x)) for x in p])
    if np.any(~np.isfinite(lm)):
        raise DomainError("log moments must be finite on the grid")
    ratios = np.exp(lm / p + 1.0 - np.log(p))
    c0, c1, res = fit_limit(p, ratios)
    return LimitDiagnostic(p, ratios, c0, c1, res, "moment")


@dataclass(frozen=True)
class DualityReport:
    tail: LimitDiagnostic
    moment: LimitDiagnostic
    discrepancy: float
    tolerance: float
    name: str = ""

    @property
    def passed(self) -> bool:
        return self.discrepancy <= self.tolerance

    @property
    def product(self) -> float:
        """``tail limit * moment limit``; 1 for any exponential-type tail."""
        return self.tail.limit_estimate * self.moment.limit_estimate


def duality_check(oracle, t_grid=None, p_grid=None, tol: float = 5e-3) -> DualityReport:
    """Run both sequences on ``oracle`` and compare the fitted limits.

    ``tol`` is added to the two fit residuals to form the acceptance band.
    """
    t_grid = default_grid() if t_grid is None else t_grid
    p_grid = default_grid() if p_grid is None else p_grid
    tail = tail_ratio_sequence(oracle.log_tail, t_grid)
    mom = moment_ratio_sequence(oracle.log_moment, p_grid)
    band = tol + tail.fit_residual + mom.fit_residual
    return DualityReport(tail, mom, abs(tail.limit_estimate - mom.limit_estimate), band, getattr(oracle, "name", ""))
