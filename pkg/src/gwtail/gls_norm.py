"""The ``psi_beta`` generating function and the Grand Lebesgue Space norm."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .envelope import MomentEnvelope
from .errors import DomainError
from .special_functions import log_gamma

__all__ = ["PsiFunction", "GLSResult", "psi_eval", "gls_norm", "GLSBoundaryWarning"]

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class GLSBoundaryWarning(RuntimeWarning):
    """The supremum was reached at the truncation point ``p_max``."""


def psi_eval(beta: float, p: float) -> float:
    """``psi_beta(p) = (p Gamma(p + beta))^{1/p}``."""
    if p < 1 or p + beta <= 0:
        raise DomainError(f"need p >= 1 and p + beta > 0, got p={p}, beta={beta}")
    return math.exp((math.log(p) + log_gamma(p + beta)) / p)


@dataclass(frozen=True)
class PsiFunction:
    beta: float = 0.0

    def __post_init__(self):
        if self.beta <= -1:
            raise DomainError("beta must be > -1")

    def log(self, p: float) -> float:
        return (math.log(p) + log_gamma(p + self.beta)) / p

    def __call__(self, p: float) -> float:
        return psi_eval(self.beta, p)


@dataclass(frozen=True)
class GLSResult:
    norm: float
    argmax_p: float
    at_boundary: bool = False


def gls_norm(m: MomentEnvelope, psi: PsiFunction, p_max: float = 200.0, n_grid: int = 128) -> GLSResult:
    """``sup_{1 <= p <= p_max} ||xi||_p / psi(p)``, truncated at ``p_max``.

    A geometric grid locates the peak; golden-section search refines it
    between the neighbouring grid points.  Emits :class:`GLSBoundaryWarning`
    when the peak sits at ``p_max``.
    """
    if p_max < 10:
        raise DomainError("p_max must be >= 10")
    if m.p_min > 1 or m.p_max < p_max:
        raise DomainError(f"moment envelope must cover [1, {p_max}]")

    def log_ratio(p):
        return m(p) / p - psi.log(p)

    grid = np.geomspace(1.0, p_max, n_grid)
    vals = np.array([log_ratio(p) for p in grid])
    i = int(np.argmax(vals))
    best_p, best = float(grid[i]), float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    if hi > lo:
        a, b = lo, hi
        c, d = b - _INVPHI * (b - a), a + _INVPHI * (b - a)
        fc, fd = log_ratio(c), log_ratio(d)
        while b - a > 1e-8 * b:
            if fc >= fd:
                b, d, fd = d, c, fc
                c = b - _INVPHI * (b - a)
                fc = log_ratio(c)
            else:
                a, c, fc = c, d, fd
                d = a + _INVPHI * (b - a)
                fd = log_ratio(d)
        for p, v in ((c, fc), (d, fd)):
            if v > best:
                best_p, best = float(p), float(v)
    at_boundary = best_p >= p_max * (1 - 1e-9)
    if at_boundary:
        warnings.warn(
            f"GLS supremum attained at p_max={p_max}; the true norm may be larger",
            GLSBoundaryWarning,
            stacklevel=2,
        )
    return GLSResult(math.exp(best), best_p, at_boundary)
