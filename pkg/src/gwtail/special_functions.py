"""Log-space Gamma function and the Stirling upper bound.

Every closed-form bound in the package is assembled from :func:`log_gamma`;
``Gamma`` itself is never formed, so arguments well past 171 stay finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

__all__ = [
    "StirlingConstants",
    "STIRLING",
    "LOG_C2",
    "log_gamma",
    "stirling_log_upper",
]


@dataclass(frozen=True)
class StirlingConstants:
    """``c2 = e^{1/12} sqrt(2 pi)`` and ``ln sqrt(2 pi)``."""

    log_sqrt_2pi: float = 0.5 * math.log(2.0 * math.pi)

    @property
    def log_c2(self) -> float:
        return 1.0 / 12.0 + self.log_sqrt_2pi

    @property
    def c2(self) -> float:
        return math.exp(self.log_c2)


STIRLING = StirlingConstants()
LOG_C2 = STIRLING.log_c2


def _check_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return arr


def log_gamma(x):
    """Return ``ln Gamma(x)`` for ``x > 0`` (scalar or array).

    Scalars go through :func:`math.lgamma`, arrays through
    :func:`scipy.special.gammaln`; both are accurate to a few ulp on
    the positive axis.
    """
    arr = _check_positive(x)
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    return special.gammaln(arr)


def stirling_log_upper(x):
    """Log of ``sqrt(2 pi) x^{x-1/2} e^{-x} e^{1/(12x)}``, valid for ``x >= 1/2``.

    This dominates ``ln Gamma(x)`` and exceeds it by at most ``1/(12x)``.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.5):
        raise DomainError(f"stirling_log_upper needs x >= 1/2, got {x!r}")
    out = STIRLING.log_sqrt_2pi + (arr - 0.5) * np.log(arr) - arr + 1.0 / (12.0 * arr)
    return float(out) if out.ndim == 0 else out
