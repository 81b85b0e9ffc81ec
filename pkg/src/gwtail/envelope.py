"""Tail envelopes, the slowly varying factor family and moment envelopes."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DomainError

__all__ = [
    "SlowVaryFactor",
    "ScaledFactor",
    "TailEnvelope",
    "MomentEnvelope",
    "SlowVariationReport",
    "envelope_log_eval",
    "power_transform",
    "check_slow_variation",
]


def _as_float_array(t):
    arr = np.asarray(t, dtype=float)
    return arr


@dataclass(frozen=True)
class SlowVaryFactor:
    """``Q(t) = c * ln(e + t^s)^a * exp(b * ln(e + t^s)^d)`` with ``0 <= d < 1``.

    ``s`` (``inner_power``) is 1 for factors written directly; the power
    transform composes ``t -> t^{1/gamma}`` into it instead of re-deriving
    coefficients.  Using ``ln(e + .)`` keeps the factor positive at ``t = 0``.
    """

    c: float = 1.0
    a: float = 0.0
    b: float = 0.0
    d: float = 0.0
    inner_power: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c) and self.c > 0):
            raise DomainError(f"factor scale c must be > 0, got {self.c}")
        if not (0.0 <= self.d < 1.0):
            raise DomainError(f"exponent d must lie in [0, 1), got {self.d}")
        if not (math.isfinite(self.inner_power) and self.inner_power > 0):
            raise DomainError(f"inner_power must be > 0, got {self.inner_power}")
        for name in ("a", "b"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def is_constant(self) -> bool:
        return self.a == 0.0 and (self.b == 0.0 or self.d == 0.0)

    def log_eval(self, t):
        """``ln Q(t)``, vectorised over ``t >= 0``."""
        t = _as_float_array(t)
        out = np.full(t.shape, math.log(self.c) + (self.b if self.d == 0.0 else 0.0))
        if not self.is_constant:
            with np.errstate(over="ignore"):
                u = np.log(np.e + t**self.inner_power) if self.inner_power != 1.0 else np.log(np.e + t)
            u = np.where(np.isfinite(u), u, self.inner_power * np.log(np.maximum(t, 1e-300)))
            if self.a != 0.0:
                out = out + self.a * np.log(u)
            if self.b != 0.0 and self.d != 0.0:
                out = out + self.b * u**self.d
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return np.exp(self.log_eval(t))

    def compose_power(self, s: float) -> "SlowVaryFactor":
        """Factor ``t -> Q(t^s)``."""
        return replace(self, inner_power=self.inner_power * s)

    def to_dict(self) -> dict:
        out = {"c": self.c, "a": self.a, "b": self.b, "d": self.d}
        if self.inner_power != 1.0:
            out["s"] = self.inner_power
        return out

    @classmethod
    def from_dict(cls, doc: Optional[dict]) -> "SlowVaryFactor":
        doc = dict(doc or {})
        unknown = set(doc) - {"c", "a", "b", "d", "s"}
        if unknown:
            raise DomainError(f"unknown factor fields: {sorted(unknown)}")
        return cls(
            c=float(doc.get("c", 1.0)),
            a=float(doc.get("a", 0.0)),
            b=float(doc.get("b", 0.0)),
            d=float(doc.get("d", 0.0)),
            inner_power=float(doc.get("s", 1.0)),
        )


ONE = SlowVaryFactor()


@dataclass(frozen=True)
class ScaledFactor:
    """``kappa * t^r * base(t)``.

    Not slowly varying when ``r != 0``; used for factors fitted back out of
    moment sequences, where a ``sqrt(t)`` Stirling residue appears.
    """

    base: SlowVaryFactor = ONE
    log_scale: float = 0.0
    power: float = 0.0

    def log_eval(self, t):
        t = _as_float_array(t)
        with np.errstate(divide="ignore"):
            out = self.log_scale + self.power * np.log(t) + self.base.log_eval(t)
        return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TailEnvelope:
    """Capped bound ``min(1, t^theta exp(-C t^gamma) Q(t))`` valid for ``t >= t0``.

    Below ``t0`` only the trivial bound 1 is claimed, so :meth:`log_eval`
    returns 0 there.  ``t0 = 0`` means the formula holds on the whole axis.
    """

    theta: float = 0.0
    gamma_exp: float = 1.0
    c_rate: float = 1.0
    t0: float = 0.0
    q: SlowVaryFactor = ONE

    def __post_init__(self):
        if not (math.isfinite(self.theta) and self.theta > -1):
            raise DomainError(f"theta must be > -1, got {self.theta}")
        if not (math.isfinite(self.gamma_exp) and self.gamma_exp > 0):
            raise DomainError(f"gamma must be > 0, got {self.gamma_exp}")
        if not (math.isfinite(self.c_rate) and self.c_rate > 0):
            raise DomainError(f"C must be > 0, got {self.c_rate}")
        if not (math.isfinite(self.t0) and self.t0 >= 0):
            raise DomainError(f"t0 must be >= 0, got {self.t0}")

    @property
    def flags(self) -> tuple:
        return ("negative_theta",) if self.theta < 0 else ()

    def log_formula(self, t):
        """Uncapped ``theta ln t - C t^gamma + ln Q(t)``."""
        t = _as_float_array(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_t = np.log(t)
            power_term = self.theta * log_t if self.theta != 0.0 else np.zeros_like(t)
            out = power_term - self.c_rate * t**self.gamma_exp + self.q.log_eval(t)
        return out

    def log_eval(self, t):
        t = _as_float_array(t)
        if np.any(~np.isfinite(t)) or np.any(t < 0):
            raise DomainError("envelope argument must be finite and >= 0")
        out = np.minimum(0.0, self.log_formula(t))
        # theta < 0 blows up at 0, the cap handles it
        out = np.where(np.isnan(out), 0.0, out)
        if self.t0 > 0:
            out = np.where(t < self.t0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return np.exp(self.log_eval(t))

    def mode(self) -> float:
        """Maximiser of ``t^theta exp(-C t^gamma)`` (ignores ``Q``)."""
        if self.theta <= 0:
            return 0.0
        return (self.theta / (self.c_rate * self.gamma_exp)) ** (1.0 / self.gamma_exp)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "gamma": self.gamma_exp,
            "C": self.c_rate,
            "t0": self.t0,
            "q": self.q.to_dict(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TailEnvelope":
        unknown = set(doc) - {"theta", "gamma", "C", "t0", "q"}
        if unknown:
            raise DomainError(f"unknown envelope fields: {sorted(unknown)}")
        return cls(
            theta=float(doc.get("theta", 0.0)),
            gamma_exp=float(doc.get("gamma", 1.0)),
            c_rate=float(doc.get("C", 1.0)),
            t0=float(doc.get("t0", 0.0)),
            q=SlowVaryFactor.from_dict(doc.get("q")),
        )


def envelope_log_eval(env: TailEnvelope, t):
    """``ln min(1, t^theta e^{-C t^gamma} Q(t))``, computed in log-space."""
    return env.log_eval(t)


def power_transform(env: TailEnvelope) -> TailEnvelope:
    """Envelope of ``eta = xi^gamma``: ``T[eta](t) = T[xi](t^{1/gamma})``.

    The result has unit exponent, ``theta / gamma`` and the factor
    ``t -> Q(t^{1/gamma})``.
    """
    g = env.gamma_exp
    if g == 1.0:
        return env
    return TailEnvelope(
        theta=env.theta / g,
        gamma_exp=1.0,
        c_rate=env.c_rate,
        t0=env.t0**g,
        q=env.q.compose_power(1.0 / g),
    )


@dataclass(frozen=True)
class SlowVariationReport:
    max_deviation: float
    sup_ratio: float
    deviations: np.ndarray = field(repr=False)
    z_grid: np.ndarray = field(repr=False)
    indeterminate: bool = False
    trivially_constant: bool = False

    @property
    def status(self) -> str:
        if self.trivially_constant:
            return "constant"
        return "indeterminate" if self.indeterminate else "ok"

    @property
    def passed(self) -> bool:
        """Bounded ratio for ``v >= 1`` and deviation shrinking along ``z``."""
        if self.trivially_constant:
            return True
        dev = self.deviations[np.isfinite(self.deviations)]
        if dev.size < 2 or not math.isfinite(self.sup_ratio):
            return False
        return bool(dev[-1] <= dev[0])


def check_slow_variation(f, z_grid: Sequence[float], v_grid: Sequence[float]) -> SlowVariationReport:
    """Measure ``max |M(zv)/M(z) - 1|`` with ``M = ln f``.

    Grid points where ``|M(z)| < 1e-6`` are skipped and the report is marked
    indeterminate rather than dividing by ~0.  ``deviations[i]`` is the worst
    deviation at ``z_grid[i]`` (NaN where skipped).
    """
    z = np.asarray(z_grid, dtype=float)
    v = np.asarray(v_grid, dtype=float)
    if np.any(z < math.e) or np.any(v <= 0):
        raise DomainError("need z >= e and v > 0")
    m_z = np.asarray(f.log_eval(z), dtype=float)
    m_zv = np.asarray(f.log_eval(np.outer(z, v)), dtype=float)
    constant = isinstance(f, SlowVaryFactor) and f.is_constant
    ok = np.abs(m_z) >= 1e-6
    deviations = np.full(z.shape, np.nan)
    sup_ratio = float("nan")
    if np.any(ok):
        ratios = m_zv[ok] / m_z[ok, None]
        deviations[ok] = np.max(np.abs(ratios - 1.0), axis=1)
        up = v >= 1
        sup_ratio = float(np.max(ratios[:, up])) if np.any(up) else float("nan")
        max_dev = float(np.nanmax(deviations))
    else:
        max_dev = float("nan")
    return SlowVariationReport(
        max_deviation=max_dev,
        sup_ratio=sup_ratio,
        deviations=deviations,
        z_grid=z,
        indeterminate=bool(np.any(~ok)),
        trivially_constant=constant,
    )


DEFAULT_Z_GRID = tuple(10.0**k for k in range(1, 13))
DEFAULT_V_GRID = (0.5, 2.0, 10.0)


@dataclass(frozen=True, eq=False)
class MomentEnvelope:
    """A moment upper-bound function ``p -> ln m_p`` on ``[p_min, p_max]``.

    Results are memoised per ``p`` because the optimiser and the GLS scan
    revisit the same points, and quadrature-backed envelopes are not cheap.
    """

    log_moment: Callable[[float], float]
    p_min: float = 1.0
    p_max: float = 400.0
    source: str = "custom"

    def __post_init__(self):
        if not (0 < self.p_min < self.p_max):
            raise DomainError("need 0 < p_min < p_max")
        object.__setattr__(self, "_cached", lru_cache(maxsize=4096)(self.log_moment))

    def __call__(self, p: float) -> float:
        p = float(p)
        if not (self.p_min - 1e-12 <= p <= self.p_max + 1e-12):
            raise DomainError(f"p={p} outside [{self.p_min}, {self.p_max}]")
        return float(self._cached(p))

    def restrict(self, p_min: float = None, p_max: float = None) -> "MomentEnvelope":
        return MomentEnvelope(
            self.log_moment,
            p_min=self.p_min if p_min is None else p_min,
            p_max=self.p_max if p_max is None else p_max,
            source=self.source,
        )

    @classmethod
    def from_beta(cls, beta: float, p_max: float = 400.0) -> "MomentEnvelope":
        """``m_p = p Gamma(p + beta)``."""
        from .special_functions import log_gamma

        if beta <= -1:
            raise DomainError("beta must be > -1")
        return cls(
            lambda p: math.log(p) + log_gamma(p + beta),
            p_min=1.0,
            p_max=p_max,
            source=f"closed_beta(beta={beta:g})",
        )

    @classmethod
    def from_envelope(cls, env: TailEnvelope, p_max: float = 400.0, rel_tol: float = 1e-10) -> "MomentEnvelope":
        """Quadrature moments ``p int t^{p-1} env(t) dt``."""
        from .tail_to_moment import moment_quadrature

        return cls(
            lambda p: moment_quadrature(env, p, rel_tol=rel_tol).log_value,
            p_min=1.0,
            p_max=p_max,
            source="quadrature",
        )

    def scaled(self, a: float) -> "MomentEnvelope":
        """Moments of ``a * xi``: ``m_p -> a^p m_p``."""
        la = math.log(a)
        base = self.log_moment
        return MomentEnvelope(lambda p: base(p) + p * la, self.p_min, self.p_max, f"{self.source}*{a:g}")
