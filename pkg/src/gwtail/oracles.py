"""Exact ground-truth distributions, inverse-tail sampling and Monte Carlo moments.

Sampling uses numpy's ``PCG64`` bit generator seeded with the integer seed
(``numpy.random.Generator(PCG64(seed))``).  Sharded sampling seeds shard
``i`` with ``seed + i`` and concatenates shards in index order.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln, logsumexp, xlogy

from .envelope import MomentEnvelope, TailEnvelope
from .errors import BracketError, DomainError
from .quadrature import adaptive_integrate

__all__ = [
    "OracleDistribution",
    "SampleBatch",
    "exponential",
    "erlang",
    "weibull",
    "from_envelope",
    "get_oracle",
    "ORACLE_NAMES",
    "quantile",
    "sample",
    "empirical_moment",
    "write_batch_csv",
    "read_batch_csv",
]

QUANTILE_CEILING = 1e6


@dataclass(frozen=True, eq=False)
class OracleDistribution:
    """A distribution with an exactly known tail.

    ``beta`` is set when the moments satisfy ``m_p <= p Gamma(p + beta)``
    (so the beta-family closed forms apply); ``gls_bound`` is the exact
    supremum of ``||xi||_p / psi_beta(p)`` where it is known analytically.
    """

    name: str
    log_tail_fn: Callable
    log_moment_fn: Optional[Callable] = None
    scale: float = 1.0
    beta: Optional[float] = None
    gls_beta: Optional[float] = None
    gls_bound: Optional[float] = None
    envelope: Optional[TailEnvelope] = None
    transformed_from: Optional[str] = None

    def log_tail(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("tail argument must be >= 0")
        out = np.where(t > 0, self.log_tail_fn(np.where(t > 0, t, 1.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def log_moment(self, p: float) -> float:
        if self.log_moment_fn is not None:
            return float(self.log_moment_fn(p))
        return self.log_moment_quadrature(p)

    def log_moment_quadrature(self, p: float, rel_tol: float = 1e-10) -> float:
        """``ln(p int t^{p-1} T(t) dt)`` straight from the exact tail."""
        if not p > 0:
            raise DomainError("p must be > 0")
        if p < 1:
            inv = 1.0 / p
            res = adaptive_integrate(lambda w: self.log_tail(np.asarray(w) ** inv), 0.0, math.inf,
                                     rel_tol=rel_tol, tail_scale=self.scale**p)
            return res.log_value
        peak = self._moment_peak(p)
        pm1 = p - 1.0

        def logf(t):
            t = np.asarray(t, dtype=float)
            with np.errstate(divide="ignore"):
                return (pm1 * np.log(t) if pm1 else 0.0) + self.log_tail(t)

        res = adaptive_integrate(logf, 0.0, math.inf, rel_tol=rel_tol, points=[peak], tail_scale=max(peak, self.scale))
        return math.log(p) + res.log_value

    def _moment_peak(self, p):
        grid = np.geomspace(1e-6 * self.scale, 1e6 * self.scale, 2000)
        with np.errstate(divide="ignore"):
            vals = (p - 1.0) * np.log(grid) + self.log_tail(grid)
        return float(grid[int(np.argmax(vals))])

    def moment_envelope(self, p_max: float = 400.0) -> MomentEnvelope:
        return MomentEnvelope(self.log_moment, p_min=1.0, p_max=p_max, source=f"oracle:{self.name}")


def exponential(rate: float = 1.0, name: Optional[str] = None) -> OracleDistribution:
    if rate <= 0:
        raise DomainError("rate must be > 0")
    lr = math.log(rate)
    return OracleDistribution(
        name=name or f"exp:{rate:g}",
        log_tail_fn=lambda t: -rate * t,
        log_moment_fn=lambda p: gammaln(p + 1.0) - p * lr,
        scale=1.0 / rate,
        beta=0.0 if rate >= 1 else None,
        gls_beta=0.0,
        gls_bound=1.0 / rate,
        envelope=TailEnvelope(c_rate=rate),
    )


def erlang(k: int, rate: float = 1.0, name: Optional[str] = None) -> OracleDistribution:
    """Gamma law with integer shape ``k``: ``T(t) = e^{-rt} sum_{j<k} (rt)^j / j!``."""
    if int(k) != k or k < 1:
        raise DomainError("shape must be a positive integer")
    if rate <= 0:
        raise DomainError("rate must be > 0")
    k = int(k)
    j = np.arange(k, dtype=float)
    lgj = gammaln(j + 1.0)
    lgk = math.lgamma(k)
    lr = math.log(rate)

    # 1/j! and (k-1)!/j! for the two branches of the partial exponential sum
    inv_fact = np.exp(-lgj)
    rel_fact = np.exp(lgj[-1] - lgj)

    def log_tail(t):
        x = rate * np.asarray(t, dtype=float)
        small = x < 1.0
        xs = np.where(small, x, 1.0)
        xl = np.where(small, 1.0, x)
        acc_s = np.zeros_like(x)
        acc_l = np.zeros_like(x)
        inv_xl = 1.0 / xl
        for i in range(k):
            # small: sum x^j/j!   large: sum x^{j-(k-1)} (k-1)!/j!
            acc_s = acc_s * xs + inv_fact[k - 1 - i]
            acc_l = acc_l * inv_xl + rel_fact[i]
        log_sum = np.where(small, np.log(acc_s), (k - 1) * np.log(xl) - lgj[-1] + np.log(acc_l))
        return -x + log_sum

    # m_p = Gamma(p+k)/Gamma(k) <= p Gamma(p+k-1) fails at small p, so the
    # beta-family bounds are not applied.  Against psi_{k-1} the ratio is
    # ((p+k-1)/(p Gamma(k)))^{1/p} / rate: k/Gamma(k) at p = 1, -> 1 as p -> inf.
    return OracleDistribution(
        name=name or f"gamma:{k}",
        log_tail_fn=log_tail,
        log_moment_fn=lambda p: gammaln(p + k) - lgk - p * lr,
        scale=max(1.0, float(k)) / rate,
        beta=None,
        gls_beta=float(k - 1),
        gls_bound=max(k / math.gamma(k), 1.0) / rate,
    )


def weibull(shape: float, rate: float = 1.0, name: Optional[str] = None) -> OracleDistribution:
    """``T(t) = exp(-rate t^shape)``."""
    if shape <= 0 or rate <= 0:
        raise DomainError("shape and rate must be > 0")
    lr = math.log(rate)
    return OracleDistribution(
        name=name or f"weibull:{shape:g}",
        log_tail_fn=lambda t: -rate * np.asarray(t, dtype=float) ** shape,
        log_moment_fn=lambda p: gammaln(1.0 + p / shape) - (p / shape) * lr,
        scale=rate ** (-1.0 / shape),
        # ((Gamma(1+p/s))/Gamma(1+p))^{1/p} peaks at p = 1 for s >= 1
        gls_beta=0.0 if (shape >= 1 and rate == 1.0) else None,
        gls_bound=math.gamma(1.0 + 1.0 / shape) if (shape >= 1 and rate == 1.0) else None,
        envelope=TailEnvelope(gamma_exp=shape, c_rate=rate),
    )


def from_envelope(env: TailEnvelope, name: str = "envelope") -> OracleDistribution:
    """Treat the envelope formula as an exact tail.

    The formula is replaced by its running supremum to the right, so the
    result is nonincreasing; where the formula peaks below 1 this leaves an
    atom at 0.  The ``t0`` plateau is ignored.  Moments come from quadrature.
    """
    bare = TailEnvelope(env.theta, env.gamma_exp, env.c_rate, 0.0, env.q)
    grid = np.geomspace(1e-8, 1e4 * env.c_rate ** (-1.0 / env.gamma_exp), 4000)
    vals = bare.log_formula(grid)
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    t_mode = float(grid[int(np.argmax(vals))]) if bare.theta > 0 or not bare.q.is_constant else 0.0

    def log_tail(t):
        t = np.asarray(t, dtype=float)
        return np.minimum(0.0, bare.log_formula(np.maximum(t, t_mode)))

    beta = env.theta if (env.gamma_exp == 1.0 and env.c_rate == 1.0 and env.q.is_constant
                         and env.q.log_eval(0.0) <= 0 and env.theta >= 0) else None
    return OracleDistribution(
        name=name,
        log_tail_fn=log_tail,
        scale=env.c_rate ** (-1.0 / env.gamma_exp),
        beta=beta,
        envelope=env,
    )


ORACLE_NAMES = ("exp1", "exp2", "gamma3", "weibull2", "weibull2-transformed")


def get_oracle(name: str) -> OracleDistribution:
    """Look up a named oracle; also accepts ``exp:<rate>``, ``gamma:<k>``, ``weibull:<shape>``."""
    fixed = {
        "exp1": lambda: exponential(1.0, "exp1"),
        "exp2": lambda: exponential(2.0, "exp2"),
        "gamma3": lambda: erlang(3, 1.0, "gamma3"),
        "weibull2": lambda: weibull(2.0, 1.0, "weibull2"),
        "weibull2-transformed": lambda: _transformed_weibull(2.0),
    }
    if name in fixed:
        return fixed[name]()
    m = re.fullmatch(r"(exp|gamma|weibull):([0-9.eE+-]+)", name)
    if m:
        kind, val = m.group(1), float(m.group(2))
        if kind == "exp":
            return exponential(val)
        if kind == "gamma":
            return erlang(int(val) if val == int(val) else val)
        return weibull(val)
    raise DomainError(f"unknown oracle {name!r}; known: {', '.join(ORACLE_NAMES)}")


def _transformed_weibull(shape: float) -> OracleDistribution:
    """Law of ``eta = xi^shape`` for ``xi ~ weibull(shape)``, built via the power transform."""
    from .envelope import power_transform

    base = weibull(shape, 1.0)
    env = power_transform(base.envelope)
    return OracleDistribution(
        name=f"weibull{shape:g}-transformed",
        log_tail_fn=lambda t: base.log_tail(np.asarray(t, dtype=float) ** (1.0 / shape)),
        log_moment_fn=lambda p: base.log_moment(shape * p),
        scale=1.0,
        beta=0.0,
        gls_beta=0.0,
        gls_bound=1.0,
        envelope=env,
        transformed_from=base.name,
    )


# ---------------------------------------------------------------------------
# quantiles and sampling


def quantile(d: OracleDistribution, u):
    """``sup{t : T(t) >= u}`` by bisection on the log tail (scalar or array ``u``)."""
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(~(u_arr > 0)) or np.any(u_arr > 1):
        raise DomainError("u must lie in (0, 1]")
    log_u = np.log(u_arr)
    out = np.zeros_like(u_arr)
    todo = u_arr < 1.0
    if np.any(todo):
        out[todo] = _bisect_quantile(d, log_u[todo])
    return float(out[0]) if np.ndim(u) == 0 else out


def _bisect_quantile(d, log_u):
    lo = np.zeros_like(log_u)
    hi = np.full_like(log_u, min(d.scale, QUANTILE_CEILING))
    need = d.log_tail(hi) >= log_u
    while np.any(need):
        if np.any(hi[need] >= QUANTILE_CEILING):
            raise BracketError(f"tail never falls below u within {QUANTILE_CEILING:g}")
        hi[need] = np.minimum(2.0 * hi[need], QUANTILE_CEILING)
        need[need] = d.log_tail(hi[need]) >= log_u[need]
    active = np.ones(log_u.shape, dtype=bool)
    for _ in range(2000):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        l, h = lo[idx], hi[idx]
        mid = 0.5 * (l + h)
        stuck = (mid <= l) | (mid >= h)
        above = d.log_tail(mid) >= log_u[idx]
        lo[idx] = np.where(above & ~stuck, mid, l)
        hi[idx] = np.where(~above & ~stuck, mid, h)
        active[idx[stuck]] = False
    return 0.5 * (lo + hi)


@dataclass(frozen=True, eq=False)
class SampleBatch:
    seed: int
    n: int
    values: np.ndarray = field(repr=False)
    name: str = ""
    shards: int = 1


def sample(d: OracleDistribution, n: int, seed: int, shards: int = 1) -> SampleBatch:
    """Draw ``n`` values ``quantile(U)`` with ``U = 1 - Generator(PCG64(seed)).random()``.

    ``U`` lies in ``(0, 1]``.  With ``shards > 1`` shard ``i`` draws its part
    from ``seed + i``; the split is ``n // shards`` with the remainder going
    to the leading shards.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if shards < 1:
        raise DomainError("shards must be >= 1")
    base, extra = divmod(n, shards)
    parts = []
    for i in range(shards):
        size = base + (1 if i < extra else 0)
        if size == 0:
            continue
        rng = np.random.Generator(np.random.PCG64(seed + i))
        parts.append(quantile(d, 1.0 - rng.random(size)))
    return SampleBatch(seed=seed, n=n, values=np.concatenate(parts), name=d.name, shards=shards)


@dataclass(frozen=True)
class MomentEstimate:
    estimate: float
    std_error: float


def empirical_moment(batch: SampleBatch, p: float) -> MomentEstimate:
    """Sample mean of ``x^p`` with its CLT standard error (compensated sums)."""
    v = np.asarray(batch.values, dtype=float)
    if v.size == 0:
        raise DomainError("empty batch")
    if p < 1:
        raise DomainError("p must be >= 1")
    with np.errstate(over="ignore"):
        powered = np.where(v > 0, np.power(np.where(v > 0, v, 1.0), p), 0.0)
    n = v.size
    mean = math.fsum(powered) / n
    if n < 2:
        return MomentEstimate(mean, float("nan"))
    var = math.fsum((powered - mean) ** 2) / (n - 1)
    return MomentEstimate(mean, math.sqrt(var / n))


def write_batch_csv(batch: SampleBatch, path) -> None:
    """Single-column CSV with a ``#`` header comment carrying name, seed and n."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# name={batch.name} seed={batch.seed} n={batch.n} shards={batch.shards}\n")
        writer = csv.writer(fh)
        writer.writerow(["value"])
        for x in batch.values:
            writer.writerow([repr(float(x))])


def read_batch_csv(path) -> SampleBatch:
    with open(path, newline="") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise DomainError("missing batch header comment")
        meta = dict(item.split("=", 1) for item in header[1:].split())
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["value"]:
        raise DomainError("missing 'value' column header")
    values = np.array([float(r[0]) for r in rows[1:]])
    return SampleBatch(int(meta["seed"]), int(meta["n"]), values, meta.get("name", ""), int(meta.get("shards", 1)))
