"""Max-characteristic functions ``phi(x) = E max(1, x_1 Z_1, ..., x_d Z_d)``.

A :class:`MaxCf` wraps a vectorised evaluator returning values and standard
errors. Closed-form, tail-integral, transformed-over-exact and candidate
evaluators are noise free; Monte Carlo evaluators draw one sample and reuse it
for every query (common random numbers across a grid).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .dnorm import EstimateWithCI, DEFAULT_MC_SIZE
from .errors import (
    ContractViolation, DimensionError, DivergenceError, InvalidParameterError, NumericFailure,
    OutOfDomainError,
)
from .models import RandomVectorModel, exact_dnorm
from .quadrature import integrate

TAIL_ATOL = 1e-10


@dataclass(frozen=True, eq=False)
class MaxCf:
    dim: int
    provenance: str
    evaluator: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    label: str = ""
    # True/False when known: is this the max-CF of a D-norm generator?
    unit_mean: Optional[bool] = None
    exact: bool = True
    base: Optional["MaxCf"] = None
    p: Optional[float] = None
    k: int = 0
    # exact D-norm of the underlying generator, if known
    dnorm: Optional[Callable] = field(default=None, repr=False)
    n: int = 0
    seed: Optional[int] = None

    def values(self, xs) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, float)
        if xs.ndim == 0:
            xs = xs.reshape(1)
        if xs.shape[-1] != self.dim:
            raise DimensionError(f"expected points of dimension {self.dim}, got {xs.shape[-1]}")
        flat = xs.reshape(-1, self.dim)
        vals, ses = self.evaluator(flat)
        shape = xs.shape[:-1]
        return np.asarray(vals, float).reshape(shape), np.asarray(ses, float).reshape(shape)

    def __call__(self, x):
        vals, _ = self.values(x)
        return float(vals) if vals.ndim == 0 else vals

    def evaluate(self, x) -> EstimateWithCI:
        return maxcf_eval(self, x)


def _zeros_like_first(fn):
    def ev(xs):
        v = np.asarray(fn(xs), float)
        return v, np.zeros_like(v)
    return ev


def _check_nonneg(x):
    if np.any(np.asarray(x) < 0):
        raise OutOfDomainError("max-CFs are defined on the nonnegative orthant only")


def maxcf_eval(cf: MaxCf, x) -> EstimateWithCI:
    """Value of ``cf`` at one nonnegative point."""
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != cf.dim:
        raise DimensionError(f"point has dimension {x.shape[0]}, max-CF has {cf.dim}")
    _check_nonneg(x)
    vals, ses = cf.values(x[None, :])
    if cf.exact:
        return EstimateWithCI(float(vals[0]))
    return EstimateWithCI(float(vals[0]), float(ses[0]), cf.n, cf.seed)


# ---------------------------------------------------------------------------
# evaluator constructors


def _model_dnorm(model: RandomVectorModel):
    if not model.is_unit_mean:
        return None
    try:
        return exact_dnorm(model)
    except ContractViolation:
        return None


def closed_form_cf(model: RandomVectorModel) -> MaxCf:
    if model.maxcf_closed_form is None:
        raise ContractViolation(f"model {model.kind!r} has no closed-form max-CF")
    return MaxCf(model.dim, "closed-form", _zeros_like_first(model.maxcf_closed_form),
                 label=f"{model.kind}/closed-form", unit_mean=model.is_unit_mean,
                 dnorm=_model_dnorm(model))


class _McEvaluator:
    def __init__(self, model, n, seed, threads):
        self.model, self.n, self.seed, self.threads = model, n, seed, threads

    @cached_property
    def sample(self) -> np.ndarray:
        return self.model.sample(self.seed, self.n, threads=self.threads).data

    def __call__(self, xs):
        z = self.sample
        vals = np.empty(xs.shape[0])
        ses = np.empty(xs.shape[0])
        for k, x in enumerate(xs):
            w = np.maximum(1.0, np.max(z * x, axis=1))
            vals[k] = w.mean()
            ses[k] = w.std(ddof=1) / math.sqrt(self.n)
        return vals, ses


def monte_carlo_cf(model: RandomVectorModel, n: int = DEFAULT_MC_SIZE, seed: int = 0,
                   threads: int = 1) -> MaxCf:
    if n < 2:
        raise InvalidParameterError("Monte Carlo max-CF needs n >= 2")
    ev = _McEvaluator(model, n, seed, threads)
    return MaxCf(model.dim, "monte-carlo", ev, label=f"{model.kind}/monte-carlo(n={n},seed={seed})",
                 unit_mean=model.is_unit_mean, exact=False, dnorm=_model_dnorm(model), n=n, seed=seed)


def tail_integral_cf(model: RandomVectorModel, atol: float = TAIL_ATOL) -> MaxCf:
    """Noise-free max-CF computed from the model's distribution function."""
    if model.cdf is None:
        raise ContractViolation(f"model {model.kind!r} has no cdf")

    def ev(xs):
        vals = np.array([maxcf_tail_integral(model, x, 1.0, atol=atol) for x in xs])
        return vals, np.zeros_like(vals)

    return MaxCf(model.dim, "tail-integral", ev, label=f"{model.kind}/tail-integral",
                 unit_mean=model.is_unit_mean, dnorm=_model_dnorm(model))


def candidate_cf(fn: Callable[[np.ndarray], np.ndarray], dim: int, label: str = "candidate") -> MaxCf:
    """Arbitrary function of shape ``(m, d) -> (m,)``; no max-CF property is enforced."""
    return MaxCf(dim, "candidate", _zeros_like_first(fn), label=label)


# ---------------------------------------------------------------------------
# integral representations


def maxcf_tail_integral(model: RandomVectorModel, x, t: float = 1.0, atol: float = TAIL_ATOL) -> float:
    """``t * phi(x/t) = t + int_t^inf 1 - P(x_i Z_i <= y for all i) dy`` by adaptive quadrature."""
    if model.cdf is None:
        raise ContractViolation(f"model {model.kind!r} has no cdf; the tail integral needs one")
    x = model.check_point(x).reshape(-1)
    _check_nonneg(x)
    if not t > 0:
        raise InvalidParameterError("t must be > 0")
    pos = x > 0
    if not np.any(pos):
        return float(t)
    with np.errstate(divide="ignore", over="ignore"):
        inv = np.where(pos, 1.0 / np.where(pos, x, 1.0), np.inf)

    tail = model.exceedance or (lambda z: 1.0 - model.cdf(z))

    def integrand(y):
        with np.errstate(over="ignore"):  # y / x overflowing to inf is the intended limit
            return tail(y[:, None] * inv[None, :])

    breaks = [b * xi for b in model.breakpoints for xi in x[pos] if b * xi > t]
    means = np.where(np.isfinite(model.means), model.means, 1.0)
    scale = max(float(t), float(np.max(x * means)))
    res = integrate(integrand, float(t), math.inf, breakpoints=breaks, atol=atol, scale=scale)
    return float(t) + res.value


def _maxstable_excess(s: float, alpha: float, atol: float) -> float:
    # s * int_{1/s}^inf 1 - exp(-y^-alpha) dy via u = y^-alpha, then v = u^(1-1/alpha)
    # which turns the integrand into (1 - exp(-v^q)) / v^q with q = alpha/(alpha-1)
    q = alpha / (alpha - 1.0)
    upper = s ** (alpha - 1.0)

    def h(v):
        u = v ** q
        safe = np.where(u > 0, u, 1.0)
        return np.where(u > 0, -np.expm1(-safe) / safe, 1.0)

    breaks = [10.0 ** k for k in range(-3, 30) if 10.0 ** k < upper]
    factor = s / (alpha - 1.0)
    res = integrate(h, 0.0, upper, breakpoints=breaks, atol=atol / max(factor, 1e-300), rtol=1e-12)
    return factor * res.value


def maxcf_frechet_maxstable(dnorm, alpha: float, x, atol: float = TAIL_ATOL) -> float:
    """Max-CF of the max-stable vector with df ``exp(-||1/x^alpha||_D)`` at ``x >= 0``.

    ``dnorm`` is a :class:`DNorm` (its point estimate is used when it is Monte
    Carlo) or any callable on vectors.
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must be > 1 (got {alpha})")
    x = np.asarray(x, float).reshape(-1)
    _check_nonneg(x)
    c = float(dnorm(x ** alpha))
    if c == 0.0:
        return 1.0
    return 1.0 + _maxstable_excess(c ** (1.0 / alpha), alpha, atol)


def frechet_maxstable_cf(dnorm, alpha: float, dim: int) -> MaxCf:
    def ev(xs):
        vals = np.array([maxcf_frechet_maxstable(dnorm, alpha, x) for x in xs])
        return vals, np.zeros_like(vals)

    return MaxCf(dim, "closed-form", ev, label=f"frechet-maxstable(alpha={alpha})", unit_mean=False)


# ---------------------------------------------------------------------------
# T_p calculus


def _check_p(p, allow_one=True):
    p = float(p)
    ok = 0.0 < p <= 1.0 if allow_one else 0.0 < p < 1.0
    if not ok:
        raise InvalidParameterError(f"p must lie in (0, 1{']' if allow_one else ')'} (got {p})")
    return p


def tp_apply(f: MaxCf, p: float) -> MaxCf:
    """``x -> 1 - p + p f(x/p)``: the max-CF of the thinned generator ``(U/p) Z``, U ~ Bernoulli(p)."""
    p = _check_p(p)
    if p == 1.0:
        return f

    def ev(xs):
        v, s = f.evaluator(xs / p)
        return 1.0 - p + p * v, p * s

    return MaxCf(f.dim, "transformed", ev, label=f"T_{p:g}({f.label})", unit_mean=f.unit_mean,
                 exact=f.exact, base=f, p=p, k=1, dnorm=f.dnorm, n=f.n, seed=f.seed)


def tp_iterate(f: MaxCf, p: float, k: int, mode: str = "closed") -> MaxCf:
    """k-fold application of ``T_p``; ``closed`` uses ``1 - p^k + p^k f(x/p^k)``."""
    p = _check_p(p, allow_one=False)
    if k < 0:
        raise InvalidParameterError("k must be >= 0")
    if k == 0:
        return f
    if mode == "composed":
        g = f
        for _ in range(k):
            g = tp_apply(g, p)
        return g
    if mode != "closed":
        raise InvalidParameterError(f"unknown mode {mode!r}")
    pk = p ** k

    def ev(xs):
        v, s = f.evaluator(xs / pk)
        return (1.0 - pk) + pk * v, pk * s

    return MaxCf(f.dim, "transformed", ev, label=f"T_{p:g}^({k})({f.label})", unit_mean=f.unit_mean,
                 exact=f.exact, base=f, p=p, k=k, dnorm=f.dnorm, n=f.n, seed=f.seed)


@dataclass(frozen=True)
class TpLimit:
    value: float
    by_p: dict
    iterations: dict


def _limit_one_p(f, x, p, tol, k_max):
    trace = []
    small = 0
    step_tol = tol * (1.0 - p)  # geometric tail after the stop is below tol
    block = 16
    for start in range(0, k_max + 1, block):
        ks = np.arange(start, min(start + block, k_max + 1))
        pk = p ** ks.astype(float)
        v, _ = f.evaluator(x[None, :] / pk[:, None])
        vals = (1.0 - pk) + pk * v
        for k, val in zip(ks, vals):
            if trace and abs(val - trace[-1]) < step_tol:
                small += 1
                if small == 2:
                    trace.append(float(val))
                    return float(val), int(k), trace
            else:
                small = 0
            trace.append(float(val))
    raise DivergenceError(f"T_p iterates did not settle within {k_max} steps at p={p}", trace=trace,
                          achieved_error=abs(trace[-1] - trace[-2]) if len(trace) > 1 else None)


def tp_limit(f: MaxCf, x, tol: float = 1e-9, dnorm_hint=None, ps=(0.25, 0.5, 0.75),
             k_max: int = 200) -> TpLimit:
    """Pointwise limit of ``T_p^(k)(f)(x)`` as k grows, checked across several p.

    The limit must not depend on p (spread at most ``2*tol``); with
    ``dnorm_hint`` it must also equal ``1 + ||x||_D`` within ``tol``.
    """
    if f.unit_mean is False:
        raise ContractViolation(f"{f.label} is not the max-CF of a unit-mean generator")
    if not tol > 0:
        raise InvalidParameterError("tol must be > 0")
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != f.dim:
        raise DimensionError("point dimension does not match the max-CF")
    _check_nonneg(x)
    by_p, its = {}, {}
    for p in ps:
        p = _check_p(p, allow_one=False)
        by_p[p], its[p], _ = _limit_one_p(f, x, p, tol, k_max)
    vals = list(by_p.values())
    if max(vals) - min(vals) > 2 * tol:
        raise NumericFailure(f"T_p limits depend on p: {by_p}", achieved_error=max(vals) - min(vals))
    value = by_p[0.5] if 0.5 in by_p else vals[0]
    if dnorm_hint is not None:
        target = 1.0 + float(dnorm_hint(x))
        if abs(value - target) > tol:
            raise ContractViolation(
                f"limit {value!r} differs from 1 + ||x||_D = {target!r} by more than {tol}")
    return TpLimit(value, by_p, its)


# ---------------------------------------------------------------------------


def maxcf_grid_csv(cf: MaxCf, grid) -> str:
    """``x1,...,xd,phi,std_error,provenance`` rows."""
    grid = np.atleast_2d(np.asarray(grid, float))
    _check_nonneg(grid)
    vals, ses = cf.values(grid)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(cf.dim)] + ["phi", "std_error", "provenance"])
    for x, v, s in zip(grid, vals, ses):
        w.writerow([format(t, ".15g") for t in x] + [format(v, ".15g"), format(s, ".15g"), cf.provenance])
    return out.getvalue()
