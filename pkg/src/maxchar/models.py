"""Catalog of nonnegative, integrable random-vector models.

Every model carries a vectorised sampler and, where one is known, a closed-form
distribution function, max-CF, quantile (d = 1) and D-norm. All callables take
arrays of shape ``(..., d)`` and return arrays of shape ``(...)``.

Sampling is split into fixed-size chunks whose seeds are spawned from the user
seed, so a draw never depends on how many worker threads were used.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from .errors import ContractViolation, DimensionError, InvalidParameterError, OutOfDomainError

CHUNK_ROWS = 1 << 16
# keep uniforms strictly inside (0, 1) for inverse-CDF transforms
_U_LO = np.finfo(float).tiny
_U_HI = 1.0 - np.finfo(float).epsneg

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EmpiricalSample:
    """An ``n x d`` matrix of nonnegative draws."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1:
            raise DimensionError("sample must be a non-empty n x d matrix")
        if np.any(data < 0) or not np.all(np.isfinite(data)):
            raise ContractViolation("sample entries must be finite and nonnegative")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def means(self) -> np.ndarray:
        return self.data.mean(axis=0)

    def std_errors(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros(self.d)
        return self.data.std(axis=0, ddof=1) / math.sqrt(self.n)

    def to_csv(self, fh=None) -> str | None:
        """Write ``z1,...,zd`` rows at 17 significant digits; returns text if ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"z{i + 1}" for i in range(self.d)])
        for row in self.data:
            w.writerow([format(v, ".17g") for v in row])
        return out.getvalue() if fh is None else None

    @classmethod
    def from_csv(cls, fh) -> "EmpiricalSample":
        text = fh.read() if hasattr(fh, "read") else str(fh)
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], rows[1:]
        if not all(h.startswith("z") for h in header):
            raise ContractViolation(f"unexpected sample header {header}")
        return cls(np.array([[float(v) for v in r] for r in body if r]))


@dataclass(frozen=True, eq=False)
class RandomVectorModel:
    kind: str
    params: dict
    dim: int
    means: np.ndarray
    draw: Optional[Callable[[np.random.Generator, int], np.ndarray]]
    cdf: Optional[ArrayFn] = None
    maxcf_closed_form: Optional[ArrayFn] = None
    quantile: Optional[ArrayFn] = None
    dnorm_closed_form: Optional[ArrayFn] = None
    # finite support (points m x d, probabilities m) when the law is discrete
    support: Optional[tuple] = None
    # coordinates z where the marginal CDFs have kinks or jumps
    breakpoints: tuple = ()
    # a.s. upper bound of every component, None if unbounded
    bound: Optional[float] = None
    is_unit_mean: bool = field(default=False)
    # 1 - cdf without cancellation, for heavy tails
    exceedance: Optional[ArrayFn] = None
    # v -> quantile(1 - v), accurate for tiny v (d = 1)
    upper_quantile: Optional[ArrayFn] = None

    def __post_init__(self):
        means = np.asarray(self.means, dtype=float).reshape(-1)
        if means.shape != (self.dim,):
            raise DimensionError("means must have one entry per dimension")
        object.__setattr__(self, "means", means)
        if self.is_unit_mean and not np.all(means == 1.0):
            raise ContractViolation("unit-mean models must have all means equal to 1")

    @property
    def spec(self) -> dict:
        return {"kind": self.kind, "params": _jsonable(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.spec, sort_keys=True)

    def sample(self, seed: int, n: int, threads: int = 1) -> EmpiricalSample:
        """Draw ``n`` rows. The result depends on ``seed`` and ``n`` only."""
        if self.draw is None:
            raise ContractViolation(f"model {self.kind!r} has no sampler")
        if n < 1:
            raise InvalidParameterError("sample size must be >= 1")
        counts = [CHUNK_ROWS] * (n // CHUNK_ROWS)
        if n % CHUNK_ROWS:
            counts.append(n % CHUNK_ROWS)
        children = np.random.SeedSequence(seed).spawn(len(counts))

        def one(job):
            ss, m = job
            rows = np.asarray(self.draw(np.random.Generator(np.random.PCG64(ss)), m), dtype=float)
            return rows.reshape(m, self.dim)

        jobs = list(zip(children, counts))
        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(one, jobs))
        else:
            parts = [one(j) for j in jobs]
        return EmpiricalSample(np.concatenate(parts, axis=0))

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.shape[-1] != self.dim:
            raise DimensionError(f"expected vectors of dimension {self.dim}, got {x.shape[-1]}")
        return x


def _jsonable(obj):
    if isinstance(obj, RandomVectorModel):
        return obj.spec
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _uniform(rng, size):
    return np.clip(rng.random(size), _U_LO, _U_HI)


def _check_dim(d):
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 1:
        raise InvalidParameterError(f"invalid dimension {d!r}; must be a positive integer")
    return int(d)


# ---------------------------------------------------------------------------
# D-norm generators


def make_constant_generator(d: int) -> RandomVectorModel:
    """Z = (1,...,1), generator of the sup-norm."""
    d = _check_dim(d)

    def draw(rng, n):
        return np.ones((n, d))

    def cdf(x):
        return np.all(np.asarray(x) >= 1.0, axis=-1).astype(float)

    def maxcf(x):
        return np.maximum(1.0, np.max(x, axis=-1))

    return RandomVectorModel(
        kind="const", params={"d": d}, dim=d, means=np.ones(d), draw=draw, cdf=cdf,
        maxcf_closed_form=maxcf, quantile=(lambda a: np.ones_like(np.asarray(a, float))) if d == 1 else None,
        dnorm_closed_form=lambda x: np.max(np.abs(x), axis=-1),
        support=(np.ones((1, d)), np.ones(1)), breakpoints=(1.0,), bound=1.0, is_unit_mean=True,
    )


def make_permutation_generator(d: int) -> RandomVectorModel:
    """Z uniform over the permutations of (d, 0, ..., 0); generates the 1-norm."""
    d = _check_dim(d)

    def draw(rng, n):
        out = np.zeros((n, d))
        out[np.arange(n), rng.integers(d, size=n)] = float(d)
        return out

    def cdf(x):
        x = np.asarray(x, float)
        inside = np.all(x >= 0.0, axis=-1)
        return np.where(inside, np.mean(x >= d, axis=-1), 0.0)

    def maxcf(x):
        return np.mean(np.maximum(1.0, d * np.asarray(x, float)), axis=-1)

    return RandomVectorModel(
        kind="perm", params={"d": d}, dim=d, means=np.ones(d), draw=draw, cdf=cdf,
        maxcf_closed_form=maxcf, dnorm_closed_form=lambda x: np.sum(np.abs(x), axis=-1),
        support=(d * np.eye(d), np.full(d, 1.0 / d)), breakpoints=(float(d),), bound=float(d),
        is_unit_mean=True,
    )


def frechet_maxcf_from_c(c, alpha: float):
    """``1 + int_1^inf 1 - exp(-c y^-alpha) dy`` in closed form.

    Equals ``exp(-c) + c^(1/alpha) Gamma(1-1/alpha) P(1-1/alpha, c)`` with ``P``
    the regularised lower incomplete gamma function.
    """
    c = np.asarray(c, dtype=float)
    s = 1.0 - 1.0 / alpha
    return np.exp(-c) + c ** (1.0 / alpha) * math.gamma(s) * special.gammainc(s, c)


def _lambda_norm(x, lam):
    # scale by the largest entry so tiny or huge vectors neither underflow nor overflow
    a = np.abs(np.asarray(x, float))
    top = np.max(a, axis=-1)
    safe = np.where(top > 0, top, 1.0)
    return top * np.sum((a / safe[..., None]) ** lam, axis=-1) ** (1.0 / lam)


def make_frechet_lambda_generator(d: int, lam: float) -> RandomVectorModel:
    """Independent Frechet(lam) components divided by Gamma(1 - 1/lam); generates the lam-norm."""
    d = _check_dim(d)
    lam = float(lam)
    if not lam > 1.0 or math.isinf(lam):
        raise InvalidParameterError(f"lambda must be a finite real > 1 (got {lam}); the mean is infinite otherwise")
    g = math.gamma(1.0 - 1.0 / lam)

    def draw(rng, n):
        u = _uniform(rng, (n, d))
        return (-np.log(u)) ** (-1.0 / lam) / g

    def cdf(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            tail = np.where(x > 0, (g * x) ** -lam, np.inf)
        return np.exp(-np.sum(tail, axis=-1))

    def exceedance(x):
        x = np.asarray(x, float)
        with np.errstate(divide="ignore"):
            tail = np.where(x > 0, (g * x) ** -lam, np.inf)
        return -np.expm1(-np.sum(tail, axis=-1))

    def maxcf(x):
        x = np.asarray(x, float)
        return frechet_maxcf_from_c(np.sum(x ** lam, axis=-1) / g ** lam, lam)

    return RandomVectorModel(
        kind="frechet", params={"lambda": lam, "d": d}, dim=d, means=np.ones(d), draw=draw,
        cdf=cdf, maxcf_closed_form=maxcf, exceedance=exceedance,
        quantile=(lambda a: (-np.log(np.asarray(a, float))) ** (-1.0 / lam) / g) if d == 1 else None,
        upper_quantile=(lambda v: (-np.log1p(-np.asarray(v, float))) ** (-1.0 / lam) / g) if d == 1 else None,
        dnorm_closed_form=lambda x: _lambda_norm(x, lam), is_unit_mean=True,
    )


# ---------------------------------------------------------------------------
# univariate example laws


@dataclass(frozen=True)
class GpdParams:
    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not self.mu >= 0.0:
            raise InvalidParameterError(f"GPD location mu must be >= 0 (got {self.mu})")
        if not self.sigma > 0.0:
            raise InvalidParameterError(f"GPD scale sigma must be > 0 (got {self.sigma})")
        if not 0.0 < self.xi < 1.0:
            raise InvalidParameterError(f"GPD shape xi must lie in (0, 1) (got {self.xi})")

    @property
    def mean(self) -> float:
        return self.mu + self.sigma / (1.0 - self.xi)


def make_gpd_model(params: GpdParams) -> RandomVectorModel:
    mu, sigma, xi = params.mu, params.sigma, params.xi

    def cdf(x):
        z = np.asarray(x, float)[..., 0]
        with np.errstate(over="ignore"):
            surv = (1.0 + xi * np.maximum(z - mu, 0.0) / sigma) ** (-1.0 / xi)
        return np.where(z >= mu, 1.0 - surv, 0.0)

    def exceedance(x):
        z = np.asarray(x, float)[..., 0]
        with np.errstate(over="ignore"):
            surv = (1.0 + xi * np.maximum(z - mu, 0.0) / sigma) ** (-1.0 / xi)
        return np.where(z >= mu, surv, 1.0)

    def quantile(a):
        a = np.asarray(a, float)
        return mu + sigma / xi * ((1.0 - a) ** -xi - 1.0)

    def maxcf(x):
        x = np.asarray(x, float)[..., 0]
        out = np.ones_like(x)
        big = (mu * x) > 1.0
        out = np.where(big, x * params.mean, out)
        small = (~big) & (x > 0)
        xs = np.where(small, x, 1.0)
        with np.errstate(over="ignore"):  # subnormal x: inner -> inf, second -> 1
            inner = 1.0 + xi * (1.0 - mu * xs) / (sigma * xs)
            second = 1.0 + sigma * xs / (1.0 - xi) * inner ** (1.0 - 1.0 / xi)
        return np.where(small, second, out)

    def draw(rng, n):
        return quantile(_uniform(rng, n))[:, None]

    mean = params.mean
    return RandomVectorModel(
        kind="gpd", params={"mu": mu, "sigma": sigma, "xi": xi}, dim=1, means=np.array([mean]),
        draw=draw, cdf=cdf, maxcf_closed_form=maxcf, quantile=quantile, exceedance=exceedance,
        upper_quantile=lambda v: mu + sigma / xi * (np.asarray(v, float) ** -xi - 1.0),
        breakpoints=(mu,) if mu > 0 else (), is_unit_mean=(mean == 1.0),
    )


def make_uniform_model(upper: float) -> RandomVectorModel:
    """Uniform(0, upper) with its analytic max-CF."""
    upper = float(upper)
    if not upper > 0.0 or math.isinf(upper):
        raise InvalidParameterError(f"uniform upper bound must be a finite real > 0 (got {upper})")

    def cdf(x):
        return np.clip(np.asarray(x, float)[..., 0] / upper, 0.0, 1.0)

    def maxcf(x):
        xu = np.asarray(x, float)[..., 0] * upper
        safe = np.where(xu > 1.0, xu, 1.0)
        return np.where(xu > 1.0, 0.5 * safe + 0.5 / safe, 1.0)

    def draw(rng, n):
        return upper * rng.random((n, 1))

    return RandomVectorModel(
        kind="uniform", params={"upper": upper}, dim=1, means=np.array([upper / 2.0]), draw=draw,
        cdf=cdf, maxcf_closed_form=maxcf, quantile=lambda a: upper * np.asarray(a, float),
        upper_quantile=lambda v: upper * (1.0 - np.asarray(v, float)),
        dnorm_closed_form=(lambda x: np.abs(x)[..., 0]) if upper == 2.0 else None,
        breakpoints=(upper,), bound=upper, is_unit_mean=(upper == 2.0),
    )


# ---------------------------------------------------------------------------
# multivariate generalized Pareto and its normalised maxima


def exact_dnorm(generator: RandomVectorModel) -> ArrayFn:
    """Zero-variance D-norm of a generator: closed form, else enumeration of its support."""
    if generator.dnorm_closed_form is not None:
        return generator.dnorm_closed_form
    if generator.support is not None:
        pts, probs = generator.support

        def enum(x):
            x = np.abs(np.asarray(x, float))
            return np.max(x[..., None, :] * pts, axis=-1) @ probs

        return enum
    raise ContractViolation(f"generator {generator.kind!r} has no exact D-norm")


def make_thinned_generator(base: RandomVectorModel, p: float, k: int) -> RandomVectorModel:
    """``(U_1 ... U_k / p^k) Z`` with independent Bernoulli(p) factors.

    It generates the same D-norm as ``Z``; its max-CF is the k-th ``T_p``
    iterate of the max-CF of ``Z``.
    """
    if not base.is_unit_mean:
        raise ContractViolation("thinning needs a unit-mean generator")
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"p must lie in (0, 1) (got {p})")
    k = int(k)
    if k < 0:
        raise InvalidParameterError("k must be >= 0")
    pk = p ** k
    d = base.dim

    def draw(rng, n):
        z = base.draw(rng, n).reshape(n, d)
        keep = np.all(rng.random((n, k)) < p, axis=1) if k else np.ones(n, bool)
        return np.where(keep[:, None], z / pk, 0.0)

    maxcf = None
    if base.maxcf_closed_form is not None:
        def maxcf(x):
            x = np.asarray(x, float)
            return (1.0 - pk) + pk * base.maxcf_closed_form(x / pk)

    cdf = None
    if base.cdf is not None:
        def cdf(x):
            x = np.asarray(x, float)
            return np.where(np.all(x >= 0, axis=-1), (1.0 - pk) + pk * base.cdf(x * pk), 0.0)

    exceedance = None
    if base.exceedance is not None or base.cdf is not None:
        base_exc = base.exceedance or (lambda z: 1.0 - base.cdf(z))

        def exceedance(x):
            x = np.asarray(x, float)
            return np.where(np.all(x >= 0, axis=-1), pk * base_exc(x * pk), 1.0)

    support = None
    if base.support is not None:
        pts, probs = base.support
        support = (np.vstack([pts / pk, np.zeros((1, d))]), np.append(probs * pk, 1.0 - pk))

    return RandomVectorModel(
        kind="thinned", params={"base": base, "p": p, "k": k}, dim=d, means=np.ones(d), draw=draw,
        cdf=cdf, maxcf_closed_form=maxcf, dnorm_closed_form=base.dnorm_closed_form, support=support,
        breakpoints=tuple(b / pk for b in base.breakpoints), bound=None if base.bound is None else base.bound / pk, is_unit_mean=True, exceedance=exceedance,
    )


def _pareto_maxcf(m, alpha):
    # E max(1, m W) for W = U^(-1/alpha)
    m = np.asarray(m, float)
    return np.where(m >= 1.0, m * alpha / (alpha - 1.0), 1.0 + m ** alpha / (alpha - 1.0))


def _check_bounded_generator(alpha, generator, bound):
    alpha = float(alpha)
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must be > 1 (got {alpha}); the mean is infinite otherwise")
    if not float(bound) >= 1.0:
        raise InvalidParameterError(f"bound must be >= 1 (got {bound})")
    if not generator.is_unit_mean:
        raise ContractViolation("the mGPD construction needs a unit-mean generator")
    if generator.bound is None or generator.bound > float(bound):
        raise ContractViolation(
            f"generator {generator.kind!r} is not a.s. bounded by {bound} (bound={generator.bound})")
    return alpha, float(bound)


def _root_moment(generator, alpha):
    # E Z_i^(1/alpha) per coordinate
    if generator.support is not None:
        pts, probs = generator.support
        return probs @ pts ** (1.0 / alpha)
    if generator.kind == "uniform":
        u = generator.params["upper"]
        return np.array([u ** (1.0 / alpha) / (1.0 + 1.0 / alpha)])
    raise ContractViolation(f"cannot compute E Z^(1/alpha) for generator {generator.kind!r}")


def make_mgpd_model(alpha: float, generator: RandomVectorModel, bound: float) -> RandomVectorModel:
    """V = (Z / U)^(1/alpha) with U uniform and independent of the bounded generator Z."""
    alpha, bound = _check_bounded_generator(alpha, generator, bound)
    d = generator.dim
    dn = exact_dnorm(generator)
    lo = bound ** (1.0 / alpha)

    def draw(rng, n):
        u = 1.0 - rng.random(n)  # in (0, 1]
        z = generator.draw(rng, n).reshape(n, d)
        return (z / u[:, None]) ** (1.0 / alpha)

    def cdf(x):
        x = np.asarray(x, float)
        if np.any(x < lo):
            raise OutOfDomainError(f"mGPD cdf is only available for x >= {lo} componentwise")
        return 1.0 - dn(x ** -alpha)

    def exceedance(x):
        x = np.asarray(x, float)
        if np.any(x < lo):
            raise OutOfDomainError(f"mGPD cdf is only available for x >= {lo} componentwise")
        return dn(x ** -alpha)

    maxcf = None
    if generator.support is not None:
        pts, probs = generator.support
        roots = pts ** (1.0 / alpha)

        def maxcf(x):
            x = np.asarray(x, float)
            m = np.max(x[..., None, :] * roots, axis=-1)
            return _pareto_maxcf(m, alpha) @ probs

    return RandomVectorModel(
        kind="mgpd", params={"alpha": alpha, "generator": generator, "bound": bound}, dim=d,
        means=_root_moment(generator, alpha) * alpha / (alpha - 1.0), draw=draw, cdf=cdf,
        maxcf_closed_form=maxcf, breakpoints=(lo,), is_unit_mean=False, exceedance=exceedance,
    )


def _single_atom(generator):
    if generator.support is not None and len(generator.support[1]) == 1:
        return generator.support[0][0]
    return None


def make_mgpd_maxima_model(alpha: float, generator: RandomVectorModel, bound: float, n: int) -> RandomVectorModel:
    """Y(n) = max of n independent mGPD vectors divided by n^(1/alpha).

    The distribution function ``(1 - ||1/(n x^alpha)||_D)^n`` holds for
    ``x >= (bound/n)^(1/alpha)``. For a single-atom generator Y(n) is a scalar
    multiple of the atom, which gives an exact inverse-CDF sampler and a cdf on
    the whole orthant; otherwise the sampler simulates the n-fold maximum.
    """
    alpha, bound = _check_bounded_generator(alpha, generator, bound)
    n = int(n)
    if n < 1:
        raise InvalidParameterError("n must be >= 1")
    d = generator.dim
    dn = exact_dnorm(generator)
    lo = (bound / n) ** (1.0 / alpha)
    atom = _single_atom(generator)

    if atom is not None:
        root = atom ** (1.0 / alpha)

        def scalar_cdf(m):
            m = np.asarray(m, float)
            safe = np.where(m >= n ** (-1.0 / alpha), m, 1.0)
            return np.where(m >= n ** (-1.0 / alpha), (1.0 - 1.0 / (n * safe ** alpha)) ** n, 0.0)

        def cdf(x):
            x = np.asarray(x, float)
            return scalar_cdf(np.min(x / root, axis=-1))

        def exceedance(x):
            m = np.min(np.asarray(x, float) / root, axis=-1)
            ok = m >= n ** (-1.0 / alpha)
            safe = np.where(ok, m, 1.0)
            return np.where(ok, -np.expm1(n * np.log1p(-1.0 / (n * safe ** alpha))), 1.0)

        def scalar_quantile(u):
            u = np.asarray(u, float)
            return (-n * np.expm1(np.log(u) / n)) ** (-1.0 / alpha)

        def draw(rng, m):
            return scalar_quantile(_uniform(rng, m))[:, None] * root

        breaks = tuple(sorted({float(n ** (-1.0 / alpha) * r) for r in np.atleast_1d(root)}))
        quantile = scalar_quantile if d == 1 and root[0] == 1.0 else None
    else:
        quantile = None

        def cdf(x):
            x = np.asarray(x, float)
            if np.any(x < lo):
                raise OutOfDomainError(f"cdf of Y(n) is only available for x >= {lo} componentwise")
            return (1.0 - dn(1.0 / (n * x ** alpha))) ** n

        def exceedance(x):
            x = np.asarray(x, float)
            if np.any(x < lo):
                raise OutOfDomainError(f"cdf of Y(n) is only available for x >= {lo} componentwise")
            return -np.expm1(n * np.log1p(-dn(1.0 / (n * x ** alpha))))

        def draw(rng, m):
            out = np.zeros((m, d))
            block = max(1, CHUNK_ROWS // max(n, 1))
            for start in range(0, m, block):
                k = min(block, m - start)
                u = 1.0 - rng.random(k * n)
                z = generator.draw(rng, k * n).reshape(k * n, d)
                v = (z / u[:, None]) ** (1.0 / alpha)
                out[start:start + k] = v.reshape(k, n, d).max(axis=1)
            return out / n ** (1.0 / alpha)

        breaks = (lo,)

    means = _maxima_mean(alpha, n) * root if atom is not None else np.full(d, np.nan)
    return RandomVectorModel(
        kind="mgpd-maxima", params={"alpha": alpha, "generator": generator, "bound": bound, "n": n},
        dim=d, means=means, draw=draw, cdf=cdf, quantile=quantile, breakpoints=breaks,
        is_unit_mean=False, exceedance=exceedance,
    )


def _maxima_mean(alpha, n):
    # E max_i W_i / n^(1/alpha) = n^(1-1/alpha) B(n, 1-1/alpha) for Pareto(alpha) W
    s = 1.0 - 1.0 / alpha
    return math.exp(s * math.log(n) + special.betaln(n, s))


def make_frechet_maxstable_model(alpha: float, generator: RandomVectorModel) -> RandomVectorModel:
    """Max-stable vector with Frechet(alpha) margins and D-norm generated by ``generator``.

    The distribution function is ``exp(-||1/x^alpha||_D)``. Sampling is only
    offered when the vector is a scalar Frechet variable times (1,...,1): in
    d = 1, or for the constant generator (complete dependence).
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must be > 1 (got {alpha}); the mean is infinite otherwise")
    d = generator.dim
    dn = exact_dnorm(generator)
    comonotone = d == 1 or (_single_atom(generator) is not None)

    def cdf(x):
        x = np.asarray(x, float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(np.all(x > 0, axis=-1), np.exp(-dn(safe ** -alpha)), 0.0)

    def exceedance(x):
        x = np.asarray(x, float)
        safe = np.where(x > 0, x, 1.0)
        return np.where(np.all(x > 0, axis=-1), -np.expm1(-dn(safe ** -alpha)), 1.0)

    def maxcf(x):
        return frechet_maxcf_from_c(dn(np.asarray(x, float) ** alpha), alpha)

    def quantile(a):
        return (-np.log(np.asarray(a, float))) ** (-1.0 / alpha)

    draw = None
    if comonotone:
        def draw(rng, n):
            return np.repeat(quantile(_uniform(rng, n))[:, None], d, axis=1)

    return RandomVectorModel(
        kind="frechet-maxstable", params={"alpha": alpha, "generator": generator}, dim=d,
        means=np.full(d, math.gamma(1.0 - 1.0 / alpha)), draw=draw, cdf=cdf,
        maxcf_closed_form=maxcf, quantile=quantile if d == 1 else None, is_unit_mean=False,
        exceedance=exceedance,
        upper_quantile=(lambda v: (-np.log1p(-np.asarray(v, float))) ** (-1.0 / alpha)) if d == 1 else None,
    )


# ---------------------------------------------------------------------------
# JSON specs


def _int_param(params, key):
    v = params[key]
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int) or isinstance(v, bool):
        raise InvalidParameterError(f"parameter {key!r} must be an integer (got {v!r})")
    return v


def model_from_spec(spec: dict) -> RandomVectorModel:
    """Inverse of ``RandomVectorModel.spec``."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidParameterError("a model spec needs a 'kind' field")
    unknown = set(spec) - {"kind", "params"}
    if unknown:
        raise InvalidParameterError(f"unknown model spec keys: {sorted(unknown)}")
    kind, params = spec["kind"], dict(spec.get("params", {}))
    expected = {
        "const": {"d"}, "perm": {"d"}, "frechet": {"lambda", "d"}, "gpd": {"mu", "sigma", "xi"},
        "uniform": {"upper"}, "thinned": {"base", "p", "k"}, "mgpd": {"alpha", "generator", "bound"},
        "mgpd-maxima": {"alpha", "generator", "bound", "n"}, "frechet-maxstable": {"alpha", "generator"},
    }
    if kind not in expected:
        raise InvalidParameterError(f"unknown model kind {kind!r}; valid kinds: {sorted(expected)}")
    if set(params) != expected[kind]:
        raise InvalidParameterError(
            f"model {kind!r} takes parameters {sorted(expected[kind])}, got {sorted(params)}")
    if kind == "const":
        return make_constant_generator(_int_param(params, "d"))
    if kind == "perm":
        return make_permutation_generator(_int_param(params, "d"))
    if kind == "frechet":
        return make_frechet_lambda_generator(_int_param(params, "d"), float(params["lambda"]))
    if kind == "gpd":
        return make_gpd_model(GpdParams(float(params["mu"]), float(params["sigma"]), float(params["xi"])))
    if kind == "uniform":
        return make_uniform_model(float(params["upper"]))
    if kind == "thinned":
        return make_thinned_generator(model_from_spec(params["base"]), float(params["p"]), _int_param(params, "k"))
    gen = model_from_spec(params["generator"])
    if kind == "mgpd":
        return make_mgpd_model(float(params["alpha"]), gen, float(params["bound"]))
    if kind == "mgpd-maxima":
        return make_mgpd_maxima_model(float(params["alpha"]), gen, float(params["bound"]), _int_param(params, "n"))
    return make_frechet_maxstable_model(float(params["alpha"]), gen)
