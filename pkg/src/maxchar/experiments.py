"""Scripted experiments around convergence of max-CFs.

Each experiment returns a report that serialises to JSON and to a flat CSV
(one row per index and grid point). Stochastic parts are driven by a single
seed, so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath
import numpy as np

from .dnorm import CI_WIDTH, DNorm, dnorm_pointwise_gap
from .errors import ContractViolation, InvalidParameterError, OutOfDomainError
from .inversion import diagnose_max_cf
from .maxcf import (
    candidate_cf, closed_form_cf, maxcf_frechet_maxstable, maxcf_tail_integral, monte_carlo_cf, tp_iterate,
)
from .models import (
    RandomVectorModel, _uniform, make_constant_generator, make_frechet_maxstable_model,
    make_mgpd_maxima_model, make_thinned_generator,
)
from .quadrature import integrate

EXPERIMENTS = ("gpd-maxima", "counterexample", "copula-limit", "risk-identity", "nonclosedness", "uniqueness")


def _clean(obj):
    """Round floats to 15 significant digits so JSON output is stable."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if not math.isfinite(v) else float(format(v, ".15g"))
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".15g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_cell(t) for t in v)
    return str(v)


@dataclass
class ExperimentReport:
    name: str
    verdict: str
    summary: dict
    rows: list = field(default_factory=list)
    seed: Optional[int] = None

    def verdict_line(self) -> str:
        return f"{self.name}: {self.verdict}"

    def to_dict(self) -> dict:
        return _clean({"name": self.name, "seed": self.seed, "verdict": self.verdict,
                       "summary": self.summary, "rows": self.rows})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        out = io.StringIO()
        if not self.rows:
            return ""
        keys = list(dict.fromkeys(k for r in self.rows for k in r))
        w = csv.writer(out, lineterminator="\n")
        w.writerow(keys)
        for r in self.rows:
            w.writerow([_cell(r.get(k, "")) for k in keys])
        return out.getvalue()

    def write(self, directory: str) -> tuple[str, str]:
        os.makedirs(directory, exist_ok=True)
        stem = os.path.join(directory, f"{self.name}-seed{self.seed if self.seed is not None else 'none'}")
        with open(stem + ".json", "w") as fh:
            fh.write(self.to_json() + "\n")
        with open(stem + ".csv", "w") as fh:
            fh.write(self.to_csv())
        return stem + ".json", stem + ".csv"


@dataclass
class ConvergenceReport(ExperimentReport):
    """Report for a sequence indexed by n that should converge to a limit law."""

    indices: list = field(default_factory=list)
    grid: list = field(default_factory=list)
    maxcf_values: list = field(default_factory=list)
    w1_values: list = field(default_factory=list)
    mean_gaps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update(_clean({"indices": self.indices, "grid": self.grid, "maxcf_values": self.maxcf_values,
                         "w1_values": self.w1_values, "mean_gaps": self.mean_gaps}))
        return d


def longest_decreasing_run(values) -> int:
    """Length of the longest run of strictly decreasing consecutive entries."""
    best = run = 1 if len(values) else 0
    for prev, cur in zip(values[:-1], values[1:]):
        run = run + 1 if cur < prev else 1
        best = max(best, run)
    return best


def _converges(values, threshold, min_run=3) -> bool:
    return bool(values) and longest_decreasing_run(values) >= min_run and values[-1] < threshold


# ---------------------------------------------------------------------------
# maxima of multivariate generalized Pareto vectors


def _scalar_w1(exc_a, exc_b, breaks=()):
    # int_0^inf |F_a - F_b| written with exceedances to avoid cancellation in the tail
    res = integrate(lambda y: np.abs(exc_a(y[:, None]) - exc_b(y[:, None])), 0.0, math.inf,
                    breakpoints=breaks, atol=1e-11)
    return res.value


def run_gpd_maxima_experiment(alpha: float = 2.0, generator: Optional[RandomVectorModel] = None,
                              n_list: Sequence[int] = (10, 100, 1000, 10000), grid=None, seed: int = 0,
                              n_mc: int = 100_000, bound: float = 1.0, cf_threshold: float = 0.02,
                              w1_threshold: float = 0.05, mean_tol: float = 0.02) -> ConvergenceReport:
    """Normalised maxima ``Y(n)`` of mGPD vectors against the limiting max-stable vector.

    Max-CF gaps, W1 distances and means are computed from the exact
    distribution function of ``Y(n)`` by quadrature; Monte Carlo counterparts
    from one comonotone sample (the same uniforms drive every ``Y(n)`` and the
    limit) are reported next to them.
    """
    alpha = float(alpha)
    if not alpha > 1.0:
        raise InvalidParameterError(f"alpha must be > 1 (got {alpha}); the limit has infinite mean otherwise")
    generator = generator or make_constant_generator(1)
    d = generator.dim
    grid = np.asarray(grid if grid is not None else [[s] * d for s in (0.5, 1.0, 2.0)], float).reshape(-1, d)
    n_list = [int(n) for n in n_list]
    dn = DNorm.exact(generator)
    target = make_frechet_maxstable_model(alpha, generator)
    target_phi = np.array([maxcf_frechet_maxstable(dn, alpha, x) for x in grid])
    target_check = float(np.max(np.abs(target_phi - target.maxcf_closed_form(grid))))
    limit_mean = math.gamma(1.0 - 1.0 / alpha)
    scalar_limit = make_frechet_maxstable_model(alpha, make_constant_generator(1))
    limit_mean_quad = integrate(lambda y: scalar_limit.exceedance(y[:, None]), 0.0, math.inf, atol=1e-11).value

    atom = generator.support is not None and len(generator.support[1]) == 1
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    u = _uniform(rng, n_mc)
    q_limit = scalar_limit.quantile(u)

    maxcf_rows, w1_rows, mean_rows, rows = [], [], [], []
    cf_gaps, w1_exact, w1_mc = [], [], []
    for n in n_list:
        ym = make_mgpd_maxima_model(alpha, generator, bound, n)
        exact = []
        for x in grid:
            try:
                exact.append(maxcf_tail_integral(ym, x))
            except OutOfDomainError:
                exact.append(float("nan"))
        exact = np.array(exact)
        if atom:
            scalar = make_mgpd_maxima_model(alpha, make_constant_generator(1), bound, n)
            yq = scalar.quantile(u)
            mc_vals, mc_ses = [], []
            for x in grid:
                w = np.maximum(1.0, yq * np.max(x))
                mc_vals.append(w.mean())
                mc_ses.append(w.std(ddof=1) / math.sqrt(n_mc))
            diff = np.abs(yq - q_limit)
            w1_est = d * diff.mean()
            w1_se = d * diff.std(ddof=1) / math.sqrt(n_mc)
            w1_q = d * _scalar_w1(scalar.exceedance, scalar_limit.exceedance, scalar.breakpoints)
            mean_exact = float(scalar.means[0])
            mean_quad = integrate(lambda y: scalar.exceedance(y[:, None]), 0.0, math.inf,
                                  breakpoints=scalar.breakpoints, atol=1e-11).value
            mean_mc, mean_se = float(yq.mean()), float(yq.std(ddof=1) / math.sqrt(n_mc))
        else:
            # brute-force maxima; keep the cost of simulation near 1e8 draws
            m = max(1000, min(n_mc, 10 ** 8 // n))
            cf = monte_carlo_cf(ym, m, seed + n)
            mc_vals, mc_ses = cf.values(grid)
            w1_est = w1_se = w1_q = float("nan")
            mean_exact = mean_quad = float("nan")
            sample = cf.evaluator.sample
            mean_mc, mean_se = float(sample[:, 0].mean()), float(sample[:, 0].std(ddof=1) / math.sqrt(m))
        gaps = np.abs(exact - target_phi)
        cf_gaps.append(float(np.max(gaps)))
        w1_exact.append(float(w1_q))
        w1_mc.append(float(w1_est))
        pts = []
        for x, e, t, v, s in zip(grid, exact, target_phi, mc_vals, mc_ses):
            pts.append({"x": x.tolist(), "value": float(e), "target": float(t), "gap": float(abs(e - t)),
                        "mc_value": float(v), "mc_std_error": float(s)})
            rows.append({"n": n, "x": x.tolist(), "phi": float(e), "phi_limit": float(t), "gap": float(abs(e - t)),
                         "phi_mc": float(v), "phi_mc_std_error": float(s), "w1": float(w1_q),
                         "w1_mc": float(w1_est), "w1_mc_std_error": float(w1_se)})
        maxcf_rows.append(pts)
        w1_rows.append({"value": float(w1_q), "mc_value": float(w1_est), "mc_std_error": float(w1_se)})
        mean_rows.append([{"mean": mean_exact, "mean_quadrature": mean_quad, "mean_mc": mean_mc,
                           "mean_mc_std_error": mean_se, "gap": abs(mean_quad - limit_mean)}] * d)

    cf_ok = _converges(cf_gaps, cf_threshold)
    w1_ok = _converges(w1_exact, w1_threshold) if atom else None
    last_mean = mean_rows[-1][0]["mean_quadrature"] if mean_rows else float("nan")
    mean_ok = abs(last_mean - limit_mean) <= mean_tol
    if cf_ok and w1_ok and mean_ok:
        verdict = "converged"
    else:
        verdict = "inconclusive"
    summary = {
        "alpha": alpha, "generator": generator.spec, "n_mc": n_mc,
        "cf_gaps": cf_gaps, "w1": w1_exact, "w1_mc": w1_mc,
        "cf_decreasing_run": longest_decreasing_run(cf_gaps),
        "w1_decreasing_run": longest_decreasing_run(w1_exact) if atom else None,
        "cf_converged": cf_ok, "w1_converged": w1_ok,
        "verdicts_agree": (w1_ok is None) or (cf_ok == w1_ok),
        "limit_mean": limit_mean, "limit_mean_quadrature": limit_mean_quad, "final_mean": last_mean,
        "mean_converged": mean_ok, "target_formula_vs_closed_form": target_check,
        "thresholds": {"max_cf_gap": cf_threshold, "w1": w1_threshold, "mean": mean_tol},
    }
    return ConvergenceReport(
        name="gpd-maxima", verdict=verdict, summary=summary, rows=rows, seed=seed, indices=n_list,
        grid=grid.tolist(), maxcf_values=maxcf_rows, w1_values=w1_rows, mean_gaps=mean_rows,
    )


# ---------------------------------------------------------------------------
# characteristic function versus max-CF


def run_counterexample_cf_vs_maxcf(n_list: Sequence[int] = tuple(range(1, 21)), x: float = 1.0,
                                   digits: int = 50) -> ExperimentReport:
    """``P(Z_n = e^n) = 1/n``, otherwise 0: ``Z_n -> 0`` in law while ``E Z_n`` explodes."""
    x = float(x)
    if not x > 0:
        raise InvalidParameterError("x must be > 0")
    rows = []
    with mpmath.workdps(digits):
        for n in n_list:
            n = int(n)
            if n < 1:
                raise InvalidParameterError("indices must be >= 1")
            big = mpmath.e ** n
            phi = 1 - mpmath.mpf(1) / n + mpmath.mpf(1) / n * max(mpmath.mpf(1), x * big)
            gap = abs(mpmath.expj(big) - 1) / n  # |E exp(i Z_n) - 1| at t = 1
            lower = x * big / n - 1
            rows.append({
                "n": n, "phi": float(phi), "phi_exact": mpmath.nstr(phi, 30), "phi_lower_bound": float(lower),
                "cf_gap": float(gap), "cf_gap_exact": mpmath.nstr(gap, 30), "cf_gap_bound": 2.0 / n,
                "mean": float(big / n), "w1_to_zero": float(big / n),
            })
    phis = [r["phi"] for r in rows]
    bounded = all(r["phi"] >= r["phi_lower_bound"] for r in rows)
    cf_small = all(r["cf_gap"] <= r["cf_gap_bound"] for r in rows)
    maxcf_verdict = "diverged" if bounded and len(phis) > 1 and rows[-1]["phi_lower_bound"] > rows[0]["phi"] else "inconclusive"
    cf_verdict = "converged" if cf_small else "inconclusive"
    summary = {"x": x, "maxcf": maxcf_verdict, "cf": cf_verdict, "lower_bound_holds": bounded,
               "cf_bound_holds": cf_small}
    return ExperimentReport("counterexample", f"max-CF {maxcf_verdict}, CF {cf_verdict}", summary, rows)


# ---------------------------------------------------------------------------
# limits of copula maxima


def copula_limit_formula(dnorm, x) -> float:
    x = np.asarray(x, float).reshape(-1)
    if np.any(x < 0):
        raise OutOfDomainError("max-CFs are defined on the nonnegative orthant only")
    # a zero coordinate drops its marginal term and the joint term (r -> inf)
    marg = math.fsum(v * math.exp(-1.0 / v) for v in x if v > 0)
    if np.any(x == 0):
        return 1.0 + marg
    r = float(dnorm(1.0 / x))
    return float(1.0 + marg - math.exp(-r) / r)


def _neg_eta_model(dnorm: DNorm) -> RandomVectorModel:
    """``-eta`` where ``eta`` has df ``exp(-||x||_D)`` on the negative quadrant."""
    gen = dnorm.generator
    independent = gen.kind == "perm"

    def cdf(w):
        w = np.asarray(w, float)
        return 1.0 - _exceedance(w)

    def _exceedance(w):
        w = np.asarray(w, float)
        w1, w2 = w[..., 0], w[..., 1]
        finite = np.isfinite(w1) & np.isfinite(w2)
        joint = np.where(finite, np.exp(-dnorm.evaluate_many(np.where(np.isfinite(w), w, 0.0))[0]), 0.0)
        return np.exp(-w1) + np.exp(-w2) - joint

    draw = None
    if independent:
        def draw(rng, n):
            return rng.standard_exponential((n, 2))

    return RandomVectorModel(kind="neg-eta", params={"dnorm": gen}, dim=2, means=np.ones(2), draw=draw,
                             cdf=cdf, exceedance=_exceedance)


def run_copula_limit_check(dnorm: DNorm, grid=None, n: int = 1_000_000, seed: int = 0,
                           tol: float = 1e-8) -> ExperimentReport:
    if dnorm.dim != 2:
        raise ContractViolation("the copula limit check is two-dimensional")
    kind = dnorm.generator.kind
    if kind not in ("perm", "frechet"):
        raise ContractViolation(
            f"unsupported D-norm {dnorm.label!r}: use the 1-norm (perm) or a lambda-norm (frechet)")
    grid = np.asarray(grid if grid is not None else [[0.5, 0.5], [1.0, 1.0], [1.0, 2.0], [3.0, 0.7]], float)
    model = _neg_eta_model(dnorm)
    mc = monte_carlo_cf(model, n, seed) if model.draw is not None else None
    rows = []
    ok = True
    for x in grid:
        f = copula_limit_formula(dnorm, x)
        tail = maxcf_tail_integral(model, x)
        row = {"x": x.tolist(), "formula": f, "tail_integral": tail, "tail_gap": abs(f - tail)}
        ok &= abs(f - tail) <= tol
        if mc is not None:
            v, s = mc.values(x[None, :])
            row.update({"mc_value": float(v[0]), "mc_std_error": float(s[0]),
                        "mc_covers": bool(abs(f - v[0]) <= CI_WIDTH * s[0] + 1e-9)})
            ok &= row["mc_covers"]
        rows.append(row)
    summary = {"dnorm": dnorm.label, "n": n if mc is not None else 0, "tol": tol, "agrees": ok}
    return ExperimentReport("copula-limit", "formula confirmed" if ok else "formula disagrees", summary, rows,
                            seed if mc is not None else None)


# ---------------------------------------------------------------------------
# risk measures


def expected_shortfall(model: RandomVectorModel, alpha: float, atol: float = 1e-11) -> float:
    """``ES(alpha) = (1/(1-alpha)) int_alpha^1 q(b) db``.

    With ``b = 1 - (1-alpha) e^{-s}`` this is ``int_0^inf q(1 - (1-alpha)e^{-s}) e^{-s} ds``;
    the upper quantile is evaluated at the tail probability directly.
    """
    def tail_q(v):
        if model.upper_quantile is not None:
            return model.upper_quantile(v)
        return model.quantile(1.0 - v)

    def f(s):
        w = np.exp(-s)
        ok = w > 0  # the integrand vanishes once e^{-s} underflows
        return np.where(ok, tail_q((1.0 - alpha) * np.where(ok, w, 1.0)) * w, 0.0)

    return integrate(f, 0.0, math.inf, atol=atol, rtol=1e-13).value


def risk_identity_check(model: RandomVectorModel, alphas: Sequence[float] = (0.25, 0.5, 0.75, 0.9),
                        tol: float = 1e-8) -> ExperimentReport:
    """``phi(1/q(alpha)) = 1 + SP(alpha)/q(alpha)`` with ``SP = (1-alpha)(ES - q)``."""
    if model.dim != 1 or model.quantile is None or model.cdf is None:
        raise ContractViolation("risk identity needs a one-dimensional model with quantile and cdf")
    phi = closed_form_cf(model) if model.maxcf_closed_form is not None else None
    rows = []
    ok = True
    for a in alphas:
        a = float(a)
        if not 0.0 < a < 1.0:
            raise InvalidParameterError(f"alpha must lie in (0, 1) (got {a})")
        q = float(model.quantile(np.array([a]))[0])
        if q == 0.0:
            rows.append({"alpha": a, "q": q, "skipped": True})
            continue
        es = expected_shortfall(model, a)
        sp = (1.0 - a) * (es - q)
        x = np.array([1.0 / q])
        lhs = float(phi(x)) if phi is not None else maxcf_tail_integral(model, x)
        rhs = 1.0 + sp / q
        rows.append({"alpha": a, "q": q, "es": es, "sp": sp, "phi": lhs, "rhs": rhs,
                     "residual": abs(lhs - rhs), "skipped": False})
        ok &= abs(lhs - rhs) <= tol
    summary = {"model": model.spec, "tol": tol, "holds": ok}
    return ExperimentReport("risk-identity", "identity holds" if ok else "identity fails", summary, rows)


# ---------------------------------------------------------------------------
# the set of max-CFs is not closed


def run_nonclosedness_demo(base: Optional[RandomVectorModel] = None, p: float = 0.5,
                           k_list: Sequence[int] = tuple(range(1, 41)), seed: int = 0, grid=None,
                           n_mc: int = 100_000, mc_k_max: int = 5, limit_tol: float = 1e-6) -> ExperimentReport:
    """Thinned generators ``(U_1...U_k/p^k) Z`` whose max-CFs tend to ``1 + ||.||_D``.

    The thinned vectors tend to 0 in law, and the limit function fails the
    necessary conditions for a max-CF.
    """
    base = base or make_constant_generator(1)
    if not base.is_unit_mean:
        raise ContractViolation("the construction needs a unit-mean generator")
    p = float(p)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError("p must lie in (0, 1)")
    d = base.dim
    grid = np.asarray(grid if grid is not None else [[s] * d for s in (0.5, 1.0, 2.0, 5.0)], float).reshape(-1, d)
    phi = closed_form_cf(base)
    dn = DNorm.exact(base)
    limit = 1.0 + dn.evaluate_many(grid)[0]
    pf = Fraction(p)
    rows, gaps = [], []
    for k in k_list:
        k = int(k)
        vals = tp_iterate(phi, p, k, "closed")(grid)
        gap = float(np.max(np.abs(vals - limit)))
        gaps.append(gap)
        prob = pf ** k
        row = {"k": k, "gap_to_limit": gap, "prob_nonzero": float(prob), "prob_nonzero_exact": str(prob)}
        if k <= mc_k_max:
            gen = make_thinned_generator(base, p, k)
            child = int(np.random.SeedSequence([seed, k]).generate_state(1)[0])
            sample = gen.sample(child, n_mc).data
            freq = float(np.mean(np.any(sample != 0, axis=1)))
            se = math.sqrt(float(prob) * (1 - float(prob)) / n_mc)
            mc = monte_carlo_cf(gen, n_mc, child)
            mv, ms = mc.values(grid)
            dgap = dnorm_pointwise_gap(DNorm.monte_carlo(gen, n_mc, child), dn, grid)
            row.update({
                "prob_nonzero_mc": freq, "prob_nonzero_mc_covers": bool(abs(freq - float(prob)) <= CI_WIDTH * se + 1e-12),
                "maxcf_mc_covers": bool(np.all(np.abs(mv - vals) <= CI_WIDTH * ms + 1e-9)),
                "dnorm_gap": dgap.gap, "dnorm_noise_band": dgap.noise_band, "dnorm_within_noise": dgap.within_noise,
            })
        rows.append(row)
    cand = candidate_cf(lambda x: 1.0 + dn.evaluate_many(x)[0], d, label="1+||.||_D")
    diag = diagnose_max_cf(cand, [np.ones(d)])
    converged = bool(gaps) and gaps[-1] < limit_tol
    not_max_cf = not diag.is_plausible_max_cf
    verdict = "limit is not a max-CF" if converged and not_max_cf else "inconclusive"
    summary = {"p": p, "base": base.spec, "final_gap": gaps[-1] if gaps else None, "limit_tol": limit_tol,
               "pointwise_converged": converged, "limit_flags": [f["flag"] for f in diag.flags],
               "diagnosis": diag.to_dict()}
    return ExperimentReport("nonclosedness", verdict, summary, rows, seed)


# ---------------------------------------------------------------------------


def uniqueness_smoke_test(a: RandomVectorModel, b: RandomVectorModel, grid, n: int = 1_000_000, seed: int = 0,
                          declared_equal: bool = False) -> ExperimentReport:
    """Distinct laws must have max-CFs that separate somewhere on the grid."""
    if a.dim != b.dim:
        raise ContractViolation("models have different dimensions")
    grid = np.asarray(grid, float).reshape(-1, a.dim)
    sa, sb = (int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(2))
    va, ea = monte_carlo_cf(a, n, sa).values(grid)
    vb, eb = monte_carlo_cf(b, n, sb).values(grid)
    band = CI_WIDTH * np.sqrt(ea ** 2 + eb ** 2) + 1e-9
    sep = np.abs(va - vb) > band
    rows = [{"x": x.tolist(), "phi_a": float(p), "se_a": float(s), "phi_b": float(q), "se_b": float(t),
             "separated": bool(z)} for x, p, s, q, t, z in zip(grid, va, ea, vb, eb, sep)]
    if declared_equal:
        verdict = "overlap everywhere" if not sep.any() else "separated"
    else:
        verdict = "separated" if sep.any() else "inconclusive"
    summary = {"a": a.spec, "b": b.spec, "n": n, "declared_equal": declared_equal,
               "separated_points": int(sep.sum())}
    return ExperimentReport("uniqueness", verdict, summary, rows, seed)
