"""Recover distribution functions from max-CFs and screen candidate functions.

For a max-CF ``phi`` the map ``g(t) = t * phi(1/(t x))`` has right derivative
``P(Z <= t x)``. The derivative at ``t = 1`` is taken with forward differences
on a decreasing step schedule followed by Richardson extrapolation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import NoiseDominatesStepError, NumericFailure, OutOfDomainError
from .maxcf import MaxCf, candidate_cf, closed_form_cf, tail_integral_cf
from .models import RandomVectorModel

STEPS = (1e-2, 1e-3, 1e-4, 1e-5)
FIRST_STEPS = (1e-2, 1e-3, 1e-4)  # fallback shifts the whole schedule down one decade
CONVERGENCE_TOL = 1e-7
RANGE_SLACK = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class InversionResult:
    value: float  # clamped to [0, 1]
    raw: float
    converged: bool
    first_step: float
    achieved_error: float
    # bound on cancellation error in the differences, about eps*|g|/h
    rounding: float = 0.0


def _richardson(d: np.ndarray, ratio: float = 10.0, order: int = 2) -> np.ndarray:
    """Tableau for forward differences whose error expands in powers of h."""
    table = [list(d)]
    for j in range(1, order + 1):
        prev = table[-1]
        f = ratio ** j - 1.0
        table.append([prev[i] + (prev[i] - prev[i - 1]) / f for i in range(1, len(prev))])
    return np.array(table[-1])


def _as_cf(psi, dim=None) -> MaxCf:
    if isinstance(psi, MaxCf):
        return psi
    if dim is None:
        raise ValueError("a plain callable needs an explicit dimension")
    return candidate_cf(psi, dim)


def invert_maxcf_details(cf: MaxCf, x, strict: bool = True) -> InversionResult:
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != cf.dim:
        raise OutOfDomainError(f"point has dimension {x.shape[0]}, max-CF has {cf.dim}")
    if not np.all(x > 0):
        raise OutOfDomainError("inversion needs x > 0 in every coordinate")
    if not cf.exact:
        raise NoiseDominatesStepError(
            f"{cf.label} carries sampling noise; differencing it at steps down to 1e-5 would "
            "amplify that noise. Use a closed-form or tail-integral evaluator.", achieved_error=None)
    best = None
    for h0 in FIRST_STEPS:
        hs = h0 * np.array(STEPS) / STEPS[0]
        ts = np.concatenate([[1.0], 1.0 + hs])
        vals, ses = cf.values(1.0 / (ts[:, None] * x[None, :]))
        if np.any(ses > 0):
            raise NoiseDominatesStepError(f"{cf.label} returned nonzero standard errors",
                                          achieved_error=float(np.max(ses)))
        g = ts * vals
        diffs = (g[1:] - g[0]) / hs
        ext = _richardson(diffs)
        err = float(abs(ext[-1] - ext[-2]))
        raw = float(ext[-1])
        rounding = 16 * _EPS * float(np.max(np.abs(g))) / hs[-1]
        if best is None or err < best.achieved_error:
            best = InversionResult(min(1.0, max(0.0, raw)), raw, err < CONVERGENCE_TOL, h0, err, rounding)
        if err < CONVERGENCE_TOL:
            return best
    if strict:
        raise NumericFailure(f"right derivative did not settle at x={x.tolist()}", achieved_error=best.achieved_error)
    return best


def invert_maxcf(cf: MaxCf, x) -> float:
    """``P(Z <= x)`` recovered from the max-CF ``cf`` at ``x > 0``."""
    return invert_maxcf_details(cf, x).value


# ---------------------------------------------------------------------------


@dataclass
class CriterionReport:
    derivative_ok: bool
    vanishing_ok: bool
    match_ok: bool
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.derivative_ok and self.vanishing_ok and self.match_ok

    def failed_hypotheses(self) -> list:
        out = []
        if not self.derivative_ok:
            out.append("derivative")
        if not self.vanishing_ok:
            out.append("vanishing")
        return out

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def zero_noise_cf(model: RandomVectorModel) -> MaxCf:
    if model.maxcf_closed_form is not None:
        return closed_form_cf(model)
    return tail_integral_cf(model)


def verify_inversion_criterion(psi: Union[MaxCf, Callable], model: RandomVectorModel, grid,
                               t_far: float = 1e7, tol: float = 1e-6, vanish_tol: float = 1e-3) -> CriterionReport:
    """Check that ``psi`` satisfies both hypotheses of the uniqueness criterion and equals the max-CF.

    (a) the derivative of ``t psi(1/(t x))`` at ``t = 1`` matches the cdf,
    (b) ``t (psi(1/(t x)) - 1)`` is below ``vanish_tol`` at ``t = t_far``,
    then ``psi`` is compared with the model's own zero-noise max-CF.
    """
    cf = _as_cf(psi, model.dim)
    phi = zero_noise_cf(model)
    grid = np.atleast_2d(np.asarray(grid, float))
    rep = CriterionReport(True, True, True)
    for x in grid:
        point = x.tolist()
        try:
            got = invert_maxcf_details(cf, x, strict=False).raw
        except NumericFailure as exc:
            got = float("nan")
            rep.failures.append({"x": point, "check": "derivative", "detail": str(exc)})
        want = float(model.cdf(x[None, :])[0])
        if not abs(got - want) <= tol:
            rep.derivative_ok = False
            rep.failures.append({"x": point, "check": "derivative", "got": got, "want": want})
        far = t_far * (cf(1.0 / (t_far * x)) - 1.0)
        if not abs(far) <= vanish_tol:
            rep.vanishing_ok = False
            rep.failures.append({"x": point, "check": "vanishing", "got": float(far), "want": 0.0})
        a, b = cf(x), phi(x)
        if not abs(a - b) <= tol:
            rep.match_ok = False
            rep.failures.append({"x": point, "check": "match", "got": float(a), "want": float(b)})
    return rep


# ---------------------------------------------------------------------------


@dataclass
class RayTrace:
    ray: list
    s: list
    values: list
    converged: list


@dataclass
class Diagnosis:
    label: str
    flags: list
    rays: list

    @property
    def is_plausible_max_cf(self) -> bool:
        return not self.flags

    def to_dict(self) -> dict:
        return {"label": self.label, "flags": self.flags, "rays": [asdict(r) for r in self.rays],
                "plausible": self.is_plausible_max_cf}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def diagnose_max_cf(candidate: MaxCf, rays: Sequence, s_grid: Optional[np.ndarray] = None,
                    t_far: float = 1e7, tol: float = RANGE_SLACK, limit_tol: float = 1e-2) -> Diagnosis:
    """Necessary conditions for ``candidate`` to be a max-CF, checked along rays.

    Along each ray ``x`` the recovered ``F(s x)`` must be a distribution
    function: inside [0, 1], nondecreasing in ``s`` and tending to 1. The
    candidate must also equal 1 at the origin, satisfy the vanishing
    condition ``t (psi(1/(t x)) - 1) -> 0``, and must not be constant (no
    generator of a D-norm has a constant max-CF).
    """
    if s_grid is None:
        s_grid = np.logspace(-3, 3, 61)
    s_grid = np.sort(np.asarray(s_grid, float))
    flags = []

    def flag(kind, **detail):
        entry = {"flag": kind, **{k: v for k, v in detail.items()}}
        if entry not in flags:
            flags.append(entry)

    rays = [np.asarray(r, float).reshape(-1) for r in rays]
    origin = float(candidate(np.zeros(candidate.dim)))
    if abs(origin - 1.0) > tol:
        flag("value_at_origin", value=origin)

    traces = []
    seen = [origin]
    for x in rays:
        pts = s_grid[:, None] * x[None, :]
        seen.extend(np.asarray(candidate(pts), float).reshape(-1).tolist())
        vals, conv, noise = [], [], []
        for p in pts:
            r = invert_maxcf_details(candidate, p, strict=False)
            vals.append(r.raw)
            conv.append(r.converged)
            noise.append(r.rounding)
        vals_arr = np.array(vals)
        slack = tol + np.array(noise)
        traces.append(RayTrace(x.tolist(), s_grid.tolist(), vals, conv))
        ray = x.tolist()
        if not all(conv):
            flag("not_converged", ray=ray)
        if np.any(vals_arr < -slack) or np.any(vals_arr > 1 + slack):
            flag("out_of_range", ray=ray, min=float(vals_arr.min()), max=float(vals_arr.max()))
        if np.any(np.diff(vals_arr) < -(slack[1:] + slack[:-1])):
            flag("non_monotone", ray=ray)
        if abs(vals_arr[-1] - 1.0) > limit_tol:
            flag("upper_limit", ray=ray, value=float(vals_arr[-1]))
        far = t_far * (float(candidate(1.0 / (t_far * x))) - 1.0)
        if abs(far) > limit_tol:
            flag("vanishing", ray=ray, value=far)
        # all mass at the origin forces the candidate to be identically 1
        if abs(vals_arr[0] - 1.0) <= limit_tol:
            far_value = float(candidate(s_grid[-1] * x))
            if abs(far_value - 1.0) > tol:
                flag("zero_limit", ray=ray, mass_at_origin=float(vals_arr[0]), value=far_value)
    seen = np.array(seen)
    if seen.size and float(seen.max() - seen.min()) <= tol:
        flag("constant", value=float(seen[0]))
    return Diagnosis(candidate.label, flags, traces)
