"""Wasserstein-1 distances with the L1 ground cost ``||s - t||_1``.

The exact solver is a transportation simplex on integer-scaled masses: the
weights are rounded to integers summing to ``MASS_SCALE`` (largest remainder),
so pivoting is exact and only the final division introduces rounding.
"""

from __future__ import annotations

import csv
import io
import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dnorm import EstimateWithCI
from .errors import ContractViolation, DimensionError, InvalidParameterError, NumericFailure, SizeCapExceeded
from .models import EmpiricalSample, RandomVectorModel

MASS_SCALE = 10 ** 15
SIZE_CAP = 512
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, float)
        if s.ndim == 1:
            s = s[:, None]
        w = np.asarray(self.weights, float).reshape(-1)
        if s.ndim != 2 or s.shape[0] != w.shape[0] or s.shape[0] == 0:
            raise DimensionError("support must be m x d with one weight per row")
        if not np.all(np.isfinite(s)):
            raise InvalidParameterError("support points must be finite")
        if np.any(w < 0) or abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise InvalidParameterError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, points) -> "DiscreteMeasure":
        pts = np.asarray(points, float)
        if pts.ndim == 1:
            pts = pts[:, None]
        return cls(pts, np.full(pts.shape[0], 1.0 / pts.shape[0]))

    @classmethod
    def from_sample(cls, sample: EmpiricalSample) -> "DiscreteMeasure":
        return cls.uniform(sample.data)

    @property
    def size(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    @property
    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0]))

    def marginal(self, j: int) -> "DiscreteMeasure":
        return DiscreteMeasure(self.support[:, j:j + 1], self.weights)

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(self.dim)] + ["weight"])
        for row, wt in zip(self.support, self.weights):
            w.writerow([format(v, ".17g") for v in row] + [format(wt, ".17g")])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "DiscreteMeasure":
        rows = list(csv.reader(io.StringIO(text)))
        body = np.array([[float(v) for v in r] for r in rows[1:] if r])
        return cls(body[:, :-1], body[:, -1])


@dataclass(frozen=True, eq=False)
class TransportPlan:
    plan: np.ndarray
    cost: float

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["i", "j", "mass"])
        for i, j in zip(*np.nonzero(self.plan)):
            w.writerow([int(i), int(j), format(self.plan[i, j], ".17g")])
        return out.getvalue()


def l1_cost_matrix(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.abs(s[:, None, :] - t[None, :, :]).sum(axis=-1)


def _plan_cost(plan, cost):
    return math.fsum((plan * cost).ravel())


# ---------------------------------------------------------------------------
# one-dimensional formulas


def _as_1d(x) -> np.ndarray:
    if isinstance(x, EmpiricalSample):
        if x.d != 1:
            raise DimensionError("sorted formula needs one-dimensional samples")
        return x.data[:, 0]
    arr = np.asarray(x, float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DimensionError("sorted formula needs one-dimensional samples")
        arr = arr[:, 0]
    return arr


def w1_sorted_1d(a, b) -> float:
    """``(1/n) sum |a_(i) - b_(i)|`` for two equally sized one-dimensional samples."""
    x, y = _as_1d(a), _as_1d(b)
    if x.shape != y.shape:
        raise ContractViolation(
            f"sample sizes differ ({x.shape[0]} vs {y.shape[0]}); use w1_weighted_1d on DiscreteMeasures")
    return math.fsum(np.abs(np.sort(x) - np.sort(y))) / x.shape[0]


def w1_weighted_1d(a: DiscreteMeasure, b: DiscreteMeasure) -> float:
    """``int |F_a - F_b|`` for weighted one-dimensional measures."""
    if a.dim != 1 or b.dim != 1:
        raise DimensionError("w1_weighted_1d needs one-dimensional measures")
    xa, xb = a.support[:, 0], b.support[:, 0]
    knots = np.unique(np.concatenate([xa, xb]))
    if knots.size < 2:
        return 0.0
    left = knots[:-1]

    def cdf(x, w):
        order = np.argsort(x, kind="stable")
        cum = np.concatenate([[0.0], np.cumsum(w[order])])
        return cum[np.searchsorted(x[order], left, side="right")]

    fa, fb = cdf(xa, a.weights), cdf(xb, b.weights)
    return math.fsum(np.abs(fa - fb) * np.diff(knots))


# ---------------------------------------------------------------------------
# exact discrete solver


def _integer_masses(w: np.ndarray, total: int = MASS_SCALE) -> np.ndarray:
    """Round ``w * total`` to integers with the same sum (largest remainder)."""
    raw = w * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(raw - base), kind="stable")
        base[order[:short]] += 1
    elif short < 0:
        order = np.argsort(raw - base, kind="stable")
        idx = [i for i in order if base[i] > 0][: -short]
        base[idx] -= 1
    return base


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    flow = np.zeros((m, n), dtype=np.int64)
    basic = np.zeros((m, n), dtype=bool)
    ra, rb = a.copy(), b.copy()
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        flow[i, j] = q
        basic[i, j] = True
        ra[i] -= q
        rb[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if ra[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return flow, basic


def _tree_adjacency(basic, m, n):
    adj = [[] for _ in range(m + n)]
    for i, j in zip(*np.nonzero(basic)):
        adj[i].append(m + j)
        adj[m + j].append(i)
    return adj


def _potentials(adj, cost, m, n):
    u = np.zeros(m)
    v = np.zeros(n)
    seen = [False] * (m + n)
    seen[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for nb in adj[node]:
            if seen[nb]:
                continue
            seen[nb] = True
            if node < m:
                v[nb - m] = cost[node, nb - m] - u[node]
            else:
                u[nb] = cost[nb, node - m] - v[node - m]
            queue.append(nb)
    return u, v


def _tree_path(adj, src, dst):
    parent = {src: None}
    queue = deque([src])
    while queue:
        node = queue.popleft()
        if node == dst:
            break
        for nb in adj[node]:
            if nb not in parent:
                parent[nb] = node
                queue.append(nb)
    path = [dst]
    while path[-1] != src:
        path.append(parent[path[-1]])
    return path  # dst ... src


def _transport_simplex(a_int, b_int, cost, max_pivots=None):
    m, n = cost.shape
    flow, basic = _northwest_corner(a_int, b_int)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(cost))))
    max_pivots = max_pivots or 50 * (m + n) * (m + n) + 1000
    degenerate_run = 0
    for _ in range(max_pivots):
        adj = _tree_adjacency(basic, m, n)
        u, v = _potentials(adj, cost, m, n)
        red = cost - u[:, None] - v[None, :]
        red[basic] = 0.0
        bland = degenerate_run > 50  # anti-cycling once pivots stall
        if bland:
            cand = np.flatnonzero(red.ravel() < -tol)
            if cand.size == 0:
                return flow
            k = int(cand[0])
        else:
            k = int(np.argmin(red))
            if red.flat[k] >= -tol:
                return flow
        p, q = divmod(k, n)
        path = _tree_path(adj, m + q, p)  # col q ... row p
        cells = []
        for x, y in zip(path[:-1], path[1:]):
            cells.append((y, x - m) if y < m else (x, y - m))
        minus = cells[0::2]  # arcs leaving the column end alternate starting with a decrease
        plus = cells[1::2]
        theta = min(flow[c] for c in minus)
        ties = [c for c in minus if flow[c] == theta]
        leave = min(ties) if bland else ties[0]
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[p, q] += theta
        basic[leave] = False
        basic[p, q] = True
        degenerate_run = degenerate_run + 1 if theta == 0 else 0
    raise NumericFailure("transportation simplex hit its pivot limit", achieved_error=None)


def w1_discrete_exact(a: DiscreteMeasure, b: DiscreteMeasure, cap: int = SIZE_CAP,
                      method: str = "auto") -> TransportPlan:
    """Optimal plan for the L1 ground cost.

    ``method`` is ``auto`` (assignment for equal-size uniform measures,
    simplex otherwise), ``simplex`` or ``assignment``.
    """
    if a.dim != b.dim:
        raise DimensionError("measures live in different dimensions")
    if a.size + b.size > cap:
        raise SizeCapExceeded(
            f"combined support {a.size + b.size} exceeds the cap {cap}; use w1_bounds for an interval")
    cost = l1_cost_matrix(a.support, b.support)
    assignable = a.size == b.size and a.is_uniform and b.is_uniform
    if method == "assignment" and not assignable:
        raise ContractViolation("assignment needs equal-size uniform measures")
    if method not in ("auto", "simplex", "assignment"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if method == "assignment" or (method == "auto" and assignable):
        rows, cols = linear_sum_assignment(cost)
        plan = np.zeros_like(cost)
        plan[rows, cols] = 1.0 / a.size
        return TransportPlan(plan, _plan_cost(plan, cost))
    flow = _transport_simplex(_integer_masses(a.weights), _integer_masses(b.weights), cost)
    plan = flow / MASS_SCALE
    return TransportPlan(plan, _plan_cost(plan, cost))


def w1_bounds(a: DiscreteMeasure, b: DiscreteMeasure) -> tuple[float, float]:
    """Interval containing W1: marginal sum below, independent coupling above."""
    if a.dim != b.dim:
        raise DimensionError("measures live in different dimensions")
    lower = math.fsum(w1_weighted_1d(a.marginal(j), b.marginal(j)) for j in range(a.dim))
    cost = l1_cost_matrix(a.support, b.support)
    upper = _plan_cost(np.outer(a.weights, b.weights), cost)
    return lower, max(lower, upper)


def w1_model_distance(a: RandomVectorModel, b: RandomVectorModel, n: int, seed: int,
                      batches: int = 10, cap: int = SIZE_CAP) -> EstimateWithCI:
    """Mean exact W1 over ``batches`` subsamples of size ``cap//2`` drawn from two n-samples."""
    if a.dim != b.dim:
        raise DimensionError("models have different dimensions")
    if n < 1 or batches < 2:
        raise InvalidParameterError("need n >= 1 and at least 2 batches")
    sa, sb, sub = np.random.SeedSequence(seed).spawn(3)
    xa = a.sample(int(sa.generate_state(1)[0]), n).data
    xb = b.sample(int(sb.generate_state(1)[0]), n).data
    k = min(n, cap // 2)
    rng = np.random.Generator(np.random.PCG64(sub))
    vals = []
    for _ in range(batches):
        ia = rng.choice(n, size=k, replace=False)
        ib = rng.choice(n, size=k, replace=False)
        ma, mb = DiscreteMeasure.uniform(xa[ia]), DiscreteMeasure.uniform(xb[ib])
        if a.dim == 1:
            vals.append(w1_sorted_1d(ma.support, mb.support))
        else:
            vals.append(w1_discrete_exact(ma, mb, cap=cap).cost)
    vals = np.array(vals)
    return EstimateWithCI(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(batches)), n, seed)
