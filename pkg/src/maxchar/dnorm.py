"""D-norms ``||x||_D = E max_i |x_i| Z_i`` of unit-mean generators."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import ContractViolation, DimensionError
from .models import RandomVectorModel

CI_WIDTH = 4.0
ABS_FLOOR = 1e-9
DEFAULT_MC_SIZE = 1_000_000


@dataclass(frozen=True)
class EstimateWithCI:
    """A point estimate with its CLT standard error (zero for exact evaluators)."""

    value: float
    std_error: float = 0.0
    n: int = 0
    seed: Optional[int] = None

    @property
    def exact(self) -> bool:
        return self.std_error == 0.0

    @property
    def ci(self) -> tuple[float, float]:
        half = CI_WIDTH * self.std_error
        return self.value - half, self.value + half

    def covers(self, target: float, floor: float = ABS_FLOOR) -> bool:
        return abs(self.value - target) <= CI_WIDTH * self.std_error + floor

    def to_dict(self) -> dict:
        return {"value": self.value, "std_error": self.std_error, "n": self.n, "seed": self.seed}


def mean_with_se(values: np.ndarray, seed=None) -> EstimateWithCI:
    values = np.asarray(values, float)
    n = values.shape[0]
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return EstimateWithCI(float(values.mean()), se, n, seed)


@dataclass(frozen=True, eq=False)
class DNorm:
    """A D-norm tied to its generator.

    ``evaluator`` is ``"closed-form"``, ``"enumeration"`` or ``"monte-carlo"``.
    The Monte Carlo evaluator draws one sample lazily and reuses it for every
    query, so grid evaluations are paired.
    """

    generator: RandomVectorModel
    evaluator: str
    n: int = 0
    seed: Optional[int] = None
    label: str = ""

    def __post_init__(self):
        if not self.generator.is_unit_mean:
            raise ContractViolation(f"{self.generator.kind!r} is not a unit-mean generator")
        if self.evaluator == "closed-form" and self.generator.dnorm_closed_form is None:
            raise ContractViolation(f"{self.generator.kind!r} has no closed-form D-norm")
        if self.evaluator == "enumeration" and self.generator.support is None:
            raise ContractViolation(f"{self.generator.kind!r} has no finite support to enumerate")
        if self.evaluator == "monte-carlo" and (self.n < 2 or self.seed is None):
            raise ContractViolation("Monte Carlo D-norms need n >= 2 and an explicit seed")
        if self.evaluator not in ("closed-form", "enumeration", "monte-carlo"):
            raise ContractViolation(f"unknown evaluator {self.evaluator!r}")
        if not self.label:
            object.__setattr__(self, "label", f"{self.generator.kind}/{self.evaluator}")

    @classmethod
    def exact(cls, generator: RandomVectorModel, label: str = "") -> "DNorm":
        if generator.dnorm_closed_form is not None:
            return cls(generator, "closed-form", label=label)
        return cls(generator, "enumeration", label=label)

    @classmethod
    def monte_carlo(cls, generator: RandomVectorModel, n: int = DEFAULT_MC_SIZE, seed: int = 0,
                    label: str = "") -> "DNorm":
        return cls(generator, "monte-carlo", n=n, seed=seed, label=label)

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def is_exact(self) -> bool:
        return self.evaluator != "monte-carlo"

    @cached_property
    def _sample(self) -> np.ndarray:
        return self.generator.sample(self.seed, self.n).data

    def evaluate_many(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Values and standard errors for each row of ``xs``."""
        xs = np.abs(self.generator.check_point(xs))
        flat = xs.reshape(-1, self.dim)
        if self.evaluator == "closed-form":
            vals = np.asarray(self.generator.dnorm_closed_form(flat), float)
            ses = np.zeros_like(vals)
        elif self.evaluator == "enumeration":
            pts, probs = self.generator.support
            vals = np.max(flat[:, None, :] * pts[None, :, :], axis=-1) @ probs
            ses = np.zeros_like(vals)
        else:
            z = self._sample
            vals = np.empty(flat.shape[0])
            ses = np.empty(flat.shape[0])
            for k, x in enumerate(flat):
                est = mean_with_se(np.max(z * x, axis=1))
                vals[k], ses[k] = est.value, est.std_error
        return vals.reshape(xs.shape[:-1]), ses.reshape(xs.shape[:-1])

    def __call__(self, x) -> float:
        return dnorm_eval(self, x).value


def dnorm_eval(norm: DNorm, x) -> EstimateWithCI:
    """``E max_i |x_i| Z_i`` at a single point."""
    x = np.asarray(x, float).reshape(-1)
    if x.shape[0] != norm.dim:
        raise DimensionError(f"point has dimension {x.shape[0]}, norm has {norm.dim}")
    vals, ses = norm.evaluate_many(x[None, :])
    if norm.is_exact:
        return EstimateWithCI(float(vals[0]))
    return EstimateWithCI(float(vals[0]), float(ses[0]), norm.n, norm.seed)


@dataclass(frozen=True)
class PointwiseGap:
    """Largest |a(x) - b(x)| over a grid, with the matching noise allowance."""

    gap: float
    noise_band: float
    worst_point: tuple

    @property
    def within_noise(self) -> bool:
        return self.gap <= self.noise_band


def dnorm_pointwise_gap(a: DNorm, b: DNorm, grid) -> PointwiseGap:
    grid = np.asarray(grid, float)
    if grid.size == 0:
        raise ContractViolation("empty grid")
    if grid.ndim == 1:
        grid = grid.reshape(-1, a.dim) if a.dim > 1 else grid[:, None]
    if a.dim != b.dim:
        raise DimensionError("norms have different dimensions")
    va, sa = a.evaluate_many(grid)
    vb, sb = b.evaluate_many(grid)
    gaps = np.abs(va - vb)
    bands = CI_WIDTH * np.sqrt(sa ** 2 + sb ** 2) + ABS_FLOOR
    k = int(np.argmax(gaps))
    return PointwiseGap(float(gaps[k]), float(np.max(bands)), tuple(grid[k]))


def grid_csv(norm: DNorm, grid) -> str:
    """``x1,...,xd,value,std_error`` rows for a grid of points."""
    grid = np.atleast_2d(np.asarray(grid, float))
    vals, ses = norm.evaluate_many(grid)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(norm.dim)] + ["value", "std_error"])
    for x, v, s in zip(grid, vals, ses):
        w.writerow([format(t, ".15g") for t in x] + [format(v, ".15g"), format(s, ".15g")])
    return out.getvalue()
