import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxchar import (
    DimensionError, DNorm, dnorm_eval, dnorm_pointwise_gap, make_constant_generator, make_frechet_lambda_generator,
    make_gpd_model, make_permutation_generator, make_thinned_generator,
)
from maxchar.dnorm import EstimateWithCI, grid_csv, mean_with_se
from maxchar.models import GpdParams

from invariant_suites import dnorm_suite

vec = st.lists(st.floats(-50, 50), min_size=3, max_size=3).map(np.array)


def test_constant_takes_absolute_values():
    assert dnorm_eval(DNorm.exact(make_constant_generator(2)), [-2.0, 1.0]).value == 2.0


def test_permutation_enumeration_exact():
    est = dnorm_eval(DNorm.exact(make_permutation_generator(2)), [3.0, 4.0])
    assert est.value == 7.0 and est.exact


def test_frechet_two_norm_monte_carlo():
    norm = DNorm.monte_carlo(make_frechet_lambda_generator(2, 2.0), 10 ** 6, seed=3)
    est = dnorm_eval(norm, [1.0, 1.0])
    assert est.covers(math.sqrt(2))
    lo, hi = est.ci
    assert hi - lo == pytest.approx(8 * est.std_error)
    assert est.std_error > 0 and est.n == 10 ** 6 and est.seed == 3


def test_monte_carlo_is_reproducible_and_paired():
    g = make_frechet_lambda_generator(3, 3.0)
    a = DNorm.monte_carlo(g, 10 ** 5, seed=1)
    b = DNorm.monte_carlo(g, 10 ** 5, seed=1)
    x = np.array([[1.0, 2.0, 2.0], [0.5, 0.0, 1.0]])
    assert np.array_equal(a.evaluate_many(x)[0], b.evaluate_many(x)[0])


@given(lam=st.floats(1.2, 8.0), x=vec, y=vec, t=st.floats(-10, 10))
@settings(max_examples=60, deadline=None)
def test_frechet_closed_form_is_lambda_norm(lam, x, y, t):
    norm = DNorm.exact(make_frechet_lambda_generator(3, lam))
    assert norm(x) == pytest.approx(np.linalg.norm(x, lam), rel=1e-12, abs=1e-300)
    assert norm(x + y) <= norm(x) + norm(y) + 1e-12 * (1 + norm(x) + norm(y))
    assert norm(t * x) == pytest.approx(abs(t) * norm(x), rel=1e-12, abs=1e-300)


@given(x=vec)
@settings(max_examples=60, deadline=None)
def test_extreme_norms(x):
    assert DNorm.exact(make_constant_generator(3))(x) == pytest.approx(np.max(np.abs(x)), abs=0)
    assert DNorm.exact(make_permutation_generator(3))(x) == pytest.approx(np.sum(np.abs(x)), rel=1e-14)


def test_thinned_generator_has_same_norm():
    base = make_permutation_generator(2)
    x = np.array([[1.0, 2.0], [0.3, 0.0]])
    for k in (1, 4):
        g = make_thinned_generator(base, 0.5, k)
        assert np.allclose(DNorm.exact(g).evaluate_many(x)[0], DNorm.exact(base).evaluate_many(x)[0], rtol=1e-14)


def test_pointwise_gap_examples():
    inf = DNorm.exact(make_constant_generator(2))
    one = DNorm.exact(make_permutation_generator(2))
    assert dnorm_pointwise_gap(inf, inf, [[1.0, 2.0], [3.0, 0.5]]).gap == 0.0
    gap = dnorm_pointwise_gap(inf, one, [[1.0, 1.0]])
    assert gap.gap == 1.0 and not gap.within_noise
    g = make_frechet_lambda_generator(2, 2.0)
    grid = np.array([[1, 1], [0.5, 2], [3, 0.1], [0, 1], [2, 2]], float)
    mc = dnorm_pointwise_gap(DNorm.monte_carlo(g, 10 ** 6, seed=5), DNorm.exact(g), grid)
    assert mc.within_noise


def test_exact_requires_closed_form_generator():
    with pytest.raises(Exception):
        DNorm.exact(make_gpd_model(GpdParams(0, 1, 0.5)))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        dnorm_eval(DNorm.exact(make_constant_generator(2)), [1.0, 2.0, 3.0])


def test_mean_with_se_matches_numpy():
    v = np.arange(10.0)
    est = mean_with_se(v)
    assert est.value == 4.5 and est.std_error == pytest.approx(v.std(ddof=1) / math.sqrt(10))
    assert EstimateWithCI(1.0).covers(1.0 + 1e-10)
    assert not EstimateWithCI(1.0).covers(1.0 + 1e-8)


def test_grid_csv_layout():
    text = grid_csv(DNorm.exact(make_permutation_generator(2)), [[3.0, 4.0]])
    assert text.splitlines() == ["x1,x2,value,std_error", "3,4,7,0"]


def test_dnorm_invariants_hold():
    assert dnorm_suite(17) == []
