import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from maxchar import (
    ContractViolation, DimensionError, DivergenceError, InvalidParameterError, OutOfDomainError, candidate_cf,
    closed_form_cf, make_constant_generator, make_frechet_lambda_generator, make_frechet_maxstable_model,
    make_gpd_model, make_permutation_generator, make_thinned_generator, make_uniform_model,
    maxcf_eval, maxcf_frechet_maxstable, maxcf_tail_integral, monte_carlo_cf, tail_integral_cf, tp_apply, tp_iterate,
    tp_limit, DNorm, RandomVectorModel,
)
from maxchar.maxcf import frechet_maxstable_cf, maxcf_grid_csv
from maxchar.models import GpdParams, frechet_maxcf_from_c

from invariant_suites import iterate_failures, maxcf_suite

GPD = make_gpd_model(GpdParams(0.0, 1.0, 0.5))


def test_value_at_origin_and_examples():
    for cf in (closed_form_cf(GPD), tail_integral_cf(GPD), closed_form_cf(make_constant_generator(2))):
        assert maxcf_eval(cf, np.zeros(cf.dim)).value == pytest.approx(1.0, abs=1e-15)
    assert maxcf_eval(closed_form_cf(GPD), [1.0]).value == pytest.approx(7 / 3, abs=1e-12)
    assert maxcf_eval(closed_form_cf(make_constant_generator(2)), [2.0, 0.5]).value == 2.0


def test_negative_point_rejected():
    with pytest.raises(OutOfDomainError):
        maxcf_eval(closed_form_cf(GPD), [-0.1])
    with pytest.raises(DimensionError):
        maxcf_eval(closed_form_cf(GPD), [1.0, 1.0])


@pytest.mark.parametrize("model, x, want", [
    (make_uniform_model(2.0), 1.0, 1.25),
    (GPD, 1.0, 7 / 3),
    (make_constant_generator(1), 3.0, 3.0),
])
def test_tail_integral_examples(model, x, want):
    assert maxcf_tail_integral(model, [x]) == pytest.approx(want, abs=1e-8)


@given(x=st.floats(0.0, 30.0), t=st.floats(0.05, 20.0))
@settings(max_examples=40, deadline=None)
def test_tail_integral_scaling_identity(x, t):
    # t phi(x / t) by quadrature against the closed form
    got = maxcf_tail_integral(GPD, [x], t=t)
    want = t * float(GPD.maxcf_closed_form(np.array([x / t])))
    assert got == pytest.approx(want, abs=1e-8 * max(1.0, t))


def test_tail_integral_requires_cdf():
    bare = RandomVectorModel(kind="bare", params={}, dim=1, means=[1.0], draw=None)
    with pytest.raises(ContractViolation):
        maxcf_tail_integral(bare, [1.0])
    with pytest.raises(ContractViolation):
        tail_integral_cf(bare)


def test_tail_integral_matches_closed_form_across_catalog():
    rng = np.random.default_rng(2)
    for m in (GPD, make_uniform_model(3.0), make_frechet_lambda_generator(3, 2.5), make_permutation_generator(3),
              make_thinned_generator(make_constant_generator(2), 0.5, 4),
              make_frechet_maxstable_model(2.5, make_permutation_generator(2))):
        x = rng.uniform(0, 4, (15, m.dim))
        assert np.allclose(tail_integral_cf(m).values(x)[0], closed_form_cf(m).values(x)[0], atol=1e-8, rtol=0)


def test_monte_carlo_covers_closed_form():
    cf = monte_carlo_cf(GPD, 10 ** 6, seed=4)
    for x in (0.25, 0.5, 1.0, 2.0, 5.0):
        est = maxcf_eval(cf, [x])
        assert est.covers(float(GPD.maxcf_closed_form(np.array([x]))))
        assert est.std_error > 0 and est.n == 10 ** 6


def test_monte_carlo_independent_of_threads():
    g = make_frechet_lambda_generator(2, 2.0)
    a = monte_carlo_cf(g, 150_000, seed=2, threads=1).values([[1.0, 0.5]])
    b = monte_carlo_cf(g, 150_000, seed=2, threads=3).values([[1.0, 0.5]])
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_frechet_maxstable_d1_quadrature_vs_monte_carlo():
    # phi(1) = 1 + int_1^inf 1 - exp(-y^-2) dy
    quad = 1 + integrate.quad(lambda y: -math.expm1(-y ** -2.0), 1, np.inf, epsabs=1e-13)[0]
    ident = lambda v: float(np.abs(np.asarray(v)).sum())
    ours = maxcf_frechet_maxstable(ident, 2.0, [1.0])
    assert ours == pytest.approx(quad, abs=1e-10)
    assert ours == pytest.approx(float(frechet_maxcf_from_c(1.0, 2.0)), abs=1e-12)
    m = make_frechet_maxstable_model(2.0, make_constant_generator(1))
    est = maxcf_eval(monte_carlo_cf(m, 10 ** 7, seed=8), [1.0])
    assert est.covers(ours)
    assert maxcf_frechet_maxstable(ident, 2.0, [0.0]) == 1.0


@given(alpha=st.floats(1.1, 8.0), x=st.lists(st.floats(0, 1e3), min_size=2, max_size=2))
@settings(max_examples=60, deadline=None)
def test_maxstable_quadrature_vs_incomplete_gamma(alpha, x):
    norm = DNorm.exact(make_frechet_lambda_generator(2, 2.0))
    x = np.array(x)
    c = norm(x ** alpha)
    got = maxcf_frechet_maxstable(norm, alpha, x)
    assert got == pytest.approx(float(frechet_maxcf_from_c(c, alpha)), rel=1e-10, abs=1e-10)


def test_frechet_maxstable_cf_wrapper():
    norm = DNorm.exact(make_permutation_generator(2))
    cf = frechet_maxstable_cf(norm, 3.0, 2)
    m = make_frechet_maxstable_model(3.0, make_permutation_generator(2))
    x = np.array([[0.5, 2.0], [1.0, 1.0]])
    assert np.allclose(cf.values(x)[0], closed_form_cf(m).values(x)[0], rtol=1e-10)


def test_tp_apply_examples():
    f = closed_form_cf(make_constant_generator(2))
    assert tp_apply(f, 1.0) is f
    assert tp_apply(f, 0.5)(np.array([2.0, 1.0])) == pytest.approx(2.5)
    for p in (0.1, 0.5, 0.9):
        assert tp_apply(closed_form_cf(GPD), p)(np.array([0.0])) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidParameterError):
        tp_apply(f, 0.0)
    with pytest.raises(InvalidParameterError):
        tp_apply(f, 1.5)


def test_tp_iterate_zero_and_mode():
    f = closed_form_cf(make_permutation_generator(2))
    assert tp_iterate(f, 0.5, 0) is f
    with pytest.raises(InvalidParameterError):
        tp_iterate(f, 0.5, 2, mode="other")
    with pytest.raises(InvalidParameterError):
        tp_iterate(f, 0.5, -1)


def test_tp_iterate_is_thinned_generator():
    base = make_permutation_generator(2)
    x = np.random.default_rng(0).uniform(0, 5, (20, 2))
    for k in (1, 3, 7):
        a = tp_iterate(closed_form_cf(base), 0.5, k).values(x)[0]
        b = closed_form_cf(make_thinned_generator(base, 0.5, k)).values(x)[0]
        assert np.allclose(a, b, rtol=0, atol=1e-12)


def test_composed_and_closed_iterates_agree():
    assert iterate_failures(np.random.default_rng(3)) == []


def test_tp_limit_constant_and_permutation():
    r = tp_limit(closed_form_cf(make_constant_generator(2)), [2.0, 1.0], tol=1e-9)
    assert r.value == pytest.approx(3.0, abs=1e-9)
    assert set(r.by_p) == {0.25, 0.5, 0.75}
    assert max(r.by_p.values()) - min(r.by_p.values()) <= 2e-9
    norm = DNorm.exact(make_permutation_generator(2))
    r = tp_limit(closed_form_cf(make_permutation_generator(2)), [2.0, 1.0], tol=1e-9, dnorm_hint=norm)
    assert r.value == pytest.approx(4.0, abs=1e-9)
    assert tp_limit(closed_form_cf(make_constant_generator(2)), [0.0, 0.0]).value == 1.0


def test_tp_limit_contracts():
    with pytest.raises(ContractViolation):
        tp_limit(closed_form_cf(GPD), [1.0])
    wrong = DNorm.exact(make_constant_generator(2))
    with pytest.raises(ContractViolation):
        tp_limit(closed_form_cf(make_permutation_generator(2)), [2.0, 1.0], dnorm_hint=wrong)


def test_tp_limit_divergence_reported():
    # linear growth 1 + k never settles
    growing = candidate_cf(lambda xs: 1.0 + np.log(1.0 / np.min(np.maximum(xs, 1e-300), axis=1)), 1)
    with pytest.raises(DivergenceError) as exc:
        tp_limit(growing, [1.0], k_max=40)
    assert len(exc.value.trace) == 41


def test_grid_csv_rows():
    text = maxcf_grid_csv(closed_form_cf(GPD), [[1.0], [0.0]])
    lines = text.splitlines()
    assert lines[0] == "x1,phi,std_error,provenance"
    assert lines[1] == "1,2.33333333333333,0,closed-form"
    assert lines[2] == "0,1,0,closed-form"


def test_maxcf_invariants_hold():
    assert maxcf_suite(17) == []
