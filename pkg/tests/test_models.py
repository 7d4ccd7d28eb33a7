import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from maxchar import (
    ContractViolation, DimensionError, EmpiricalSample, InvalidParameterError, OutOfDomainError,
    make_constant_generator, make_frechet_lambda_generator, make_frechet_maxstable_model, make_gpd_model,
    make_mgpd_maxima_model, make_mgpd_model, make_permutation_generator, make_thinned_generator, make_uniform_model,
    model_from_spec,
)
from maxchar.models import GpdParams, frechet_maxcf_from_c

from invariant_suites import model_suite


def gpd(mu=0.0, sigma=1.0, xi=0.5):
    return make_gpd_model(GpdParams(mu, sigma, xi))


def test_constant_generator_rows_and_closed_form():
    m = make_constant_generator(2)
    assert np.all(m.sample(3, 100).data == 1.0)
    assert m.maxcf_closed_form(np.array([2.0, 0.5])) == 2.0
    assert m.maxcf_closed_form(np.array([0.3, 0.5])) == 1.0
    assert np.all(m.means == 1.0) and m.is_unit_mean


def test_permutation_generator_enumeration():
    m = make_permutation_generator(2)
    pts, probs = m.support
    x = np.array([3.0, 4.0])
    assert probs @ np.max(pts * x, axis=1) == 7.0
    assert np.allclose(m.means, 1.0)
    rows = m.sample(0, 1000).data
    assert set(map(tuple, rows)) <= {(2.0, 0.0), (0.0, 2.0)}


def test_frechet_generator_mean_uses_gamma():
    lam = 3.0
    m = make_frechet_lambda_generator(3, lam)
    # oracle: E X = Gamma(1 - 1/lam) for standard Frechet, so the scaled generator has mean 1
    data = m.sample(5, 10 ** 6).data
    se = data.std(axis=0, ddof=1) / 1e3
    assert np.all(np.abs(data.mean(axis=0) - 1.0) <= 4 * se)
    x = np.array([1.0, 2.0, 2.0])
    est = np.max(data * x, axis=1)
    assert abs(est.mean() - 17 ** (1 / 3)) <= 4 * est.std(ddof=1) / 1e3


def test_frechet_lambda_two_mc_dnorm():
    m = make_frechet_lambda_generator(2, 2.0)
    data = m.sample(11, 10 ** 6).data
    v = np.max(data, axis=1)
    assert abs(v.mean() - math.sqrt(2)) <= 4 * v.std(ddof=1) / 1e3


@pytest.mark.parametrize("lam", [1.5, 2.0, 3.0, 7.5])
def test_frechet_generator_cdf_matches_scipy(lam):
    m = make_frechet_lambda_generator(2, lam)
    g = math.gamma(1 - 1 / lam)
    x = np.array([[0.5, 0.7], [1.0, 2.0], [3.0, 0.4]])
    # independent margins X_i / Gamma(1 - 1/lam) with X_i standard Frechet(lam)
    want = np.prod(stats.invweibull.cdf(x * g, lam), axis=1)
    assert np.allclose(m.cdf(x), want, rtol=1e-12, atol=0)


def test_gpd_examples():
    m = gpd()
    assert m.cdf(np.array([1.0])) == pytest.approx(5 / 9, abs=1e-15)
    assert m.maxcf_closed_form(np.array([1.0])) == pytest.approx(7 / 3, abs=1e-12)
    assert gpd(mu=2.0).maxcf_closed_form(np.array([1.0])) == pytest.approx(4.0, abs=1e-12)


@given(mu=st.floats(0, 3), sigma=st.floats(0.1, 4), xi=st.floats(0.05, 0.9), x=st.floats(0, 50))
@settings(max_examples=60, deadline=None)
def test_gpd_cdf_quantile_against_scipy(mu, sigma, xi, x):
    m = gpd(mu, sigma, xi)
    want = stats.genpareto.cdf(x, xi, loc=mu, scale=sigma)
    assert m.cdf(np.array([x])) == pytest.approx(want, abs=1e-13)
    u = min(max(want, 1e-6), 1 - 1e-6)
    q = float(m.quantile(np.array(u)))
    assert q == pytest.approx(stats.genpareto.ppf(u, xi, loc=mu, scale=sigma), rel=1e-9)


@given(mu=st.floats(0, 2), sigma=st.floats(0.2, 3), xi=st.floats(0.05, 0.8), x=st.floats(0.01, 20))
@settings(max_examples=40, deadline=None)
def test_gpd_closed_form_against_quad(mu, sigma, xi, x):
    m = gpd(mu, sigma, xi)
    # E max(1, xZ) = 1 + int_{1/x}^inf x P(Z > z) dz
    lo = max(1 / x, mu)  # the survival function is 1 below the location
    tail = lo - 1 / x + integrate.quad(lambda z: stats.genpareto.sf(z, xi, loc=mu, scale=sigma), lo, np.inf,
                                       epsabs=1e-12, epsrel=1e-12, limit=400)[0]
    assert m.maxcf_closed_form(np.array([x])) == pytest.approx(1 + x * tail, rel=1e-8)


@pytest.mark.parametrize("xi", [0.0, 1.0, -0.1, 1.5])
def test_gpd_rejects_shape_outside_unit_interval(xi):
    with pytest.raises(InvalidParameterError):
        GpdParams(0.0, 1.0, xi)


def test_gpd_rejects_bad_scale_and_location():
    with pytest.raises(InvalidParameterError):
        GpdParams(0.0, 0.0, 0.5)
    with pytest.raises(InvalidParameterError):
        GpdParams(-1.0, 1.0, 0.5)


def test_uniform_examples():
    m = make_uniform_model(2.0)
    assert m.maxcf_closed_form(np.array([1.0])) == 1.25
    assert m.maxcf_closed_form(np.array([0.5])) == 1.0
    assert m.cdf(np.array([1.0])) == 0.5


def test_mgpd_constant_generator_cdf():
    m = make_mgpd_model(2.0, make_constant_generator(1), 1.0)
    x = np.array([[1.0], [2.0], [5.0]])
    assert np.allclose(m.cdf(x), 1 - 1 / x[:, 0] ** 2, atol=1e-15)
    data = m.sample(2, 10 ** 5).data
    assert data.min() >= 1.0


def test_mgpd_cdf_below_region_is_out_of_domain():
    m = make_mgpd_model(2.0, make_permutation_generator(2), 2.0)
    with pytest.raises(OutOfDomainError):
        m.cdf(np.array([1.0, 3.0]))


def test_mgpd_requires_unit_mean_bounded_generator():
    with pytest.raises(ContractViolation):
        make_mgpd_model(2.0, gpd(), 1.0)
    with pytest.raises(ContractViolation):
        make_mgpd_model(2.0, make_frechet_lambda_generator(2, 2.0), 5.0)
    with pytest.raises(ContractViolation):
        make_mgpd_model(2.0, make_permutation_generator(3), 2.0)
    with pytest.raises(InvalidParameterError):
        make_mgpd_model(1.0, make_constant_generator(1), 1.0)


def test_mgpd_maxima_cdf_and_mean():
    n, alpha = 30, 2.0
    m = make_mgpd_maxima_model(alpha, make_constant_generator(1), 1.0, n)
    x = np.array([[0.5], [1.0], [3.0]])
    assert np.allclose(m.cdf(x), (1 - 1 / (n * x[:, 0] ** 2)) ** n, rtol=1e-14)
    # the mean by quadrature of the exceedance
    lo = n ** -0.5  # below the lower end of the support the exceedance is 1
    mean = lo + integrate.quad(lambda y: 1 - float(m.cdf(np.array([y]))), lo, np.inf, epsabs=1e-12, limit=400)[0]
    assert m.means[0] == pytest.approx(mean, rel=1e-8)


def test_frechet_maxstable_closed_form_two_routes():
    m = make_frechet_maxstable_model(3.0, make_frechet_lambda_generator(2, 2.0))
    x = np.array([[0.5, 1.0], [2.0, 0.1], [0.0, 0.0]])
    c = np.sqrt(np.sum((x ** 3) ** 2, axis=1))  # ||x^alpha||_D for the 2-norm generator
    assert np.allclose(m.maxcf_closed_form(x), frechet_maxcf_from_c(c, 3.0), rtol=1e-14)
    quad = [1 + integrate.quad(lambda y: -math.expm1(-ci * y ** -3.0), 1, np.inf, epsabs=1e-13)[0] for ci in c]
    assert np.allclose(m.maxcf_closed_form(x), quad, rtol=1e-10)
    with pytest.raises(ContractViolation):
        m.sample(0, 10)


def test_thinned_generator_moments_and_cdf():
    base = make_permutation_generator(2)
    m = make_thinned_generator(base, 0.5, 3)
    assert np.all(m.means == 1.0)
    pts, probs = m.support
    assert probs.sum() == pytest.approx(1.0, abs=1e-15)
    assert m.cdf(np.array([1.0, 1.0])) == pytest.approx(7 / 8)
    assert m.cdf(np.array([16.0, 16.0])) == 1.0
    data = m.sample(4, 10 ** 5).data
    frac_zero = np.mean(np.all(data == 0, axis=1))
    assert abs(frac_zero - 7 / 8) <= 4 * math.sqrt(7 / 64 / 1e5)


def test_sampling_independent_of_thread_count():
    m = make_frechet_lambda_generator(2, 2.0)
    a = m.sample(9, 200_000, threads=1).data
    b = m.sample(9, 200_000, threads=4).data
    assert np.array_equal(a, b)


def test_sampling_depends_on_seed():
    m = gpd()
    assert not np.array_equal(m.sample(1, 100).data, m.sample(2, 100).data)


def test_empirical_sample_csv_roundtrip():
    s = gpd().sample(0, 50)
    text = s.to_csv()
    assert text.splitlines()[0] == "z1"
    back = EmpiricalSample.from_csv(io.StringIO(text))
    assert np.array_equal(back.data, s.data)


def test_empirical_sample_rejects_negative():
    with pytest.raises(ContractViolation):
        EmpiricalSample(np.array([[1.0], [-0.5]]))


@pytest.mark.parametrize("spec", [
    {"kind": "gpd", "params": {"mu": 0, "sigma": 1, "xi": 0.5}},
    {"kind": "frechet", "params": {"lambda": 2.0, "d": 3}},
    {"kind": "mgpd", "params": {"alpha": 2.0, "bound": 2.0, "generator": {"kind": "perm", "params": {"d": 2}}}},
    {"kind": "thinned", "params": {"p": 0.5, "k": 2, "base": {"kind": "const", "params": {"d": 1}}}},
])
def test_model_spec_json_roundtrip(spec):
    m = model_from_spec(spec)
    again = model_from_spec(json.loads(m.to_json()))
    assert again.to_json() == m.to_json()
    assert again.kind == spec["kind"]


def test_model_spec_rejects_unknown_keys():
    with pytest.raises(ValueError):
        model_from_spec({"kind": "gpd", "params": {"mu": 0, "sigma": 1, "xi": 0.5, "extra": 1}})
    with pytest.raises(ValueError):
        model_from_spec({"kind": "nope", "params": {}})


def test_dimension_checks():
    m = make_constant_generator(2)
    with pytest.raises(DimensionError):
        m.check_point(np.ones(3))
    with pytest.raises(InvalidParameterError):
        make_constant_generator(0)


def test_model_invariants_hold():
    assert model_suite(17) == []
