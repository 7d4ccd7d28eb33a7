import json

import numpy as np
import pytest

from maxchar import (
    NoiseDominatesStepError, NumericFailure, OutOfDomainError, candidate_cf, closed_form_cf, diagnose_max_cf,
    invert_maxcf, make_constant_generator, make_frechet_lambda_generator, make_frechet_maxstable_model,
    make_gpd_model, make_mgpd_model, make_permutation_generator, make_thinned_generator, make_uniform_model,
    monte_carlo_cf, tail_integral_cf, verify_inversion_criterion,
)
from maxchar.inversion import invert_maxcf_details, zero_noise_cf
from maxchar.models import GpdParams

GPD = make_gpd_model(GpdParams(0.0, 1.0, 0.5))


def off_jump_grid(jumps, lo, hi, n=20, seed=0):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, n)
    for j in jumps:
        pts = np.where(np.abs(pts - j) < 1e-2, pts + 0.05, pts)
    return pts


def test_examples():
    assert invert_maxcf(closed_form_cf(GPD), [1.0]) == pytest.approx(5 / 9, abs=1e-6)
    assert invert_maxcf(closed_form_cf(make_uniform_model(2.0)), [1.0]) == pytest.approx(0.5, abs=1e-6)
    const = closed_form_cf(make_constant_generator(1))
    assert invert_maxcf(const, [2.0]) == pytest.approx(1.0, abs=1e-6)
    assert invert_maxcf(const, [0.5]) == pytest.approx(0.0, abs=1e-6)


def test_right_derivative_at_the_jump():
    # the point mass at 1 has F(1) = 1, recovered from the right
    const = closed_form_cf(make_constant_generator(1))
    assert invert_maxcf(const, [1.0]) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("model, jumps, lo, hi", [
    (GPD, (), 0.01, 20.0),
    (make_uniform_model(2.0), (2.0,), 0.01, 3.0),
    (make_constant_generator(1), (1.0,), 0.05, 4.0),
    (make_frechet_lambda_generator(1, 3.0), (), 0.05, 5.0),
    (make_gpd_model(GpdParams(1.0, 2.0, 0.3)), (1.0,), 0.05, 10.0),
])
def test_round_trip_univariate(model, jumps, lo, hi):
    grid = off_jump_grid(jumps, lo, hi)
    for cf in (closed_form_cf(model), tail_integral_cf(model)):
        got = np.array([invert_maxcf(cf, [x]) for x in grid])
        assert np.max(np.abs(got - model.cdf(grid[:, None]))) <= 1e-6


@pytest.mark.parametrize("model", [
    make_frechet_lambda_generator(2, 2.0),
    make_frechet_maxstable_model(2.0, make_permutation_generator(2)),
    make_mgpd_model(3.0, make_constant_generator(2), 1.0),
])
def test_round_trip_bivariate(model):
    rng = np.random.default_rng(1)
    grid = rng.uniform(1.05, 4.0, (20, 2))
    cf = zero_noise_cf(model)
    got = np.array([invert_maxcf(cf, x) for x in grid])
    assert np.max(np.abs(got - model.cdf(grid))) <= 1e-6


def test_bounded_generator_identifies_point_mass():
    cf = closed_form_cf(make_constant_generator(2))
    rng = np.random.default_rng(4)
    grid = rng.uniform(0.1, 3.0, (40, 2))
    grid = grid[np.all(np.abs(grid - 1.0) > 1e-2, axis=1)]
    want = np.all(grid >= 1.0, axis=1).astype(float)
    got = np.array([invert_maxcf(cf, x) for x in grid])
    assert np.max(np.abs(got - want)) <= 1e-6


def test_raw_values_in_range_and_monotone_along_rays():
    for model in (GPD, make_uniform_model(2.0), make_permutation_generator(2),
                  make_thinned_generator(make_constant_generator(2), 0.5, 2)):
        cf = closed_form_cf(model)
        ray = np.linspace(1.0, 2.0, model.dim)
        raw = np.array([invert_maxcf_details(cf, s * ray, strict=False).raw for s in np.logspace(-2, 2, 41)])
        assert raw.min() >= -1e-8 and raw.max() <= 1 + 1e-8
        assert np.all(np.diff(raw) >= -1e-8)


def test_monte_carlo_rejected():
    with pytest.raises(NoiseDominatesStepError):
        invert_maxcf(monte_carlo_cf(GPD, 1000, seed=0), [1.0])


def test_domain_errors():
    with pytest.raises(OutOfDomainError):
        invert_maxcf(closed_form_cf(GPD), [0.0])
    with pytest.raises(OutOfDomainError):
        invert_maxcf(closed_form_cf(GPD), [1.0, 2.0])


def test_nonconvergence_raises_when_strict():
    rough = candidate_cf(lambda xs: 1.0 + np.abs(np.sin(1e6 / xs[:, 0])), 1)
    with pytest.raises(NumericFailure):
        invert_maxcf(rough, [1.0])
    assert not invert_maxcf_details(rough, [1.0], strict=False).converged


def test_criterion_accepts_own_max_cf():
    rep = verify_inversion_criterion(closed_form_cf(GPD), GPD, [[0.5], [1.0], [3.0]])
    assert rep.passed and rep.failed_hypotheses() == []


def test_criterion_rejects_shifted_candidate():
    phi = closed_form_cf(GPD)
    shifted = candidate_cf(lambda xs: phi.values(xs)[0] + 0.1, 1)
    rep = verify_inversion_criterion(shifted, GPD, [[0.5], [1.0], [3.0]])
    assert "vanishing" in rep.failed_hypotheses() and not rep.passed


def test_criterion_rejects_one_plus_norm():
    const = make_constant_generator(1)
    psi = lambda xs: 1.0 + np.abs(xs[:, 0])
    rep = verify_inversion_criterion(psi, const, [[0.5], [2.0]])
    assert "derivative" in rep.failed_hypotheses()
    assert any(f["check"] == "derivative" and f["x"] == [0.5] for f in rep.failures)
    json.dumps(rep.to_dict())


def test_diagnose_genuine_max_cfs_have_no_flags():
    for model in (GPD, make_uniform_model(2.0), make_permutation_generator(2), make_constant_generator(2),
                  make_frechet_lambda_generator(2, 2.5)):
        diag = diagnose_max_cf(closed_form_cf(model), [np.ones(model.dim), np.linspace(1, 3, model.dim)])
        assert diag.is_plausible_max_cf, (model.kind, diag.flags)


def test_diagnose_one_plus_sup_norm():
    psi = candidate_cf(lambda xs: 1.0 + np.max(xs, axis=1), 1, "1+|x|")
    diag = diagnose_max_cf(psi, [[1.0]])
    kinds = {f["flag"] for f in diag.flags}
    assert "vanishing" in kinds and not diag.is_plausible_max_cf
    # recovered "cdf" is identically 1 along the ray
    assert np.allclose(diag.rays[0].values, 1.0, atol=1e-6)
    out = json.loads(diag.to_json())
    assert out["plausible"] is False and len(out["rays"][0]["s"]) == 61


def test_diagnose_constant_function():
    diag = diagnose_max_cf(candidate_cf(lambda xs: np.ones(len(xs)), 2), [[1.0, 1.0]])
    assert "constant" in {f["flag"] for f in diag.flags}


def test_diagnose_flags_values_off_origin():
    diag = diagnose_max_cf(candidate_cf(lambda xs: 2.0 + xs[:, 0], 1), [[1.0]])
    assert "value_at_origin" in {f["flag"] for f in diag.flags}
