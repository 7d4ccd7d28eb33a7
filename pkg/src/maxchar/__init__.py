"""Max-characteristic functions, D-norms and Wasserstein-1 convergence checks."""

__version__ = "0.1.0"

from .errors import (
    ContractViolation, DimensionError, DivergenceError, InvalidParameterError, MaxCharError,
    NoiseDominatesStepError, NumericFailure, OutOfDomainError, SizeCapExceeded,
)
from .models import (
    EmpiricalSample, GpdParams, RandomVectorModel, exact_dnorm, make_constant_generator,
    make_frechet_lambda_generator, make_frechet_maxstable_model, make_gpd_model, make_mgpd_maxima_model,
    make_mgpd_model, make_permutation_generator, make_thinned_generator, make_uniform_model, model_from_spec,
)
from .dnorm import DNorm, EstimateWithCI, dnorm_eval, dnorm_pointwise_gap
from .maxcf import (
    MaxCf, candidate_cf, closed_form_cf, maxcf_eval, maxcf_frechet_maxstable, maxcf_tail_integral,
    monte_carlo_cf, tail_integral_cf, tp_apply, tp_iterate, tp_limit,
)
from .inversion import diagnose_max_cf, invert_maxcf, verify_inversion_criterion
from .transport import (
    DiscreteMeasure, TransportPlan, w1_bounds, w1_discrete_exact, w1_model_distance, w1_sorted_1d,
)
from .experiments import (
    ConvergenceReport, risk_identity_check, run_copula_limit_check, run_counterexample_cf_vs_maxcf,
    run_gpd_maxima_experiment, run_nonclosedness_demo, uniqueness_smoke_test,
)
