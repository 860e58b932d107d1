"""Generalized Pickands process for extreme-value-index estimation."""

from .errors import KernelNotPSDError, NumericalError, SingularSystemError, TieError
from .evt_core import (
    ExtremeIndex,
    KSequence,
    SortedSample,
    TailGrid,
    TailModel,
    check_condition_k,
    check_rc,
    exponential,
    model_from_dict,
    model_from_id,
    pareto,
    tail_quantile_eval,
    uniform,
    weibull,
)
from .functionals import GridMeasure, integral_estimator, normalized_estimate, sigma2
from .limit_gaussian import (
    CovarianceKernel,
    compare_kernels,
    gamma_closed_form,
    gamma_constructive,
    k_limit_g_factor,
    modulus_constants,
    simulate_limit_paths,
)
from .mc_harness import (
    McReport,
    ks_test,
    run_covariance_experiment,
    run_lemma1_experiment,
    run_modulus_experiment,
    run_normality_experiment,
)
from .optimizer import OptimizationProblem, optimize_measure
from .pickands import (
    ProcessPath,
    kappa_path,
    kappa_star_path,
    pickands_path,
    pickands_point,
    theoretical_pickands,
)
from .samplers import RngStream, sample_sorted, uniform_tail_stat

__version__ = "0.1.0"
