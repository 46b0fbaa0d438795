"""Honest adaptive confidence balls for nonparametric models."""

from .confidence_set import (ConfidenceBall, CutoffPlan, SigmaSource, build_ball, contains,
                             cutoff, diameter, solve_radius)
from .duality import TestProblem, confset_to_estimator, confset_to_test, diameter_floor_report, floor_rate
from .errors import ConfigError, InfeasibleCutoff, InfeasibleWindow, InvalidArgument
from .functional_estimators import (DensitySample, RegressionSample, hoeffding_parts,
                                    naive_u_statistic, u_statistic)
from .harness import (ExperimentConfig, run_coverage, run_duality, run_normality, run_rates,
                      run_sparse)
from .initial_estimators import (adaptive_estimator, center_estimate, condition_35_diagnostic,
                                 project_to_ellipsoid, projection_estimator)
from .norm_estimation import NormEstimate, QuantileRule, quantile, r_kn, tau_plugin
from .norminv import norm_cdf, norm_ppf
from .sequence_core import (Ellipsoid, ErrorDistribution, SequenceSample, error_family,
                            sample_sequence, select_window, sigma_hat, split_randomize)

__version__ = "0.1.0"
