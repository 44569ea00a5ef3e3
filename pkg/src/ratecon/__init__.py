"""Training linear binary classifiers under dataset rate constraints.

Objectives and constraints are nonnegative combinations of positive and
negative prediction rates over named datasets (coverage, recall, churn,
fairness, precision and friends).  The non-convex training problem is
attacked by iterating tight convex upper-bound subproblems, each solved
through a cutting-plane search over Lagrange multipliers whose inner
oracle is a coordinate-ascent SVM with its own bias-level cutting plane.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .analysis import (audit_trace, coefficient_sum_B, generalization_E,
                       generalization_report, rademacher_bound)
from .baselines import (threshold_for_constraint, train_unconstrained_svm,
                        train_zafar_baseline, zafar_mean_difference)
from .data import (LabeledData, UnlabeledDataset, dataset_from_dense,
                   dataset_from_pairs, partition_by_baseline,
                   partition_labeled_data)
from .errors import (ConfigError, DataError, InfeasibleError, RateconError,
                     SolverError)
from .libsvm import parse_libsvm, serialize_libsvm, write_libsvm
from .metrics import (build_fairness_constraint, build_metric,
                      build_ratio_constraint)
from .mm import MMResult, find_initial_point, majorize_minimize
from .modelio import read_model, write_model
from .problem import (ConstrainedProblem, LinearRateCombination,
                      RateConstraint, RateTerm, build_problem, canonicalize,
                      combination, lower_bound_constraint,
                      upper_bound_constraint)
from .rates import (LinearClassifier, bound_rates, evaluate_combination,
                    indicator_rates, ramp, ramp_rates, randomized_predict,
                    zero_classifier)
from .saddle import dual_psi, envelope_max, solve_saddle
from .sdca import DualState, sdca_optimize
from .subproblem import ConvexSubproblem, per_example_loss
from .trace import SolverTrace

__version__ = "0.1.0"
