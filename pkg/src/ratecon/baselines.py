"""Comparison methods: plain SVM, bias thresholding, covariance constraint.

The plain SVM is the solver's own no-constraint path anchored at zero
(where every ramp term takes its hinge bound, i.e. a standard weighted
hinge SVM).  Thresholding shifts only the bias of a trained classifier
until an indicator-rate constraint holds.  The covariance baseline bounds
|<w, xbar>| for the group mean-difference vector xbar through two hinge
constraints on a singleton pseudo-dataset, reusing the saddle machinery.
"""

from __future__ import annotations

import logging

import numpy as np

from .data import UnlabeledDataset, dataset_from_dense
from .errors import ConfigError, RateconError
from .problem import (LinearRateCombination, RateConstraint, build_problem,
                      combination)
from .rates import LinearClassifier, evaluate_combination, zero_classifier
from .saddle import solve_saddle
from .subproblem import ConvexSubproblem
from .trace import SolverTrace

logger = logging.getLogger(__name__)


def train_unconstrained_svm(datasets, objective: LinearRateCombination,
                            lam: float, eps: float = 1e-4,
                            rng: np.random.Generator | None = None,
                            bias_mode: str = "free",
                            trace: SolverTrace | None = None,
                            sdca_max_epochs: int = 20000) -> LinearClassifier:
    """Hinge-objective SVM: the no-constraint solver anchored at zero."""
    if rng is None:
        rng = np.random.default_rng(0)
    problem = build_problem(datasets, objective, [], lam)
    sub = ConvexSubproblem(problem, zero_classifier(problem.dim))
    clf, _, _, _ = solve_saddle(sub, eps, rng, bias_mode=bias_mode,
                                trace=trace, sdca_max_epochs=sdca_max_epochs)
    return clf


def threshold_for_constraint(clf: LinearClassifier,
                             constraint: RateConstraint,
                             datasets) -> LinearClassifier:
    """Shift only the bias until the indicator-rate constraint holds.

    Requires a single-polarity constraint (the indicator value is then
    monotone in the bias).  The scan over margin breakpoints is exact;
    among satisfying biases the one closest to the original is returned,
    and equal shifts prefer the larger bias (smaller coverage).
    """
    polarities = {t.polarity for t in constraint.lhs.terms}
    if len(polarities) != 1:
        raise ConfigError(
            "bias thresholding needs a single-polarity constraint; this one "
            "mixes positive and negative rates and is not monotone in the bias")

    candidates = _bias_candidates(clf, constraint.lhs, datasets)

    def value(b: float) -> float:
        shifted = LinearClassifier(clf.w, b)
        return evaluate_combination(constraint.lhs, datasets, shifted, "indicator")

    feasible = [b for b in candidates if value(b) <= constraint.bound]
    if not feasible:
        vals = [value(b) for b in candidates]
        raise RateconError(
            f"no bias satisfies the constraint: achievable values lie in "
            f"[{min(vals)!r}, {max(vals)!r}], bound {constraint.bound!r}")
    best = min(feasible, key=lambda b: (abs(b - clf.b), -b))
    return LinearClassifier(clf.w, best)


def _bias_candidates(clf, combo, datasets) -> list[float]:
    """Breakpoints of the indicator rates as functions of the bias.

    Rates are constant on [m_k, m_{k+1}) for sorted margins m; the margin
    values and their immediate predecessors cover every interval.
    """
    margins = [np.asarray([clf.b])]
    for name in combo.dataset_ids():
        margins.append(datasets[name].margins(clf.w, 0.0))
    union = np.unique(np.concatenate(margins))
    below = np.nextafter(union, -np.inf)
    return sorted(set(map(float, union)) | set(map(float, below)))


def zafar_mean_difference(group_a: UnlabeledDataset,
                          group_b: UnlabeledDataset) -> np.ndarray:
    """Mean feature vector of group A minus mean of group B."""
    if group_a.dim != group_b.dim:
        raise ConfigError("group dimensions differ")
    mean_a = np.asarray(group_a.matrix.mean(axis=0)).ravel()
    mean_b = np.asarray(group_b.matrix.mean(axis=0)).ravel()
    return mean_a - mean_b


PSEUDO_ID = "mean_difference"


def covariance_constraints(xbar: np.ndarray, c: float,
                           ) -> tuple[dict, list[RateConstraint]]:
    """-c <= <w, xbar> <= c encoded as hinge rate constraints.

    Both sides use the singleton pseudo-dataset {xbar / 2}: with a zero
    anchor and no bias, twice its hinge rate equals max(0, 1 +- <w, xbar>),
    so bounding both by c + 1 is exactly the two-sided constraint.
    """
    if c < 0:
        raise ConfigError("covariance bound c must be nonnegative")
    pseudo = dataset_from_dense(PSEUDO_ID, (0.5 * xbar)[None, :])
    lo = RateConstraint(combination([(PSEUDO_ID, "negative", 2.0)]), c + 1.0)
    hi = RateConstraint(combination([(PSEUDO_ID, "positive", 2.0)]), c + 1.0)
    return {PSEUDO_ID: pseudo}, [lo, hi]


def train_zafar_baseline(datasets, objective: LinearRateCombination,
                         lam: float, c: float,
                         group_a: str = "a", group_b: str = "b",
                         eps: float = 2e-4,
                         rng: np.random.Generator | None = None,
                         multiplier_cap: float | None = None,
                         trace: SolverTrace | None = None,
                         sdca_max_epochs: int = 20000) -> LinearClassifier:
    """SVM with the mean-difference covariance bound |<w, xbar>| <= c.

    A single convex solve at the zero anchor (the hinge encoding is exact
    only there), with the bias pinned at zero: the covariance constraint
    is bias-free by construction.  c -> infinity recovers the plain SVM.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    xbar = zafar_mean_difference(datasets[group_a], datasets[group_b])
    pseudo, constraints = covariance_constraints(xbar, c)
    merged = dict(datasets)
    merged.update(pseudo)
    problem = build_problem(merged, objective, constraints, lam,
                            multiplier_cap=multiplier_cap)
    sub = ConvexSubproblem(problem, zero_classifier(problem.dim))
    clf, v_star, _, _ = solve_saddle(
        sub, eps, rng, bias_mode="none", trace=trace,
        sdca_max_epochs=sdca_max_epochs)
    gap = abs(float(clf.w @ xbar)) - c
    if gap > eps * (2.0 + c):
        logger.warning("covariance constraint violated by %.3g after solve", gap)
    return clf
