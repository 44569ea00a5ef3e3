"""Metric cookbook: standard classification metrics as rate combinations.

Counting metrics weight each dataset's rate by its size (e.g. the number
of true positives is |pos| * s_p(pos)); rate metrics divide by the
relevant total.  Ratio metrics (precision, F1, win/loss) cannot appear in
the objective but become linear constraints after multiplying through by
their denominator.
"""

from __future__ import annotations

from typing import Mapping

from . import data as D
from .data import UnlabeledDataset, require_datasets
from .errors import ConfigError
from .problem import (NEGATIVE, POSITIVE, LinearRateCombination, RateConstraint,
                      combination, lower_bound_constraint,
                      upper_bound_constraint)

LINEAR_METRICS = (
    "coverage", "num_tp", "num_tn", "num_fp", "num_fn", "num_errors",
    "error_rate", "recall", "num_changes", "churn_rate", "num_wins",
    "num_losses",
)


def _size(datasets: Mapping[str, UnlabeledDataset], name: str) -> int:
    return datasets[name].size


def build_metric(kind: str, datasets: Mapping[str, UnlabeledDataset],
                 dataset: str | None = None) -> LinearRateCombination:
    """Return the canonical rate combination for a named metric.

    ``dataset`` selects the target for single-dataset metrics (coverage
    defaults to "all", recall to "pos", and so on).  Partition-based
    metrics look up the standard partition names and raise a configuration
    error when a required piece is missing.
    """
    if kind == "coverage":
        name = dataset or D.ALL
        require_datasets(datasets, [name], "coverage")
        return combination([(name, POSITIVE, 1.0)])

    if kind == "num_tp":
        require_datasets(datasets, [D.POS], "num_tp")
        return combination([(D.POS, POSITIVE, _size(datasets, D.POS))])
    if kind == "num_tn":
        require_datasets(datasets, [D.NEG], "num_tn")
        return combination([(D.NEG, NEGATIVE, _size(datasets, D.NEG))])
    if kind == "num_fp":
        require_datasets(datasets, [D.NEG], "num_fp")
        return combination([(D.NEG, POSITIVE, _size(datasets, D.NEG))])
    if kind == "num_fn":
        require_datasets(datasets, [D.POS], "num_fn")
        return combination([(D.POS, NEGATIVE, _size(datasets, D.POS))])

    if kind == "num_errors":
        return build_metric("num_fp", datasets).plus(build_metric("num_fn", datasets))
    if kind == "error_rate":
        require_datasets(datasets, [D.POS, D.NEG], "error_rate")
        total = _size(datasets, D.POS) + _size(datasets, D.NEG)
        return build_metric("num_errors", datasets).scaled(1.0 / total)

    if kind == "recall":
        # #TP / |pos| = s_p(pos): the denominator is a constant.
        name = dataset or D.POS
        require_datasets(datasets, [name], "recall")
        return combination([(name, POSITIVE, 1.0)])

    if kind in ("num_changes", "churn_rate"):
        parts = _churn_parts(datasets, kind)
        changes = combination(parts)
        if kind == "num_changes":
            return changes
        total = sum(_size(datasets, name) for name, _, _ in parts)
        return changes.scaled(1.0 / total)

    if kind == "num_wins":
        require_datasets(datasets, [D.POS_BASENEG, D.NEG_BASEPOS], "num_wins")
        return combination([
            (D.POS_BASENEG, POSITIVE, _size(datasets, D.POS_BASENEG)),
            (D.NEG_BASEPOS, NEGATIVE, _size(datasets, D.NEG_BASEPOS)),
        ])
    if kind == "num_losses":
        require_datasets(datasets, [D.POS_BASEPOS, D.NEG_BASENEG], "num_losses")
        return combination([
            (D.POS_BASEPOS, NEGATIVE, _size(datasets, D.POS_BASEPOS)),
            (D.NEG_BASENEG, POSITIVE, _size(datasets, D.NEG_BASENEG)),
        ])

    raise ConfigError(f"unknown metric kind {kind!r}")


def _churn_parts(datasets, what):
    """Disagreement terms against the baseline's predictions.

    Works from either the four label x baseline cells or, for unlabeled
    pools, the two baseline-only slices; the two decompositions count the
    same disagreements (changes = wins + losses).
    """
    four = (D.POS_BASEPOS, D.POS_BASENEG, D.NEG_BASEPOS, D.NEG_BASENEG)
    two = (D.BASE_POS, D.BASE_NEG)
    if any(name in datasets for name in two):
        present = [name for name in two if name in datasets]
        terms = []
        for name in present:
            predicted = POSITIVE if name == D.BASE_POS else NEGATIVE
            # Disagreement flips the baseline's prediction.
            flip = NEGATIVE if predicted == POSITIVE else POSITIVE
            terms.append((name, flip, _size(datasets, name)))
        return terms
    present = [name for name in four if name in datasets]
    if not present:
        raise ConfigError(
            f"{what} requires a baseline partition "
            f"({list(two)} or {list(four)}); only {sorted(datasets)} present")
    terms = []
    for name in present:
        base_positive = name in (D.POS_BASEPOS, D.NEG_BASEPOS)
        flip = NEGATIVE if base_positive else POSITIVE
        terms.append((name, flip, _size(datasets, name)))
    return terms


def build_ratio_constraint(numerator: LinearRateCombination,
                           denominator: LinearRateCombination,
                           ratio_bound: float,
                           direction: str,
                           datasets: Mapping[str, UnlabeledDataset] | None = None,
                           ) -> RateConstraint:
    """Constraint numerator/denominator {>=, <=} ratio_bound, multiplied through.

    The returned constraint is the linear form
    ``numerator {>=,<=} ratio_bound * denominator`` put in canonical
    upper-bound shape; no division is ever evaluated, so a vanishing
    denominator cannot blow up.
    """
    if any(t.coefficient < 0 for t in denominator.terms):
        raise ConfigError("ratio denominators must have nonnegative coefficients")
    scaled = denominator.scaled(float(ratio_bound))
    if direction in (">=", "ge"):
        # numerator >= bound * denominator  <=>  bound*denominator - numerator <= 0
        lhs = scaled.plus(numerator.scaled(-1.0))
    elif direction in ("<=", "le"):
        lhs = numerator.plus(scaled.scaled(-1.0))
    else:
        raise ConfigError(f"bad ratio direction {direction!r}")
    return upper_bound_constraint(lhs, 0.0, datasets)


def build_fairness_constraint(datasets: Mapping[str, UnlabeledDataset],
                              kappa: float,
                              group_a: str = D.GROUP_A,
                              group_b: str = D.GROUP_B) -> RateConstraint:
    """s_p(group_a) >= kappa * s_p(group_b) as a canonical upper bound.

    kappa = 0.8 encodes the 80% rule; kappa = 1 the one-sided
    demographic-parity equality.  Pass the positive-label intersections
    ("a_pos"/"b_pos") for the equal-opportunity variant.
    """
    if not (0.0 < kappa <= 1.0):
        raise ConfigError(f"fairness kappa must lie in (0, 1], got {kappa}")
    require_datasets(datasets, [group_a, group_b], "fairness constraint")
    lhs = combination([(group_b, POSITIVE, float(kappa)), (group_a, POSITIVE, -1.0)])
    return upper_bound_constraint(lhs, 0.0, datasets)


def precision_constraint(datasets: Mapping[str, UnlabeledDataset],
                         min_precision: float) -> RateConstraint:
    num = build_metric("num_tp", datasets)
    den = build_metric("num_tp", datasets).plus(build_metric("num_fp", datasets))
    return build_ratio_constraint(num, den, min_precision, ">=", datasets)


def recall_constraint(datasets: Mapping[str, UnlabeledDataset],
                      min_recall: float, dataset: str | None = None) -> RateConstraint:
    return lower_bound_constraint(
        build_metric("recall", datasets, dataset), min_recall, datasets)


def coverage_constraint(datasets: Mapping[str, UnlabeledDataset],
                        bound: float, direction: str,
                        dataset: str | None = None) -> RateConstraint:
    lhs = build_metric("coverage", datasets, dataset)
    if direction in ("<=", "le"):
        return upper_bound_constraint(lhs, bound, datasets)
    if direction in (">=", "ge"):
        return lower_bound_constraint(lhs, bound, datasets)
    raise ConfigError(f"bad coverage direction {direction!r}")


def churn_constraint(datasets: Mapping[str, UnlabeledDataset],
                     max_churn: float) -> RateConstraint:
    return upper_bound_constraint(
        build_metric("churn_rate", datasets), max_churn, datasets)


def egregious_constraint(datasets: Mapping[str, UnlabeledDataset],
                         dataset: str, polarity: str,
                         min_rate: float) -> RateConstraint:
    """Require at least ``min_rate`` of a dataset to be classified ``polarity``."""
    if not (0.0 <= min_rate <= 1.0):
        raise ConfigError("egregious-example rate must lie in [0, 1]")
    require_datasets(datasets, [dataset], "egregious constraint")
    return lower_bound_constraint(
        combination([(dataset, polarity, 1.0)]), min_rate, datasets)
