from __future__ import annotations

import numpy as np
import pytest

from conftest import dense_sets_to_datasets
from oracles import grid_search_subproblem
from ratecon import (ConfigError, LinearClassifier, RateconError, combination,
                     evaluate_combination, indicator_rates,
                     threshold_for_constraint, train_unconstrained_svm,
                     train_zafar_baseline, upper_bound_constraint,
                     zafar_mean_difference)
from ratecon.data import dataset_from_dense
from ratecon.metrics import recall_constraint
from ratecon.problem import lower_bound_constraint


def error_objective():
    return combination([("pos", "negative", 0.5), ("neg", "positive", 0.5)])


def test_separable_fixture_zero_training_error(rng):
    dense = {"pos": np.array([[2.0]]), "neg": np.array([[-2.0]])}
    datasets = dense_sets_to_datasets(dense)
    clf = train_unconstrained_svm(datasets, error_objective(), 0.05,
                                  eps=1e-5, rng=rng)
    err = evaluate_combination(error_objective(), datasets, clf, "indicator")
    assert err == 0.0


def test_huge_regularization_kills_weights(rng):
    dense = {"pos": np.array([[1.0]]), "neg": np.array([[-1.0]])}
    datasets = dense_sets_to_datasets(dense)
    clf = train_unconstrained_svm(datasets, error_objective(), 1e4,
                                  eps=1e-6, rng=rng)
    assert abs(clf.w[0]) <= 1e-3


def test_unconstrained_matches_grid_oracle(rng):
    dense = {"pos": np.array([[1.0], [0.3]]), "neg": np.array([[-0.8]])}
    terms = [("pos", "negative", 2 / 3), ("neg", "positive", 1 / 3)]
    datasets = dense_sets_to_datasets(dense)
    lam = 0.2
    clf = train_unconstrained_svm(datasets, combination(terms), lam,
                                  eps=1e-6, rng=rng)
    from ratecon.subproblem import ConvexSubproblem
    from ratecon import build_problem, zero_classifier
    problem = build_problem(datasets, combination(terms), [], lam)
    sub = ConvexSubproblem(problem, zero_classifier(1))
    ours = sub.psi(clf.w, clf.b, np.zeros(0))
    oracle, _ = grid_search_subproblem(terms, 0.0, dense, lam,
                                       (np.zeros(1), 0.0), lo=-3, hi=3,
                                       step=0.002)
    # the restricted grid can only overshoot the true minimum
    assert ours <= oracle + 1e-6
    assert oracle - ours <= 2e-3  # grid resolution


def test_threshold_zero_shift_when_satisfied():
    dense = {"all": np.array([[1.0], [-1.0]])}
    datasets = dense_sets_to_datasets(dense)
    con = upper_bound_constraint(combination([("all", "positive", 1.0)]), 0.5)
    clf = LinearClassifier(np.array([1.0]), 0.0)
    out = threshold_for_constraint(clf, con, datasets)
    assert out.b == clf.b


def test_threshold_flips_one_example():
    # both predicted positive, coverage <= 0.5 forces one flip
    dense = {"all": np.array([[1.0], [2.0]])}
    datasets = dense_sets_to_datasets(dense)
    con = upper_bound_constraint(combination([("all", "positive", 1.0)]), 0.5)
    clf = LinearClassifier(np.array([1.0]), 0.0)
    out = threshold_for_constraint(clf, con, datasets)
    s_p, _ = indicator_rates(datasets["all"], out)
    assert s_p == 0.5
    assert out.b == pytest.approx(1.0)  # smallest shift lands on the margin


def test_threshold_recall_on_ten_points(rng):
    margins = np.sort(rng.normal(size=10))
    dense = {"pos": margins[:, None]}
    datasets = dense_sets_to_datasets(dense)
    con = recall_constraint(datasets, 0.9)
    clf = LinearClassifier(np.array([1.0]), 3.0)  # recall 0 initially
    out = threshold_for_constraint(clf, con, datasets)
    s_p, _ = indicator_rates(datasets["pos"], out)
    assert s_p >= 0.9
    # bias sits just below the second-smallest margin: exactly 9 positives
    # (the largest feasible bias, i.e. the smallest shift down from 3.0)
    assert s_p == pytest.approx(0.9)
    assert out.b == pytest.approx(margins[1], abs=1e-9)
    assert out.b < margins[1]


def test_threshold_rejects_mixed_polarity():
    dense = {"a": np.array([[1.0]]), "b": np.array([[-1.0]])}
    datasets = dense_sets_to_datasets(dense)
    con = upper_bound_constraint(
        combination([("a", "positive", 1.0), ("b", "negative", 1.0)]), 0.5)
    clf = LinearClassifier(np.array([1.0]), 0.0)
    with pytest.raises(ConfigError):
        threshold_for_constraint(clf, con, datasets)


def test_threshold_unachievable_reports_range():
    dense = {"pos": np.array([[1.0], [2.0]])}
    datasets = dense_sets_to_datasets(dense)
    # recall >= 0.9 with weight zero: rate is 0 or 1... use lower bound 1.1
    con = lower_bound_constraint(combination([("pos", "positive", 1.0)]), 1.1)
    clf = LinearClassifier(np.array([1.0]), 0.0)
    with pytest.raises(RateconError):
        threshold_for_constraint(clf, con, datasets)


def test_mean_difference_examples():
    a = dataset_from_dense("a", np.array([[1.0, 0.0]]))
    b = dataset_from_dense("b", np.array([[0.0, 0.0]]))
    np.testing.assert_allclose(zafar_mean_difference(a, a), [0.0, 0.0])
    np.testing.assert_allclose(zafar_mean_difference(a, b), [1.0, 0.0])


def fairness_fixture(rng, n=30):
    x_a = rng.normal(0.6, 1.0, size=(n, 2))
    x_b = rng.normal(-0.4, 1.0, size=(n, 2))
    labels_a = np.where(x_a[:, 0] + 0.3 * x_a[:, 1] > 0.4, 1, -1)
    labels_b = np.where(x_b[:, 0] + 0.3 * x_b[:, 1] > 0.4, 1, -1)
    X = np.vstack([x_a, x_b])
    labels = np.concatenate([labels_a, labels_b])
    pos = X[labels == 1]
    neg = X[labels == -1]
    return {
        "pos": dataset_from_dense("pos", pos),
        "neg": dataset_from_dense("neg", neg),
        "a": dataset_from_dense("a", x_a),
        "b": dataset_from_dense("b", x_b),
    }


def test_zafar_two_sided_bound_and_unconstrained_limit(rng):
    datasets = fairness_fixture(rng)
    sizes = (datasets["pos"].size, datasets["neg"].size)
    objective = combination([("pos", "negative", sizes[0] / sum(sizes)),
                             ("neg", "positive", sizes[1] / sum(sizes))])
    lam = 0.1
    xbar = zafar_mean_difference(datasets["a"], datasets["b"])
    for c in (0.0, 0.01):
        clf = train_zafar_baseline(datasets, objective, lam, c,
                                   rng=np.random.default_rng(3),
                                   multiplier_cap=500.0)
        assert abs(float(clf.w @ xbar)) <= c + 1e-3

    clf_free = train_zafar_baseline(datasets, objective, lam, 1e6,
                                    rng=np.random.default_rng(3))
    base = train_unconstrained_svm(datasets, objective, lam, eps=1e-5,
                                   rng=np.random.default_rng(3),
                                   bias_mode="none")
    from ratecon import build_problem, zero_classifier
    from ratecon.subproblem import ConvexSubproblem
    problem = build_problem(datasets, objective, [], lam)
    sub = ConvexSubproblem(problem, zero_classifier(2))
    ours = sub.psi(clf_free.w, 0.0, np.zeros(0))
    theirs = sub.psi(base.w, 0.0, np.zeros(0))
    assert abs(ours - theirs) <= 1e-3
