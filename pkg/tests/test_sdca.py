from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_sets_to_datasets
from ratecon import (ConvexSubproblem, build_problem, combination,
                     sdca_optimize, zero_classifier)
from ratecon.sdca import conjugate_loss, mirror_w
from ratecon.subproblem import per_example_loss


def weighted_svm(dense, terms, lam, cap=10.0):
    datasets = dense_sets_to_datasets(dense)
    problem = build_problem(datasets, combination(terms), [], lam,
                            multiplier_cap=cap)
    return ConvexSubproblem(problem, zero_classifier(problem.dim))


def test_single_example_closed_form(rng):
    # one example x = 1 with a positive-side hinge, lambda = 1:
    # minimize max(0, 1/2 + w) + w^2/2 -> w* = -1/2, value 1/8
    sub = weighted_svm({"d": np.array([[1.0]])}, [("d", "positive", 1.0)], 1.0)
    a_plus, a_minus = sub.combined_coefficients(np.zeros(0))
    state = sdca_optimize(sub, a_plus, a_minus, b=0.0, eps_gap=1e-8, rng=rng)
    assert state.w[0] == pytest.approx(-0.5, abs=1e-6)
    assert state.primal_value == pytest.approx(1 / 8, abs=1e-8)
    assert state.gap <= 1e-8


def test_all_zero_coefficients(rng):
    # zero box: the dual is pinned at xi = 0, w = 0, gap exactly 0
    sub = weighted_svm({"d": np.array([[1.0], [2.0]])}, [("d", "positive", 1.0)], 1.0)
    a_plus = np.zeros(sub.n)
    a_minus = np.zeros(sub.n)
    state = sdca_optimize(sub, a_plus, a_minus, b=0.0, eps_gap=1e-12, rng=rng)
    assert np.all(state.xi == 0.0)
    assert np.all(state.w == 0.0)
    assert state.gap == pytest.approx(0.0, abs=1e-15)


def test_gap_certificates_random_instances(rng):
    # weak duality plus the requested certificate on random weighted SVMs
    for trial in range(30):
        n = int(rng.integers(2, 51))
        d = int(rng.integers(1, 11))
        X = rng.normal(size=(n, d))
        split = max(1, n // 2)
        dense = {"p": X[:split], "q": X[split:]} if split < n else {"p": X}
        terms = [(name, pol, float(rng.uniform(0.1, 2.0)))
                 for name in dense
                 for pol in (("positive",) if rng.random() < 0.5 else ("negative",))]
        lam = float(rng.uniform(0.05, 1.0))
        sub = weighted_svm(dense, terms, lam)
        a_plus, a_minus = sub.combined_coefficients(np.zeros(0))
        b = float(rng.normal())
        state = sdca_optimize(sub, a_plus, a_minus, b=b, eps_gap=1e-6, rng=rng)
        assert 0.0 <= state.gap <= 1e-6
        # primal mirror: recomputing w from the dual variables from scratch
        np.testing.assert_allclose(mirror_w(sub, state.xi), state.w,
                                   atol=1e-9, rtol=0)


def test_grid_oracle_two_examples(rng):
    # minimize (1/2)(max(0,.5+z1) + max(0,.5-z2)) + lam/2 w^2 over w (b=0)
    dense = {"pos": np.array([[1.0]]), "neg": np.array([[-0.5]])}
    lam = 0.3
    sub = weighted_svm(dense, [("neg", "positive", 0.5), ("pos", "negative", 0.5)], lam)
    a_plus, a_minus = sub.combined_coefficients(np.zeros(0))
    state = sdca_optimize(sub, a_plus, a_minus, b=0.0, eps_gap=1e-9, rng=rng)
    ws = np.arange(-4.0, 4.0, 0.0005)
    # a_minus on "pos" row (x=1), a_plus on "neg" row (x=-0.5); n=2, scale=2
    vals = (0.5 * (np.maximum(0.0, 0.5 + (-0.5) * ws)
                   + np.maximum(0.0, 0.5 - 1.0 * ws)) + 0.5 * lam * ws ** 2)
    assert state.primal_value <= float(vals.min()) + 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(-4, 4, allow_nan=False), st.floats(0, 2), st.floats(0, 2),
       st.floats(0, 1))
def test_fenchel_young(z, a_plus, a_minus, frac):
    # l(z) + l*(xi) >= xi * z on the dual box, equality at the best xi
    xi = -a_minus + frac * (a_plus + a_minus)
    lhs = per_example_loss(z, a_plus, a_minus) + conjugate_loss(xi, a_plus, a_minus)
    assert lhs >= xi * z - 1e-10


def test_fenchel_young_equality_at_optimum(rng):
    for _ in range(40):
        a_plus = float(rng.uniform(0, 2))
        a_minus = float(rng.uniform(0, 2))
        z = float(rng.normal())
        xis = np.linspace(-a_minus, a_plus, 2001)
        gaps = (per_example_loss(z, a_plus, a_minus)
                + conjugate_loss(xis, a_plus, a_minus) - xis * z)
        assert gaps.min() >= -1e-10
        assert gaps.min() <= 1e-3 * (1 + abs(z))  # equality up to grid resolution


def test_epoch_cap_raises_with_best_state(rng):
    from ratecon.errors import SolverError
    X = rng.normal(size=(30, 5))
    sub = weighted_svm({"d": X}, [("d", "positive", 1.0)], 1e-4)
    a_plus, a_minus = sub.combined_coefficients(np.zeros(0))
    with pytest.raises(SolverError) as info:
        sdca_optimize(sub, a_plus, a_minus, b=0.0, eps_gap=1e-14, rng=rng,
                      max_epochs=2)
    assert info.value.best is not None
    assert info.value.best.epochs == 2


def test_warm_start_preserves_box(rng):
    from ratecon.sdca import clamp_state
    sub = weighted_svm({"d": np.array([[1.0], [-1.0]])},
                       [("d", "positive", 1.0)], 0.5)
    a_plus, a_minus = sub.combined_coefficients(np.zeros(0))
    state = sdca_optimize(sub, a_plus, a_minus, b=0.0, eps_gap=1e-8, rng=rng)
    # shrink the box (as if multipliers changed) and clamp
    clamped = clamp_state(state, a_plus * 0.1, a_minus, sub)
    assert np.all(clamped.xi <= a_plus * 0.1 + 1e-15)
    np.testing.assert_allclose(clamped.w, mirror_w(sub, clamped.xi), atol=1e-12)
