from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ratecon.data import dataset_from_dense
from ratecon.problem import build_problem, combination


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def dense_sets_to_datasets(dense_sets):
    return {name: dataset_from_dense(name, X) for name, X in dense_sets.items()}


def two_point_fixture():
    """1-d: one positive example at +1, one negative at -1."""
    dense = {"pos": np.array([[1.0]]), "neg": np.array([[-1.0]])}
    terms = [("pos", "negative", 0.5), ("neg", "positive", 0.5)]  # error rate
    return dense, terms


def random_problem(rng, d_max=5, k_max=3, m_max=2, n_max=10):
    """Random small constrained problem with a feasible zero-weight start.

    Relative bounds are drawn from [0.55, 0.9], so any two constraints
    leave a nonempty bias range at zero weights (u1 + u2 >= 1).
    """
    d = int(rng.integers(1, d_max + 1))
    k = int(rng.integers(1, k_max + 1))
    m = int(rng.integers(0, m_max + 1))
    datasets = {}
    for i in range(k):
        n = int(rng.integers(2, n_max + 1))
        datasets[f"d{i}"] = dataset_from_dense(
            f"d{i}", np.round(rng.normal(0.0, 1.0, size=(n, d)), 3))
    names = sorted(datasets)
    obj_terms = []
    for name in names:
        pol = "positive" if rng.random() < 0.5 else "negative"
        obj_terms.append((name, pol, float(np.round(rng.uniform(0.2, 1.0), 3))))
    objective = combination(obj_terms)
    constraints = []
    from ratecon.problem import upper_bound_constraint
    for _ in range(m):
        name = names[int(rng.integers(0, len(names)))]
        pol = "positive" if rng.random() < 0.5 else "negative"
        coeff = float(np.round(rng.uniform(0.5, 1.5), 3))
        bound = coeff * float(np.round(rng.uniform(0.55, 0.9), 3))
        constraints.append(upper_bound_constraint(
            combination([(name, pol, coeff)]), bound))
    lam = float(np.round(rng.uniform(0.05, 0.5), 3))
    return build_problem(datasets, objective, constraints, lam,
                         multiplier_cap=50.0)
