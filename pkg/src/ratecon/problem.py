"""Rate combinations, constraints and the constrained training problem.

The objective and every constraint left-hand side are nonnegative-weighted
sums of positive/negative prediction rates over named datasets, plus a
constant.  Because the positive and negative rates of a dataset always sum
to one, any signed combination can be rewritten in this canonical
nonnegative form; :func:`canonicalize` performs that rewrite.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .data import UnlabeledDataset
from .errors import ConfigError

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class RateTerm:
    """coefficient * rate(dataset, polarity); canonical coefficients are >= 0."""

    dataset: str
    polarity: str  # POSITIVE or NEGATIVE
    coefficient: float

    def __post_init__(self):
        if self.polarity not in (POSITIVE, NEGATIVE):
            raise ConfigError(f"bad polarity {self.polarity!r}")

    def flipped(self) -> "RateTerm":
        other = NEGATIVE if self.polarity == POSITIVE else POSITIVE
        return RateTerm(self.dataset, other, self.coefficient)


@dataclass(frozen=True)
class LinearRateCombination:
    """Weighted sum of dataset rates plus a constant offset."""

    terms: tuple[RateTerm, ...]
    constant: float = 0.0

    @property
    def is_canonical(self) -> bool:
        keys = [(t.dataset, t.polarity) for t in self.terms]
        return (all(t.coefficient >= 0 for t in self.terms)
                and len(set(keys)) == len(keys))

    def scaled(self, factor: float) -> "LinearRateCombination":
        return LinearRateCombination(
            tuple(RateTerm(t.dataset, t.polarity, t.coefficient * factor)
                  for t in self.terms),
            self.constant * factor)

    def plus(self, other: "LinearRateCombination") -> "LinearRateCombination":
        return LinearRateCombination(self.terms + other.terms,
                                     self.constant + other.constant)

    def dataset_ids(self) -> list[str]:
        return sorted({t.dataset for t in self.terms})

    def coefficient(self, dataset: str, polarity: str) -> float:
        return sum(t.coefficient for t in self.terms
                   if t.dataset == dataset and t.polarity == polarity)


def combination(terms: Iterable[tuple[str, str, float]],
                constant: float = 0.0) -> LinearRateCombination:
    return LinearRateCombination(
        tuple(RateTerm(d, p, float(c)) for d, p, c in terms), float(constant))


def canonicalize(combo: LinearRateCombination,
                 datasets: Mapping[str, UnlabeledDataset] | None = None,
                 ) -> LinearRateCombination:
    """Rewrite a combination with nonnegative, per-(dataset, polarity) unique
    coefficients.

    A term c * s_p with c < 0 becomes |c| * s_n with the constant shifted by
    c (and symmetrically), so the value is unchanged for every classifier.
    When ``datasets`` is given, unknown dataset ids are rejected.
    """
    if datasets is not None:
        for t in combo.terms:
            if t.dataset not in datasets:
                raise ConfigError(f"combination references unknown dataset {t.dataset!r}")
    acc: dict[tuple[str, str], float] = {}
    for t in combo.terms:
        key = (t.dataset, t.polarity)
        acc[key] = acc.get(key, 0.0) + t.coefficient
    constant = combo.constant
    terms = []
    for dataset in sorted({d for d, _ in acc}):
        cp = acc.get((dataset, POSITIVE), 0.0)
        cn = acc.get((dataset, NEGATIVE), 0.0)
        # Shift the smaller (possibly negative) coefficient onto the other
        # polarity: a*s_p + b*s_n = (a-b)*s_p + b = (b-a)*s_n + a.
        if cp >= cn:
            if cp - cn != 0.0:
                terms.append(RateTerm(dataset, POSITIVE, cp - cn))
            constant += cn
        else:
            if cn - cp != 0.0:
                terms.append(RateTerm(dataset, NEGATIVE, cn - cp))
            constant += cp
    return LinearRateCombination(tuple(terms), constant)


@dataclass(frozen=True)
class RateConstraint:
    """Upper-bound constraint: value(lhs) <= bound, lhs canonical."""

    lhs: LinearRateCombination
    bound: float

    def __post_init__(self):
        if not self.lhs.is_canonical:
            raise ConfigError("constraint lhs must be canonical")

    def shifted(self) -> "RateConstraint":
        """Fold the lhs constant into the bound (lhs constant becomes 0)."""
        if self.lhs.constant == 0.0:
            return self
        return RateConstraint(
            LinearRateCombination(self.lhs.terms, 0.0),
            self.bound - self.lhs.constant)


def upper_bound_constraint(lhs: LinearRateCombination, bound: float,
                           datasets: Mapping[str, UnlabeledDataset] | None = None,
                           ) -> RateConstraint:
    return RateConstraint(canonicalize(lhs, datasets), float(bound)).shifted()


def lower_bound_constraint(lhs: LinearRateCombination, bound: float,
                           datasets: Mapping[str, UnlabeledDataset] | None = None,
                           ) -> RateConstraint:
    """value(lhs) >= bound, rewritten as an upper-bound constraint."""
    return upper_bound_constraint(lhs.scaled(-1.0), -float(bound), datasets)


@dataclass(frozen=True, eq=False)
class ConstrainedProblem:
    """Objective + m upper-bound rate constraints + l2 regularization.

    Constraint bounds are pre-shifted (each lhs carries no constant); the
    objective constant is carried but ignored by the solver.  ``multiplier_cap``
    bounds the Lagrange multipliers, keeping the dual search box compact.
    """

    datasets: Mapping[str, UnlabeledDataset]
    objective: LinearRateCombination
    constraints: tuple[RateConstraint, ...]
    lam: float
    multiplier_cap: float
    dim: int

    def __post_init__(self):
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.multiplier_cap <= 0:
            raise ConfigError("multiplier cap must be positive")
        referenced = set(self.objective.dataset_ids())
        for c in self.constraints:
            referenced.update(c.lhs.dataset_ids())
        for name in referenced:
            if name not in self.datasets:
                raise ConfigError(f"problem references unknown dataset {name!r}")
        for name in referenced:
            if self.datasets[name].dim != self.dim:
                raise ConfigError(f"dataset {name!r} dimension mismatch")

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @cached_property
    def active_ids(self) -> tuple[str, ...]:
        """Datasets referenced by the objective or any constraint, sorted."""
        referenced = set(self.objective.dataset_ids())
        for c in self.constraints:
            referenced.update(c.lhs.dataset_ids())
        return tuple(sorted(referenced))

    @cached_property
    def total_examples(self) -> int:
        return sum(self.datasets[i].size for i in self.active_ids)

    @cached_property
    def max_example_norm(self) -> float:
        return max(self.datasets[i].max_norm for i in self.active_ids)

    @cached_property
    def bounds(self) -> np.ndarray:
        out = np.array([c.bound for c in self.constraints])
        out.setflags(write=False)
        return out


def build_problem(datasets: Mapping[str, UnlabeledDataset],
                  objective: LinearRateCombination,
                  constraints: Sequence[RateConstraint],
                  lam: float,
                  multiplier_cap: float | None = None,
                  dim: int | None = None) -> ConstrainedProblem:
    """Canonicalize, pre-shift constraint bounds, and assemble the problem.

    The default multiplier cap scales as 1e6 / lambda; hitting it during
    solving is reported as a warning (the constraint may be infeasible or
    nearly so).
    """
    objective = canonicalize(objective, datasets)
    shifted = tuple(
        RateConstraint(canonicalize(c.lhs, datasets), c.bound).shifted()
        for c in constraints)
    if dim is None:
        ids = set(objective.dataset_ids())
        for c in shifted:
            ids.update(c.lhs.dataset_ids())
        if not ids:
            raise ConfigError("problem references no datasets")
        dim = max(datasets[i].dim for i in ids)
    if multiplier_cap is None:
        multiplier_cap = 1e6 / lam
    return ConstrainedProblem(dict(datasets), objective, shifted,
                              float(lam), float(multiplier_cap), int(dim))
