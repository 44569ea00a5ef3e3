"""Rate functions: indicator, clipped-hinge (ramp), and convex upper bounds.

Three views of "how often does the classifier predict positive on D":

* indicator rates count strict-positive margins (a zero margin predicts
  negative);
* ramp rates replace the indicator with the clipped hinge
  sigma(z) = max(0, min(1, 1/2 + z)), which equals the expected indicator
  rate of the randomized prediction rule;
* bound rates replace each example's ramp with either the hinge
  max(0, 1/2 + z) or the constant 1, chosen by an anchor classifier's
  margin so the bound is convex in (w, b) and tight at the anchor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import UnlabeledDataset
from .errors import DataError
from .problem import POSITIVE, LinearRateCombination


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    """f(x) = <w, x> - b with an unregularized bias."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        w = np.ascontiguousarray(np.asarray(self.w, dtype=np.float64))
        if not np.all(np.isfinite(w)) or not np.isfinite(self.b):
            raise DataError("classifier has non-finite entries")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))
        self.w.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def margins(self, dataset: UnlabeledDataset) -> np.ndarray:
        return dataset.margins(self.w, self.b)

    def close_to(self, other: "LinearClassifier", tol: float = 1e-12) -> bool:
        return (abs(self.b - other.b) <= tol
                and bool(np.all(np.abs(self.w - other.w) <= tol)))


def zero_classifier(dim: int, b: float = 0.0) -> LinearClassifier:
    return LinearClassifier(np.zeros(dim), b)


def ramp(z):
    """Clipped hinge max(0, min(1, 1/2 + z)); scalar or elementwise."""
    return np.clip(0.5 + np.asarray(z, dtype=np.float64), 0.0, 1.0)


def hinge_bound(z, anchor_z):
    """Pointwise convex upper bound on ramp(z), tight at z == anchor_z.

    Uses the hinge max(0, 1/2 + z) where the anchor margin is <= 1/2 and
    the constant 1 otherwise.
    """
    z = np.asarray(z, dtype=np.float64)
    anchor_z = np.asarray(anchor_z, dtype=np.float64)
    hinge = np.maximum(0.0, 0.5 + z)
    return np.where(anchor_z <= 0.5, hinge, 1.0)


def indicator_rates(dataset: UnlabeledDataset, clf: LinearClassifier) -> tuple[float, float]:
    """(s_p, s_n): fraction of strictly positive margins, and its complement."""
    z = clf.margins(dataset)
    s_p = float(np.count_nonzero(z > 0.0)) / dataset.size
    return s_p, 1.0 - s_p


def ramp_rates(dataset: UnlabeledDataset, clf: LinearClassifier) -> tuple[float, float]:
    """(r_p, r_n): mean ramp of the margins and of the negated margins."""
    z = clf.margins(dataset)
    r_p = float(np.sum(ramp(z))) / dataset.size
    r_n = float(np.sum(ramp(-z))) / dataset.size
    return r_p, r_n


def bound_rates(dataset: UnlabeledDataset, clf: LinearClassifier,
                anchor: LinearClassifier) -> tuple[float, float]:
    """Convex upper bounds on the ramp rates, tight when clf == anchor.

    The negative side mirrors the positive one: it bounds ramp(-z) using
    the anchor's negated margin.
    """
    z = clf.margins(dataset)
    z_anchor = anchor.margins(dataset)
    r_p = float(np.sum(hinge_bound(z, z_anchor))) / dataset.size
    r_n = float(np.sum(hinge_bound(-z, -z_anchor))) / dataset.size
    return r_p, r_n


def rate(dataset: UnlabeledDataset, polarity: str, clf: LinearClassifier,
         kind: str, anchor: LinearClassifier | None = None) -> float:
    if kind == "indicator":
        s_p, s_n = indicator_rates(dataset, clf)
    elif kind == "ramp":
        s_p, s_n = ramp_rates(dataset, clf)
    elif kind == "bound":
        if anchor is None:
            raise DataError("bound rates require an anchor classifier")
        s_p, s_n = bound_rates(dataset, clf, anchor)
    else:
        raise DataError(f"unknown rate kind {kind!r}")
    return s_p if polarity == POSITIVE else s_n


def evaluate_combination(combo: LinearRateCombination,
                         datasets,
                         clf: LinearClassifier,
                         kind: str = "indicator",
                         anchor: LinearClassifier | None = None) -> float:
    """Sum of coefficient * rate over the combination's terms, plus constant."""
    total = combo.constant
    for t in combo.terms:
        if t.dataset not in datasets:
            raise DataError(f"combination references unknown dataset {t.dataset!r}")
        total += t.coefficient * rate(datasets[t.dataset], t.polarity, clf, kind, anchor)
    return total


def randomized_predict(x_margin: float, u: float) -> int:
    """+1 with probability ramp(margin), decided by the uniform draw u in [0,1)."""
    return 1 if u < float(ramp(x_margin)) else -1


def randomized_positive_counts(dataset: UnlabeledDataset, clf: LinearClassifier,
                               draws: int, rng: np.random.Generator) -> np.ndarray:
    """Per-example counts of positive predictions over ``draws`` randomized calls.

    Sampling one binomial per example is distributionally identical to
    drawing ``draws`` independent prediction rounds and counting, but
    avoids materializing draws x examples booleans.
    """
    p = ramp(clf.margins(dataset))
    return rng.binomial(draws, p)


def monte_carlo_positive_rate(dataset: UnlabeledDataset, clf: LinearClassifier,
                              draws: int, rng: np.random.Generator) -> float:
    counts = randomized_positive_counts(dataset, clf, draws, rng)
    return float(counts.sum()) / (draws * dataset.size)
