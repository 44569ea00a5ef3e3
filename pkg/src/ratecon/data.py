"""Sparse example collections and label/group/baseline partitioning.

A dataset here is an unlabeled, indexed bag of sparse feature vectors.
Labeled data enters the library through :func:`partition_labeled_data`,
which splits it into the unlabeled pieces that rate metrics are defined
on (positives, negatives, group slices, agreement cells against a
baseline model's predictions).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DataError

# Canonical dataset ids produced by partitioning.  Group A/B intersections
# with the positives ("a_pos"/"b_pos") support equal-opportunity
# constraints; the four label x baseline-prediction cells support churn,
# wins and losses.
ALL = "all"
POS = "pos"
NEG = "neg"
GROUP_A = "a"
GROUP_B = "b"
GROUP_A_POS = "a_pos"
GROUP_B_POS = "b_pos"
POS_BASEPOS = "pp"   # label +1, baseline predicts +1
POS_BASENEG = "pn"   # label +1, baseline predicts -1
NEG_BASEPOS = "np"   # label -1, baseline predicts +1
NEG_BASENEG = "nn"   # label -1, baseline predicts -1
BASE_POS = "base_pos"  # baseline predicts +1 (labels ignored)
BASE_NEG = "base_neg"  # baseline predicts -1


@dataclass(frozen=True, eq=False)
class UnlabeledDataset:
    """Immutable bag of sparse feature vectors in CSR layout.

    Rows are sorted (index, value) pairs with strictly increasing indices;
    all indices lie below ``dim`` and all values are finite.
    """

    dataset_id: str
    indptr: np.ndarray   # int64, shape (size + 1,)
    indices: np.ndarray  # int32
    values: np.ndarray   # float64
    dim: int

    def __post_init__(self):
        if self.size < 1:
            raise DataError(f"dataset {self.dataset_id!r} is empty")
        if self.indices.size and int(self.indices.max()) >= self.dim:
            raise DataError(
                f"dataset {self.dataset_id!r}: feature index "
                f"{int(self.indices.max())} >= dimension {self.dim}")
        if self.indices.size and int(self.indices.min()) < 0:
            raise DataError(f"dataset {self.dataset_id!r}: negative feature index")
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise DataError(f"dataset {self.dataset_id!r}: non-finite feature value")
        for arr in (self.indptr, self.indices, self.values):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.indptr) - 1

    def __len__(self) -> int:
        return self.size

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Read-only CSR matrix view (size x dim)."""
        return sp.csr_matrix(
            (self.values, self.indices, self.indptr), shape=(self.size, self.dim))

    @cached_property
    def row_sq_norms(self) -> np.ndarray:
        out = np.asarray(self.matrix.multiply(self.matrix).sum(axis=1)).ravel()
        out.setflags(write=False)
        return out

    @cached_property
    def max_norm(self) -> float:
        """Largest example l2 norm in the dataset."""
        return float(np.sqrt(self.row_sq_norms.max())) if self.size else 0.0

    def margins(self, w: np.ndarray, b: float) -> np.ndarray:
        """Per-example <w, x> - b."""
        if w.shape[0] != self.dim:
            raise DataError(
                f"dataset {self.dataset_id!r} has dimension {self.dim}, "
                f"classifier has {w.shape[0]}")
        return self.matrix.dot(w) - b

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def subset(self, dataset_id: str, mask: np.ndarray) -> "UnlabeledDataset":
        m = self.matrix[np.flatnonzero(mask)]
        return UnlabeledDataset(
            dataset_id,
            m.indptr.astype(np.int64),
            m.indices.astype(np.int32),
            m.data.astype(np.float64),
            self.dim,
        )


def dataset_from_pairs(dataset_id: str,
                       rows: Sequence[Sequence[tuple[int, float]]],
                       dim: int) -> UnlabeledDataset:
    """Build a dataset from per-example (index, value) pair lists.

    Pairs need not be sorted; duplicate indices within a row are rejected.
    """
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    idx_chunks = []
    val_chunks = []
    for r, row in enumerate(rows):
        pairs = sorted(row)
        idx = np.array([i for i, _ in pairs], dtype=np.int32)
        if len(np.unique(idx)) != len(idx):
            raise DataError(f"dataset {dataset_id!r}, row {r}: duplicate feature index")
        idx_chunks.append(idx)
        val_chunks.append(np.array([v for _, v in pairs], dtype=np.float64))
        indptr[r + 1] = indptr[r] + len(pairs)
    indices = np.concatenate(idx_chunks) if idx_chunks else np.zeros(0, dtype=np.int32)
    values = np.concatenate(val_chunks) if val_chunks else np.zeros(0)
    return UnlabeledDataset(dataset_id, indptr, indices, values, dim)


def dataset_from_dense(dataset_id: str, X: np.ndarray) -> UnlabeledDataset:
    m = sp.csr_matrix(np.asarray(X, dtype=np.float64))
    return UnlabeledDataset(
        dataset_id,
        m.indptr.astype(np.int64),
        m.indices.astype(np.int32),
        m.data.astype(np.float64),
        X.shape[1],
    )


@dataclass(frozen=True, eq=False)
class LabeledData:
    """Labeled (optionally grouped / baseline-scored) examples, pre-partition."""

    features: UnlabeledDataset  # ids "all"
    labels: np.ndarray          # +1/-1 per example
    groups: np.ndarray | None = None            # boolean: True = group A
    baseline_predictions: np.ndarray | None = None  # +1/-1 per example

    def __post_init__(self):
        n = self.features.size
        if len(self.labels) != n:
            raise DataError("label count does not match example count")
        if not np.all(np.isin(self.labels, (-1, 1))):
            raise DataError("labels must be +1 or -1")
        if self.groups is not None and len(self.groups) != n:
            raise DataError("group flag count does not match example count")
        if self.baseline_predictions is not None:
            if len(self.baseline_predictions) != n:
                raise DataError("baseline prediction count does not match example count")
            if not np.all(np.isin(self.baseline_predictions, (-1, 1))):
                raise DataError("baseline predictions must be +1 or -1")


def partition_labeled_data(data: LabeledData,
                           include_all: bool = True) -> dict[str, UnlabeledDataset]:
    """Split labeled examples into the unlabeled datasets metrics run on.

    Always emits "pos"/"neg" when nonempty.  With group flags also emits
    "a"/"b" and the positive-label intersections "a_pos"/"b_pos".  With
    baseline predictions also emits the four agreement cells
    "pp"/"pn"/"np"/"nn" and the two baseline-only slices
    "base_pos"/"base_neg".  Empty cells are simply omitted; metric
    builders that need them raise a configuration error.
    """
    out: dict[str, UnlabeledDataset] = {}
    feats = data.features
    if include_all:
        out[ALL] = feats.subset(ALL, np.ones(feats.size, dtype=bool))
    pos_mask = data.labels == 1
    neg_mask = ~pos_mask

    def emit(name: str, mask: np.ndarray) -> None:
        if mask.any():
            out[name] = feats.subset(name, mask)

    emit(POS, pos_mask)
    emit(NEG, neg_mask)
    if data.groups is not None:
        a = np.asarray(data.groups, dtype=bool)
        emit(GROUP_A, a)
        emit(GROUP_B, ~a)
        emit(GROUP_A_POS, a & pos_mask)
        emit(GROUP_B_POS, (~a) & pos_mask)
    if data.baseline_predictions is not None:
        bp = data.baseline_predictions == 1
        emit(POS_BASEPOS, pos_mask & bp)
        emit(POS_BASENEG, pos_mask & ~bp)
        emit(NEG_BASEPOS, neg_mask & bp)
        emit(NEG_BASENEG, neg_mask & ~bp)
        emit(BASE_POS, bp)
        emit(BASE_NEG, ~bp)
    return out


def partition_by_baseline(features: UnlabeledDataset,
                          baseline_predictions: np.ndarray) -> dict[str, UnlabeledDataset]:
    """Partition unlabeled examples by a baseline model's predictions only.

    This is the unlabeled-pool variant used for churn constraints: churn
    needs no ground-truth labels, only where the baseline predicts
    positive or negative.
    """
    if len(baseline_predictions) != features.size:
        raise DataError("baseline prediction count does not match example count")
    if not np.all(np.isin(baseline_predictions, (-1, 1))):
        raise DataError("baseline predictions must be +1 or -1")
    bp = baseline_predictions == 1
    out = {}
    if bp.any():
        out[BASE_POS] = features.subset(BASE_POS, bp)
    if (~bp).any():
        out[BASE_NEG] = features.subset(BASE_NEG, ~bp)
    if not out:
        raise ConfigError("baseline partition produced no datasets")
    return out


def require_datasets(datasets: dict[str, UnlabeledDataset],
                     needed: Iterable[str], what: str) -> None:
    missing = [name for name in needed if name not in datasets]
    if missing:
        raise ConfigError(f"{what} requires dataset partition(s) {missing}, "
                          f"but only {sorted(datasets)} are present")
