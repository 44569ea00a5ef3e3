"""LIBSVM text format: ``<label> <index>:<value> ...`` per line.

Labels are +1/-1 (the tokens ``1``, ``+1`` and ``-1`` are accepted),
indices are 1-based and strictly increasing within a line (converted to
0-based), blank lines are skipped.  The dimension is the largest index
seen unless declared explicitly.
"""

from __future__ import annotations

import numpy as np

from .data import UnlabeledDataset
from .errors import DataError


def parse_libsvm(path, dim: int | None = None,
                 ) -> tuple[np.ndarray, UnlabeledDataset]:
    """Read labels and features; returns (labels, dataset with id "all")."""
    labels: list[int] = []
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    max_index = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split()
            label_tok = tokens[0]
            if label_tok in ("+1", "1"):
                labels.append(1)
            elif label_tok == "-1":
                labels.append(-1)
            else:
                raise DataError(f"{path}: line {lineno}: bad label {label_tok!r}")
            prev = 0
            for tok in tokens[1:]:
                idx_s, _, val_s = tok.partition(":")
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise DataError(
                        f"{path}: line {lineno}: malformed feature {tok!r}") from None
                if idx <= 0:
                    raise DataError(
                        f"{path}: line {lineno}: feature index {idx} must be >= 1")
                if idx <= prev:
                    raise DataError(
                        f"{path}: line {lineno}: feature indices must be "
                        f"strictly increasing ({idx} after {prev})")
                if not np.isfinite(val):
                    raise DataError(
                        f"{path}: line {lineno}: non-finite value {val_s!r}")
                prev = idx
                indices.append(idx - 1)
                values.append(val)
                max_index = max(max_index, idx - 1)
            indptr.append(len(indices))
    if not labels:
        raise DataError(f"{path}: no examples")
    if dim is None:
        dim = max_index + 1 if max_index >= 0 else 1
    elif max_index >= dim:
        raise DataError(
            f"{path}: feature index {max_index + 1} exceeds declared "
            f"dimension {dim}")
    dataset = UnlabeledDataset(
        "all",
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int32),
        np.asarray(values, dtype=np.float64),
        int(dim),
    )
    return np.asarray(labels, dtype=np.int64), dataset


def serialize_libsvm(labels: np.ndarray, dataset: UnlabeledDataset) -> str:
    """Canonical text form; floats use shortest round-trip formatting."""
    lines = []
    for i, label in enumerate(labels):
        parts = ["+1" if label == 1 else "-1"]
        for k in range(dataset.indptr[i], dataset.indptr[i + 1]):
            parts.append(f"{dataset.indices[k] + 1}:{float(dataset.values[k])!r}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def write_libsvm(path, labels: np.ndarray, dataset: UnlabeledDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_libsvm(labels, dataset))
