"""Versioned plain-text model files with exact decimal round-trip.

Format (UTF-8, LF):

    ratecon-model v1
    dim <d>
    bias_mode <free|none>
    b <float>
    weights
    <d lines, one float per line>

Floats use shortest round-trip formatting, so write/read is bit-exact.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .rates import LinearClassifier

MAGIC = "ratecon-model v1"


def model_to_text(clf: LinearClassifier, bias_mode: str = "free") -> str:
    lines = [MAGIC, f"dim {clf.dim}", f"bias_mode {bias_mode}", f"b {clf.b!r}",
             "weights"]
    lines.extend(repr(float(x)) for x in clf.w)
    return "\n".join(lines) + "\n"


def write_model(path, clf: LinearClassifier, bias_mode: str = "free") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(clf, bias_mode))


def read_model(path) -> tuple[LinearClassifier, str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise DataError(f"{path}: not a ratecon model file")
    header = {}
    i = 1
    while i < len(lines) and lines[i] != "weights":
        key, _, value = lines[i].partition(" ")
        header[key] = value
        i += 1
    if i >= len(lines):
        raise DataError(f"{path}: missing weights block")
    try:
        dim = int(header["dim"])
        b = float(header["b"])
        bias_mode = header.get("bias_mode", "free")
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad header: {exc}") from None
    weights = lines[i + 1:i + 1 + dim]
    if len(weights) != dim:
        raise DataError(f"{path}: expected {dim} weights, found {len(weights)}")
    w = np.array([float(x) for x in weights], dtype=np.float64)
    return LinearClassifier(w, b), bias_mode
