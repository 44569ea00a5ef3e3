"""Hierarchical solver traces and their CSV serialization.

Every solver layer appends one record per event: outer iterations of the
majorization loop, multiplier-level cutting-plane iterations, bias-level
cutting-plane iterations, and per-epoch duality-gap checks of the inner
coordinate-ascent solver.  The CSV schema is stable and documented in the
README; wall-clock timestamps are kept on the in-memory records only so
that trace files are byte-identical across reruns with the same seed.

CSV columns
-----------
``level``    one of mm / saddle / bias / sdca
``mm``       outer iteration index (0 = initial point)
``saddle``   multiplier-level iteration index (0 when the level is skipped)
``bias``     bias-level iteration index
``epoch``    inner solver epoch index
``lower``    level-specific lower bound (dual value for sdca rows)
``upper``    level-specific upper bound (primal value for sdca rows)
``eps``      tolerance chosen for the iteration (target gap for sdca rows)
``value``    payload: objective (mm), multipliers joined by ';' (saddle),
             bias (bias rows), achieved gap (sdca)
``extra``    payload: max ramp-constraint violation (mm rows) or the
             hypograph area when the center-of-mass chooser runs (saddle)
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

LEVELS = ("mm", "saddle", "bias", "sdca")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _fmt_values(values) -> str:
    if values is None:
        return ""
    return ";".join(repr(float(v)) for v in values)


def _parse_opt(s: str):
    return None if s == "" else float(s)


def _parse_values(s: str):
    if s == "":
        return ()
    return tuple(float(p) for p in s.split(";"))


@dataclass
class TraceRecord:
    level: str
    mm: int = 0
    saddle: int = 0
    bias: int = 0
    epoch: int = 0
    lower: float | None = None
    upper: float | None = None
    eps: float | None = None
    values: tuple = ()
    extra: float | None = None
    t_wall: float = field(default_factory=time.perf_counter)

    def row(self) -> list[str]:
        return [self.level, str(self.mm), str(self.saddle), str(self.bias),
                str(self.epoch), _fmt(self.lower), _fmt(self.upper),
                _fmt(self.eps), _fmt_values(self.values), _fmt(self.extra)]


class SolverTrace:
    """Append-only record list plus free-form notes (anomaly reports)."""

    HEADER = ["level", "mm", "saddle", "bias", "epoch",
              "lower", "upper", "eps", "value", "extra"]

    def __init__(self):
        self.records: list[TraceRecord] = []
        self.notes: list[str] = []

    def add(self, **kwargs) -> TraceRecord:
        rec = TraceRecord(**kwargs)
        self.records.append(rec)
        return rec

    def note(self, message: str) -> None:
        self.notes.append(message)

    def __len__(self) -> int:
        return len(self.records)

    def select(self, level: str, **indices) -> list[TraceRecord]:
        out = []
        for r in self.records:
            if r.level != level:
                continue
            if all(getattr(r, k) == v for k, v in indices.items()):
                out.append(r)
        return out

    def counts(self) -> dict[str, int]:
        out = {level: 0 for level in LEVELS}
        for r in self.records:
            out[r.level] += 1
        return out

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for r in self.records:
            writer.writerow(r.row())
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "SolverTrace":
        trace = cls()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != cls.HEADER:
                raise ValueError(f"unexpected trace header: {header}")
            for row in reader:
                level, mm, saddle, bias, epoch, lo, up, eps, values, extra = row
                trace.records.append(TraceRecord(
                    level=level, mm=int(mm), saddle=int(saddle), bias=int(bias),
                    epoch=int(epoch), lower=_parse_opt(lo), upper=_parse_opt(up),
                    eps=_parse_opt(eps), values=_parse_values(values),
                    extra=_parse_opt(extra)))
        return trace
