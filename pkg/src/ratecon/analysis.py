"""Generalization diagnostics and solver-trace auditing.

The diagnostic formulas bound how far expected rates on fresh data can
drift from the training rates of any solution the solver can return; they
are advisory (the solver never enforces them, beyond sizing the bias
search interval from the same argument).  The auditor replays a solver
trace and checks the inequalities the cutting-plane layers are supposed
to maintain: bound sandwiches, tolerance floors, and the center-of-mass
area shrink rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import NEGATIVE, POSITIVE, ConstrainedProblem
from .trace import SolverTrace

TWO_E = 2.0 * math.e
# Tolerance for replayed inequalities: absorbs LP-oracle and accumulation
# noise without masking real violations.
AUDIT_RTOL = 1e-8


def coefficient_sum_B(problem: ConstrainedProblem) -> float:
    """sum_i (alpha_i + beta_i + cap * sum_j (alpha_i^j + beta_i^j))."""
    total = 0.0
    for name in problem.active_ids:
        total += (problem.objective.coefficient(name, POSITIVE)
                  + problem.objective.coefficient(name, NEGATIVE))
        for c in problem.constraints:
            total += problem.multiplier_cap * (
                c.lhs.coefficient(name, POSITIVE)
                + c.lhs.coefficient(name, NEGATIVE))
    return total


def rademacher_bound(problem: ConstrainedProblem, x_norm: float, n: int) -> float:
    """1/(2 sqrt(n)) + (2 X^2 / (lambda sqrt(n))) * B."""
    if x_norm <= 0 or n <= 0:
        raise ValueError("x_norm and n must be positive")
    b = coefficient_sum_B(problem)
    root = math.sqrt(n)
    return 1.0 / (2.0 * root) + (2.0 * x_norm * x_norm / (problem.lam * root)) * b


def generalization_E(problem: ConstrainedProblem, x_norm: float,
                     delta: float, k: int) -> float:
    """1 + (4 X^2 / lambda) * B + sqrt(8 ln(4k / delta))."""
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    b = coefficient_sum_B(problem)
    return (1.0 + (4.0 * x_norm * x_norm / problem.lam) * b
            + math.sqrt(8.0 * math.log(4.0 * k / delta)))


@dataclass(frozen=True)
class GeneralizationReport:
    x_norm: float
    coefficient_sum: float
    delta: float
    e_constant: float
    rademacher: dict        # dataset id -> bound at that dataset's size
    rate_slack: dict        # dataset id -> E / sqrt(n_i)
    constraint_slack: tuple  # per constraint: E * sum_i (a_i^j + b_i^j)/sqrt(n_i)

    def lines(self) -> list[str]:
        out = [
            f"max example norm X = {self.x_norm!r}",
            f"coefficient sum B = {self.coefficient_sum!r}",
            f"confidence delta = {self.delta!r}",
            f"rate deviation constant E = {self.e_constant!r}",
        ]
        for name in sorted(self.rate_slack):
            out.append(f"dataset {name}: rademacher {self.rademacher[name]!r}, "
                       f"rate slack E/sqrt(n) = {self.rate_slack[name]!r}")
        for j, s in enumerate(self.constraint_slack):
            out.append(f"constraint {j}: expected violation bound {s!r}")
        return out


def generalization_report(problem: ConstrainedProblem,
                          delta: float = 0.05) -> GeneralizationReport:
    """Advisory bounds computed from the actual training data.

    The solver does not enforce bias-minimality among optima, so these
    are upper-bound heuristics for the classifiers it actually returns.
    """
    x_norm = problem.max_example_norm
    k = len(problem.active_ids)
    e_const = generalization_E(problem, x_norm, delta, k)
    b = coefficient_sum_B(problem)
    rademacher = {}
    rate_slack = {}
    for name in problem.active_ids:
        n_i = problem.datasets[name].size
        rademacher[name] = rademacher_bound(problem, x_norm, n_i)
        rate_slack[name] = e_const / math.sqrt(n_i)
    constraint_slack = []
    for c in problem.constraints:
        total = 0.0
        for name in problem.active_ids:
            coeff = (c.lhs.coefficient(name, POSITIVE)
                     + c.lhs.coefficient(name, NEGATIVE))
            if coeff:
                total += coeff / math.sqrt(problem.datasets[name].size)
        constraint_slack.append(e_const * total)
    return GeneralizationReport(
        x_norm=x_norm, coefficient_sum=b, delta=delta, e_constant=e_const,
        rademacher=rademacher, rate_slack=rate_slack,
        constraint_slack=tuple(constraint_slack))


@dataclass
class AuditReport:
    ok: bool
    failures: list[str]
    counts: dict
    checks: int

    def lines(self) -> list[str]:
        out = [f"audit: {'PASS' if self.ok else 'FAIL'} ({self.checks} checks)"]
        for level, cnt in sorted(self.counts.items()):
            out.append(f"  {level} events: {cnt}")
        for f in self.failures:
            out.append(f"  FAIL {f}")
        return out


def _tol(x: float) -> float:
    return AUDIT_RTOL * (1.0 + abs(x))


def audit_trace(trace: SolverTrace) -> AuditReport:
    """Replay the cutting-plane inequalities recorded in a solver trace.

    Checks, per multiplier-level solve: lower bounds nondecreasing, upper
    bounds nonincreasing, lower <= upper, tolerance floor
    eps_t >= (U_t - L_t) / (2e (m+1)), and the center-of-mass area shrink
    factor (1 - 1/2e) whenever areas were recorded.  Per bias-level solve:
    the same sandwich plus eps'_t >= (U'_t - L'_t) / 2e.  Per inner solve:
    dual values nondecreasing, weak duality, and final gap at target.
    Also verifies the nesting: one inner call per bias iteration, one
    bias-level solve per multiplier iteration.
    """
    failures: list[str] = []
    checks = 0

    def check(cond: bool, message: str) -> None:
        nonlocal checks
        checks += 1
        if not cond:
            failures.append(message)

    records = trace.records
    saddle_groups: dict[int, list] = {}
    bias_groups: dict[tuple[int, int], list] = {}
    sdca_groups: dict[tuple[int, int, int], list] = {}
    for r in records:
        if r.level == "saddle":
            saddle_groups.setdefault(r.mm, []).append(r)
        elif r.level == "bias":
            bias_groups.setdefault((r.mm, r.saddle), []).append(r)
        elif r.level == "sdca":
            sdca_groups.setdefault((r.mm, r.saddle, r.bias), []).append(r)

    for mm, rows in sorted(saddle_groups.items()):
        m = max((len(r.values) for r in rows if r.values), default=1)
        floor = 1.0 / (TWO_E * (m + 1))
        prev = None
        prev_area = None
        for r in rows:
            check(r.lower <= r.upper + _tol(r.upper),
                  f"saddle mm={mm} t={r.saddle}: lower {r.lower!r} > upper {r.upper!r}")
            if prev is not None:
                check(r.lower >= prev.lower - _tol(prev.lower),
                      f"saddle mm={mm} t={r.saddle}: lower decreased")
                check(r.upper <= prev.upper + _tol(prev.upper),
                      f"saddle mm={mm} t={r.saddle}: upper increased")
            if r.eps is not None:
                gap = r.upper - r.lower
                check(r.eps >= floor * gap - _tol(gap),
                      f"saddle mm={mm} t={r.saddle}: eps {r.eps!r} below floor "
                      f"{floor * gap!r}")
            if r.extra is not None:
                if prev_area is not None:
                    limit = (1.0 - 1.0 / TWO_E) * prev_area
                    check(r.extra <= limit + _tol(limit),
                          f"saddle mm={mm} t={r.saddle}: hypograph area "
                          f"{r.extra!r} above shrink limit {limit!r}")
                prev_area = r.extra
            prev = r
        # Every non-terminal saddle iteration must have spawned exactly one
        # bias-level solve.
        for r in rows:
            if r.eps is not None:
                check((mm, r.saddle) in bias_groups,
                      f"saddle mm={mm} t={r.saddle}: no inner solve recorded")

    for (mm, s), rows in sorted(bias_groups.items()):
        prev = None
        for r in rows:
            check(r.lower <= r.upper + _tol(r.upper),
                  f"bias mm={mm} s={s} t={r.bias}: lower {r.lower!r} > upper {r.upper!r}")
            if prev is not None:
                check(r.lower >= prev.lower - _tol(prev.lower),
                      f"bias mm={mm} s={s} t={r.bias}: lower decreased")
                check(r.upper <= prev.upper + _tol(prev.upper),
                      f"bias mm={mm} s={s} t={r.bias}: upper increased")
            if r.eps is not None:
                gap = r.upper - r.lower
                check(r.eps >= gap / TWO_E - _tol(gap),
                      f"bias mm={mm} s={s} t={r.bias}: eps {r.eps!r} below floor "
                      f"{gap / TWO_E!r}")
                check((mm, s, r.bias) in sdca_groups,
                      f"bias mm={mm} s={s} t={r.bias}: no sdca call recorded")
            prev = r

    for key, rows in sorted(sdca_groups.items()):
        prev_dual = -np.inf
        for r in rows:
            check(r.upper >= r.lower - _tol(r.lower),
                  f"sdca {key} epoch={r.epoch}: weak duality violated")
            check(r.lower >= prev_dual - _tol(prev_dual),
                  f"sdca {key} epoch={r.epoch}: dual value decreased")
            prev_dual = r.lower
        last = rows[-1]
        check(last.upper - last.lower <= last.eps + _tol(last.eps),
              f"sdca {key}: final gap {last.upper - last.lower!r} above "
              f"target {last.eps!r}")

    mm_rows = [r for r in records if r.level == "mm"]
    prev_obj = None
    for r in mm_rows:
        if prev_obj is not None:
            slack = r.eps if r.eps is not None else 0.0
            check(r.values[0] <= prev_obj + slack + _tol(prev_obj),
                  f"mm t={r.mm}: ramp objective increased "
                  f"{prev_obj!r} -> {r.values[0]!r}")
        prev_obj = r.values[0]

    counts = trace.counts()
    counts["sdca_calls"] = len(sdca_groups)
    counts["bias_solves"] = len(bias_groups)
    return AuditReport(ok=not failures, failures=failures,
                       counts=counts, checks=checks)
