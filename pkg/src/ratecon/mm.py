"""Outer majorization-minimization loop.

Each iteration anchors a convex subproblem at the current classifier
(where the convex bounds are tight), solves it through the multiplier
cutting plane, and accepts the result only if it keeps the ramp objective
from increasing beyond the inner tolerance and stays feasible for the
ramp constraints.  Because the bounds are tight at the anchor, exact
inner solves could never be rejected; the acceptance check guards
against inexact ones.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError, SolverError
from .problem import ConstrainedProblem
from .rates import LinearClassifier, evaluate_combination, zero_classifier
from .saddle import solve_saddle
from .subproblem import ConvexSubproblem, feasible_bias_interval
from .trace import SolverTrace

logger = logging.getLogger(__name__)

DEFAULT_FEAS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class MMResult:
    classifier: LinearClassifier
    iterates: tuple[tuple[LinearClassifier, float, float], ...]
    trace: SolverTrace

    @property
    def objectives(self) -> list[float]:
        return [obj for _, obj, _ in self.iterates]

    @property
    def violations(self) -> list[float]:
        return [viol for _, _, viol in self.iterates]


def ramp_objective(problem: ConstrainedProblem, clf: LinearClassifier) -> float:
    value = evaluate_combination(problem.objective, problem.datasets, clf, "ramp")
    return value + 0.5 * problem.lam * float(clf.w @ clf.w)


def ramp_violations(problem: ConstrainedProblem, clf: LinearClassifier) -> np.ndarray:
    vals = np.array([
        evaluate_combination(c.lhs, problem.datasets, clf, "ramp") - c.bound
        for c in problem.constraints])
    return vals if vals.size else np.zeros(0)


def max_ramp_violation(problem: ConstrainedProblem, clf: LinearClassifier) -> float:
    v = ramp_violations(problem, clf)
    return float(v.max()) if v.size else 0.0


def find_initial_point(problem: ConstrainedProblem,
                       feas_tol: float = DEFAULT_FEAS_TOL,
                       bias_mode: str = "free") -> LinearClassifier:
    """Zero weights with the bias chosen to minimize ramp-constraint violation.

    With zero weights every margin equals -b, so each constraint value is
    affine in p = ramp(b); the worst positive violation is convex
    piecewise-linear in p and is minimized exactly.  Among zero-violation
    biases the one closest to zero is returned.  Reports infeasibility
    (constraint index, achieved violation) when no bias works.
    """
    m = problem.num_constraints
    if m == 0:
        return zero_classifier(problem.dim)

    # Constraint value at p = ramp(b): sum_i alpha*(1-p) + beta*p - bound.
    a = np.zeros(m)  # value at p = 0
    slope = np.zeros(m)
    for j, c in enumerate(problem.constraints):
        for t in c.lhs.terms:
            if t.polarity == "positive":
                a[j] += t.coefficient
                slope[j] -= t.coefficient
            else:
                slope[j] += t.coefficient
        a[j] -= c.bound

    if bias_mode == "none":
        viol = a + slope * 0.5
        worst = float(np.maximum(viol, 0.0).max())
        if worst > feas_tol:
            j = int(np.argmax(viol))
            raise InfeasibleError(
                f"zero classifier violates constraint {j} by {worst:.3g} and "
                f"the bias is pinned at zero", constraint_index=j, violation=worst)
        return zero_classifier(problem.dim)

    def worst_violation(p: float) -> float:
        return float(np.maximum(a + slope * p, 0.0).max())

    candidates = {0.0, 0.5, 1.0}
    for j in range(m):
        if slope[j] != 0.0:
            p = -a[j] / slope[j]
            if 0.0 < p < 1.0:
                candidates.add(float(p))
        for k in range(j + 1, m):
            ds = slope[j] - slope[k]
            if ds != 0.0:
                p = (a[k] - a[j]) / ds
                if 0.0 < p < 1.0:
                    candidates.add(float(p))
    points = sorted(candidates)
    values = [worst_violation(p) for p in points]
    f_min = min(values)
    if f_min > feas_tol:
        p_best = points[int(np.argmin(values))]
        j = int(np.argmax(a + slope * p_best))
        raise InfeasibleError(
            f"no bias satisfies the ramp constraints: best achievable "
            f"violation {f_min:.3g} (constraint {j})",
            constraint_index=j, violation=f_min)
    # The minimizer set of a convex piecewise-linear function is an
    # interval whose endpoints are among the candidate points.
    tol = 1e-15 * (1.0 + abs(f_min))
    hits = [p for p, val in zip(points, values) if val <= f_min + tol]
    p_lo, p_hi = hits[0], hits[-1]
    p_star = min(max(0.5, p_lo), p_hi)
    return zero_classifier(problem.dim, b=p_star - 0.5)


def repair_bias(sub: ConvexSubproblem, clf: LinearClassifier,
                ) -> LinearClassifier | None:
    """Smallest bias shift making every convex-bound constraint hold.

    Returns None when no bias can restore feasibility for these weights.
    Since the convex bounds dominate the ramp rates, the repaired
    classifier is feasible for the ramp constraints outright.
    """
    interval = feasible_bias_interval(sub, clf.w)
    if interval is None:
        return None
    lo, hi = interval
    if lo > hi:
        return None
    b = min(max(clf.b, lo), hi)
    if b == clf.b:
        return clf
    return LinearClassifier(clf.w, b)


def majorize_minimize(problem: ConstrainedProblem,
                      init: LinearClassifier | None = None,
                      iterations: int = 5,
                      eps: float = 1e-3,
                      rng: np.random.Generator | None = None,
                      feas_tol: float = DEFAULT_FEAS_TOL,
                      bias_mode: str = "free",
                      chooser: str = "max",
                      bias_chooser: str = "centroid",
                      stop_early: bool = False,
                      max_saddle_iterations: int = 1000,
                      bias_max_iterations: int = 200,
                      sdca_max_epochs: int = 20000) -> MMResult:
    """Iterate tight convex upper-bound subproblems from a feasible start.

    The ramp objective never increases by more than eps + 1e-9 across
    accepted iterates, and every iterate satisfies the ramp constraints
    within ``feas_tol``.  An inner-solver failure propagates as a
    SolverError whose ``best`` holds the result built so far.
    """
    if iterations < 1:
        raise SolverError("iteration count must be at least 1")
    if rng is None:
        rng = np.random.default_rng(0)
    if init is None:
        init = find_initial_point(problem, feas_tol, bias_mode)
    mm_tol = eps + 1e-9

    trace = SolverTrace()
    current = init
    obj = ramp_objective(problem, current)
    viol = max_ramp_violation(problem, current)
    if viol > feas_tol:
        raise InfeasibleError(
            f"initial point violates ramp constraints by {viol:.3g} "
            f"(tolerance {feas_tol:.3g})", violation=viol)
    iterates = [(current, obj, viol)]
    trace.add(level="mm", mm=0, eps=mm_tol, values=(obj,), extra=viol)

    state = None
    for t in range(1, iterations + 1):
        sub = ConvexSubproblem(problem, current)
        try:
            clf, v_star, trace, state = solve_saddle(
                sub, eps, rng, chooser=chooser, bias_chooser=bias_chooser,
                bias_mode=bias_mode, trace=trace, mm_index=t, state=state,
                max_iterations=max_saddle_iterations,
                bias_max_iterations=bias_max_iterations,
                sdca_max_epochs=sdca_max_epochs)
        except SolverError as exc:
            exc.best = MMResult(current, tuple(iterates), trace)
            raise

        candidate = clf
        if bias_mode != "none" and problem.num_constraints > 0:
            repaired = repair_bias(sub, clf)
            if repaired is not None:
                candidate = repaired

        cand_obj = ramp_objective(problem, candidate)
        cand_viol = max_ramp_violation(problem, candidate)
        if cand_viol <= feas_tol and cand_obj <= obj + mm_tol:
            progressed = not candidate.close_to(current)
            current, obj, viol = candidate, cand_obj, cand_viol
        else:
            progressed = False
            trace.note(
                f"mm iteration {t}: rejected inner solution "
                f"(objective {cand_obj!r} vs {obj!r}, violation {cand_viol:.3g})")
            logger.info("mm iteration %d: kept previous iterate", t)
        iterates.append((current, obj, viol))
        trace.add(level="mm", mm=t, eps=mm_tol, values=(obj,), extra=viol)
        if not progressed:
            break  # fixed point: further iterations would reproduce it
        if stop_early and len(iterates) >= 2:
            if abs(iterates[-2][1] - obj) < eps / 10.0:
                break

    return MMResult(current, tuple(iterates), trace)
