"""Structured-text reports: metric values per split plus diagnostics."""

from __future__ import annotations

import numpy as np

from . import metrics as M
from .analysis import AuditReport, generalization_report
from .config import RunConfig, build_constraint
from .problem import ConstrainedProblem
from .rates import (LinearClassifier, evaluate_combination,
                    monte_carlo_positive_rate, ramp)


def combination_monte_carlo(combo, datasets, clf: LinearClassifier,
                            draws: int, rng: np.random.Generator) -> float:
    """Randomized-rule estimate of a rate combination over `draws` rounds."""
    total = combo.constant
    for t in combo.terms:
        p_hat = monte_carlo_positive_rate(datasets[t.dataset], clf, draws, rng)
        r = p_hat if t.polarity == "positive" else 1.0 - p_hat
        total += t.coefficient * r
    return total


def metric_lines(name: str, combo, datasets, clf, draws: int,
                 rng: np.random.Generator | None) -> list[str]:
    ind = evaluate_combination(combo, datasets, clf, "indicator")
    rmp = evaluate_combination(combo, datasets, clf, "ramp")
    line = f"metric {name}: indicator={ind!r} ramp={rmp!r}"
    if draws > 0 and rng is not None:
        mc = combination_monte_carlo(combo, datasets, clf, draws, rng)
        line += f" randomized[{draws} draws]={mc!r}"
    return [line]


def declared_metrics(config: RunConfig, datasets) -> list[tuple[str, object]]:
    """(name, combination) pairs for the objective and every constraint lhs."""
    out = [(f"objective/{config.objective}",
            M.build_metric(config.objective, datasets, config.objective_dataset))]
    for spec in config.constraints:
        constraint = build_constraint(spec, datasets)
        out.append((f"constraint/{spec.name} (bound {constraint.bound!r})",
                    constraint.lhs))
    return out


def split_report(config: RunConfig, split_name: str, datasets, clf,
                 rng: np.random.Generator | None) -> list[str]:
    lines = [f"[split {split_name}]"]
    for name, combo in declared_metrics(config, datasets):
        lines.extend(metric_lines(name, combo, datasets, clf,
                                  config.mc_draws, rng))
    return lines


def solver_budget_lines(config: RunConfig, problem: ConstrainedProblem,
                        trace) -> list[str]:
    """Performed inner work next to the theoretical per-call update bound.

    The bound (up to unknown constants) is
    max(0, n ln(lambda n / L^2 X^2)) + n + L^2 X^2 / (lambda eps'') updates
    for one inner solve at gap target eps''; it is reported for comparison
    only, never asserted.
    """
    import math as _math
    from .subproblem import ConvexSubproblem
    from .rates import zero_classifier
    sub = ConvexSubproblem(problem, zero_classifier(problem.dim))
    n = sub.n
    big_l = sub.lipschitz_constant(np.zeros(problem.num_constraints))
    x_norm = problem.max_example_norm
    sdca_rows = [r for r in trace.records if r.level == "sdca"]
    total_updates = sum(1 for r in sdca_rows if r.epoch > 0) * n
    targets = [r.eps for r in sdca_rows if r.eps]
    out = [f"inner coordinate updates performed: {total_updates}"
           f" ({len(sdca_rows)} gap checks)"]
    if targets and big_l > 0 and x_norm > 0:
        eps2 = min(targets)
        lx = big_l * big_l * x_norm * x_norm
        log_term = max(0.0, n * _math.log(problem.lam * n / lx)) \
            if problem.lam * n / lx > 0 else 0.0
        bound = log_term + n + lx / (problem.lam * eps2)
        out.append(
            f"update bound per call at the tightest target {eps2!r} "
            f"(multiplier-free worst case, up to constants): {bound:.3g}")
    return out


def training_report(config: RunConfig, problem: ConstrainedProblem,
                    clf: LinearClassifier, splits: dict,
                    rng: np.random.Generator | None,
                    trace=None,
                    audit: AuditReport | None = None,
                    extra_lines: list[str] | None = None) -> str:
    lines = [
        "ratecon training report",
        f"config: {config.path}",
        f"objective: {config.objective}",
        f"lambda: {config.lam!r}",
        f"bias mode: {config.bias_mode}",
        f"constraints: {len(config.constraints)}",
        f"seed: {config.seed}",
        "",
    ]
    for split_name, datasets in splits.items():
        lines.extend(split_report(config, split_name, datasets, clf, rng))
        lines.append("")
    lines.append("[generalization]")
    lines.extend(generalization_report(problem).lines())
    if trace is not None:
        lines.append("")
        lines.append("[solver]")
        lines.extend(solver_budget_lines(config, problem, trace))
    if audit is not None:
        lines.append("")
        lines.append("[trace audit]")
        lines.extend(audit.lines())
    if extra_lines:
        lines.append("")
        lines.extend(extra_lines)
    return "\n".join(lines) + "\n"
