"""Command line interface: train, eval, experiment-adult, experiment-churn, audit."""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from .analysis import audit_trace
from .config import build_training_problem, load_config, load_split
from .errors import RateconError, exit_code_for
from .mm import find_initial_point, majorize_minimize
from .modelio import read_model, write_model
from .trace import SolverTrace

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="run configuration file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--log-level", default="warn",
                        choices=["error", "warn", "info", "debug"])


def _setup_logging(level: str) -> None:
    levels = {"error": logging.ERROR, "warn": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels[level],
                        format="%(levelname)s %(name)s: %(message)s")


def cmd_train(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    problem, train_sets, _ = build_training_problem(config)
    rng = np.random.default_rng(config.seed)

    if config.init == "baseline":
        if config.baseline_model is None:
            from .errors import ConfigError
            raise ConfigError("solver.init = baseline requires data.baseline_model")
        base, _ = read_model(config.baseline_model)
        init = base
    else:
        init = find_initial_point(problem, config.feas_tol, config.bias_mode)

    result = majorize_minimize(
        problem, init=init, iterations=config.iterations, eps=config.eps,
        rng=rng, feas_tol=config.feas_tol, bias_mode=config.bias_mode,
        chooser=config.chooser, bias_chooser=config.bias_chooser,
        stop_early=config.stop_early,
        max_saddle_iterations=config.saddle_cap,
        bias_max_iterations=config.bias_cap,
        sdca_max_epochs=config.sdca_epoch_cap)

    os.makedirs(config.out_dir, exist_ok=True)
    write_model(config.model_path, result.classifier, config.bias_mode)
    result.trace.write_csv(config.trace_path)

    audit = audit_trace(result.trace)
    splits = {"train": train_sets}
    if config.test_path:
        splits["test"] = load_split(config, config.test_path)
    from .reports import training_report
    eval_rng = np.random.default_rng((config.seed, 101))
    report = training_report(config, problem, result.classifier, splits,
                             eval_rng, trace=result.trace, audit=audit)
    with open(config.report_path, "w", encoding="utf-8") as fh:
        fh.write(report)
    print(f"model: {config.model_path}")
    print(f"trace: {config.trace_path}")
    print(f"report: {config.report_path}")
    if not audit.ok:
        logger.error("trace audit failed:\n%s", "\n".join(audit.lines()))
        return 4
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config, args.seed, args.out)
    clf, _ = read_model(args.model)
    splits = {"train": load_split(config, config.train_path)}
    if config.test_path:
        splits["test"] = load_split(config, config.test_path)
    from .reports import split_report
    rng = np.random.default_rng((config.seed, 101))
    lines = [f"ratecon evaluation report", f"model: {args.model}",
             f"seed: {config.seed} (randomized-rule draws: {config.mc_draws})"]
    for name, datasets in splits.items():
        lines.append("")
        lines.extend(split_report(config, name, datasets, clf, rng))
    text = "\n".join(lines) + "\n"
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "eval_report.txt")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"report: {path}")
    else:
        print(text, end="")
    return 0


def cmd_experiment_adult(args) -> int:
    from .experiments import load_adult_config, run_experiment_adult
    cfg, out_dir = load_adult_config(args.config, args.seed, args.out)
    path = run_experiment_adult(cfg, out_dir)
    print(f"sweep: {path}")
    return 0


def cmd_experiment_churn(args) -> int:
    from .experiments import load_churn_config, run_experiment_churn
    cfg, out_dir = load_churn_config(args.config, args.seed, args.out)
    path = run_experiment_churn(cfg, out_dir)
    print(f"sweep: {path}")
    return 0


def cmd_audit(args) -> int:
    trace = SolverTrace.from_csv(args.trace)
    report = audit_trace(trace)
    print("\n".join(report.lines()))
    return 0 if report.ok else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratecon",
        description="Train linear classifiers under dataset rate constraints")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a run config")
    _add_common(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a model file on configured data")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("experiment-adult", help="census fairness sweep")
    _add_common(p)
    p.set_defaults(fn=cmd_experiment_adult)

    p = sub.add_parser("experiment-churn", help="synthetic churn sweep")
    _add_common(p)
    p.set_defaults(fn=cmd_experiment_churn)

    p = sub.add_parser("audit", help="check cutting-plane inequalities in a trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--log-level", default="warn",
                   choices=["error", "warn", "info", "debug"])
    p.set_defaults(fn=cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _setup_logging(getattr(args, "log_level", "warn"))
    try:
        return args.fn(args)
    except RateconError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
