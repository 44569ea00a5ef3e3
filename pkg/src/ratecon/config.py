"""Run configuration: flat sectioned key-value text (INI dialect).

Sections: ``[data]``, ``[problem]``, zero or more ``[constraint NAME]``,
``[solver]``, ``[output]``, ``[eval]``.  The grammar is documented in the
README.  All values are typed here at load time and referenced files must
exist; anything malformed raises a configuration error.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass

import numpy as np

from . import data as D
from . import metrics
from .data import LabeledData, partition_labeled_data
from .errors import ConfigError, DataError
from .libsvm import parse_libsvm
from .modelio import read_model
from .problem import ConstrainedProblem, build_problem
from .rates import LinearClassifier


@dataclass
class ConstraintSpec:
    name: str
    kind: str
    options: dict


@dataclass
class RunConfig:
    path: str
    train_path: str
    test_path: str | None
    dimension: int | None
    group_feature: int | None      # 1-based libsvm index
    group_a_has_feature: bool
    group_file: str | None
    baseline_model: str | None
    baseline_predictions: str | None
    objective: str
    objective_dataset: str | None
    lam: float
    multiplier_cap: float | None
    bias_mode: str
    constraints: list[ConstraintSpec]
    iterations: int
    eps: float
    seed: int
    chooser: str
    bias_chooser: str
    feas_tol: float
    saddle_cap: int
    bias_cap: int
    sdca_epoch_cap: int
    stop_early: bool
    init: str
    out_dir: str
    model_name: str
    trace_name: str
    report_name: str
    mc_draws: int

    @property
    def model_path(self) -> str:
        return os.path.join(self.out_dir, self.model_name)

    @property
    def trace_path(self) -> str:
        return os.path.join(self.out_dir, self.trace_name)

    @property
    def report_path(self) -> str:
        return os.path.join(self.out_dir, self.report_name)


def _parser() -> configparser.ConfigParser:
    return configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None)


def _get(cp, section, key, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    if required:
        raise ConfigError(f"missing {section}.{key}")
    return default


def _get_float(cp, section, key, default=None, required=False):
    raw = _get(cp, section, key, None, required)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from None


def _get_int(cp, section, key, default=None, required=False):
    raw = _get(cp, section, key, None, required)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not an integer: {raw!r}") from None


def _get_bool(cp, section, key, default=False):
    raw = _get(cp, section, key)
    if raw is None:
        return default
    if raw.lower() in ("true", "yes", "1", "on"):
        return True
    if raw.lower() in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{section}.{key}: not a boolean: {raw!r}")


def _choice(value, allowed, what):
    if value not in allowed:
        raise ConfigError(f"{what} must be one of {sorted(allowed)}, got {value!r}")
    return value


def load_config(path, seed_override: int | None = None,
                out_override: str | None = None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    cp = _parser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("data"):
        raise ConfigError(f"{path}: missing [data] section")

    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        if p is None:
            return None
        return p if os.path.isabs(p) else os.path.join(base, p)

    train_path = resolve(_get(cp, "data", "train", required=True))
    test_path = resolve(_get(cp, "data", "test"))
    group_file = resolve(_get(cp, "data", "group_file"))
    baseline_model = resolve(_get(cp, "data", "baseline_model"))
    baseline_predictions = resolve(_get(cp, "data", "baseline_predictions"))
    for p in (train_path, test_path, group_file, baseline_model,
              baseline_predictions):
        if p is not None and not os.path.exists(p):
            raise ConfigError(f"referenced file not found: {p}")

    constraints = []
    for section in cp.sections():
        if not section.startswith("constraint"):
            continue
        name = section[len("constraint"):].strip() or section
        kind = _choice(_get(cp, section, "kind", required=True),
                       {"coverage", "recall", "fairness", "churn", "precision",
                        "egregious"}, f"{section}.kind")
        options = {k: v for k, v in cp.items(section) if k != "kind"}
        constraints.append(ConstraintSpec(name=name, kind=kind, options=options))

    objective = _get(cp, "problem", "objective", "error_rate")
    if objective not in metrics.LINEAR_METRICS:
        raise ConfigError(f"problem.objective: unknown metric {objective!r}")

    out_dir = out_override or _get(cp, "output", "dir", "out")
    if not os.path.isabs(out_dir) and out_override is None:
        out_dir = os.path.join(base, out_dir)
    seed = _get_int(cp, "solver", "seed", 0)
    if seed_override is not None:
        seed = seed_override

    return RunConfig(
        path=os.path.abspath(path),
        train_path=train_path,
        test_path=test_path,
        dimension=_get_int(cp, "data", "dimension"),
        group_feature=_get_int(cp, "data", "group_feature"),
        group_a_has_feature=_get_bool(cp, "data", "group_a_has_feature", True),
        group_file=group_file,
        baseline_model=baseline_model,
        baseline_predictions=baseline_predictions,
        objective=objective,
        objective_dataset=_get(cp, "problem", "objective_dataset"),
        lam=_get_float(cp, "problem", "lambda", required=True),
        multiplier_cap=_get_float(cp, "problem", "multiplier_cap"),
        bias_mode=_choice(_get(cp, "problem", "bias", "free"),
                          {"free", "none"}, "problem.bias"),
        constraints=constraints,
        iterations=_get_int(cp, "solver", "iterations", 5),
        eps=_get_float(cp, "solver", "eps", 1e-3),
        seed=seed,
        chooser=_choice(_get(cp, "solver", "chooser", "max"),
                        {"max", "centroid"}, "solver.chooser"),
        bias_chooser=_choice(_get(cp, "solver", "bias_chooser", "centroid"),
                             {"min", "centroid"}, "solver.bias_chooser"),
        feas_tol=_get_float(cp, "solver", "feas_tol", 1e-6),
        saddle_cap=_get_int(cp, "solver", "saddle_cap", 1000),
        bias_cap=_get_int(cp, "solver", "bias_cap", 200),
        sdca_epoch_cap=_get_int(cp, "solver", "sdca_epoch_cap", 20000),
        stop_early=_get_bool(cp, "solver", "stop_early", False),
        init=_choice(_get(cp, "solver", "init", "zeros"),
                     {"zeros", "baseline"}, "solver.init"),
        out_dir=out_dir,
        model_name=_get(cp, "output", "model", "model.txt"),
        trace_name=_get(cp, "output", "trace", "trace.csv"),
        report_name=_get(cp, "output", "report", "report.txt"),
        mc_draws=_get_int(cp, "eval", "mc_draws", 0),
    )


def load_split(config: RunConfig, path: str) -> dict:
    """Parse a libsvm file and partition it per the config's roles."""
    labels, features = parse_libsvm(path, dim=config.dimension)
    groups = None
    if config.group_feature is not None:
        col = config.group_feature - 1
        if col < 0 or col >= features.dim:
            raise ConfigError(f"group_feature {config.group_feature} out of range")
        has = np.asarray(
            features.matrix[:, col].toarray()).ravel() != 0.0
        groups = has if config.group_a_has_feature else ~has
    elif config.group_file is not None:
        flags = _read_flag_file(config.group_file)
        if len(flags) != features.size:
            raise DataError("group_file length does not match data")
        groups = flags
    baseline = None
    if config.baseline_model is not None:
        clf, _ = read_model(config.baseline_model)
        baseline = predict_deterministic(clf, features)
    elif config.baseline_predictions is not None:
        baseline = _read_pm1_file(config.baseline_predictions)
        if len(baseline) != features.size:
            raise DataError("baseline_predictions length does not match data")
    data = LabeledData(features=features, labels=labels, groups=groups,
                       baseline_predictions=baseline)
    return partition_labeled_data(data)


def predict_deterministic(clf: LinearClassifier, features) -> np.ndarray:
    """+1 on strictly positive margin, -1 otherwise (zero margin is negative)."""
    z = features.margins(clf.w, clf.b)
    return np.where(z > 0.0, 1, -1).astype(np.int64)


def _read_flag_file(path) -> np.ndarray:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            if tok in ("1", "a", "A"):
                out.append(True)
            elif tok in ("0", "b", "B"):
                out.append(False)
            else:
                raise DataError(f"{path}: line {lineno}: bad group flag {tok!r}")
    return np.asarray(out, dtype=bool)


def _read_pm1_file(path) -> np.ndarray:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.strip()
            if not tok:
                continue
            if tok in ("+1", "1"):
                out.append(1)
            elif tok == "-1":
                out.append(-1)
            else:
                raise DataError(f"{path}: line {lineno}: bad prediction {tok!r}")
    return np.asarray(out, dtype=np.int64)


def build_constraint(spec: ConstraintSpec, datasets) -> "RateConstraint":
    opts = spec.options
    try:
        if spec.kind == "coverage":
            return metrics.coverage_constraint(
                datasets, float(opts["bound"]), opts.get("direction", "<="),
                opts.get("dataset"))
        if spec.kind == "recall":
            return metrics.recall_constraint(
                datasets, float(opts["min"]), opts.get("dataset"))
        if spec.kind == "fairness":
            equal_opp = str(opts.get("equal_opportunity", "false")).lower() in (
                "true", "1", "yes")
            a = D.GROUP_A_POS if equal_opp else D.GROUP_A
            b = D.GROUP_B_POS if equal_opp else D.GROUP_B
            return metrics.build_fairness_constraint(
                datasets, float(opts["kappa"]), group_a=a, group_b=b)
        if spec.kind == "churn":
            return metrics.churn_constraint(datasets, float(opts["max"]))
        if spec.kind == "precision":
            return metrics.precision_constraint(datasets, float(opts["min"]))
        if spec.kind == "egregious":
            return metrics.egregious_constraint(
                datasets, opts["dataset"], opts.get("polarity", "positive"),
                float(opts["min"]))
    except KeyError as exc:
        raise ConfigError(f"constraint {spec.name!r}: missing option {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"constraint {spec.name!r}: {exc}") from None
    raise ConfigError(f"constraint {spec.name!r}: unknown kind {spec.kind!r}")


def build_training_problem(config: RunConfig,
                           ) -> tuple[ConstrainedProblem, dict, list[ConstraintSpec]]:
    datasets = load_split(config, config.train_path)
    objective = metrics.build_metric(config.objective, datasets,
                                     config.objective_dataset)
    constraints = [build_constraint(spec, datasets) for spec in config.constraints]
    problem = build_problem(datasets, objective, constraints, config.lam,
                            multiplier_cap=config.multiplier_cap)
    return problem, datasets, config.constraints
