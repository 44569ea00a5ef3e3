"""Desk-scale experiment harnesses: census fairness sweep, synthetic churn.

Both emit one CSV row per (method, hyperparameter, seed), assembled in
deterministic sweep order regardless of worker scheduling.  The census
harness needs the a9a train/test files on disk (fetching them is the
user's responsibility); the churn harness generates its own data because
the original churn datasets are proprietary.
"""

from __future__ import annotations

import concurrent.futures
import csv
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import data as D
from . import metrics as M
from .baselines import (threshold_for_constraint, train_unconstrained_svm,
                        train_zafar_baseline)
from .config import _get, _get_bool, _get_float, _get_int, _parser
from .data import (LabeledData, dataset_from_dense, partition_by_baseline,
                   partition_labeled_data)
from .errors import ConfigError
from .libsvm import parse_libsvm
from .mm import majorize_minimize
from .problem import build_problem, combination
from .rates import (LinearClassifier, evaluate_combination,
                    monte_carlo_positive_rate, indicator_rates, ramp_rates)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Census income fairness sweep
# ---------------------------------------------------------------------------

@dataclass
class AdultConfig:
    train_path: str
    test_path: str
    group_feature: int = 72          # 1-based; the female indicator column
    group_a_has_feature: bool = True  # group a = female
    kappas: tuple = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    zafar_c: tuple = (0.0, 0.01, 0.1, 1.0, 10.0, 1e6)
    repeats: int = 3
    lam: float | None = None         # None = 1 / n_train
    # Multipliers for rate-vs-rate trade-offs sit at O(1); a tight cap keeps
    # early corner probes cheap (capped-and-violated runs warn loudly).
    multiplier_cap: float = 8.0
    iterations: int = 5
    eps: float = 2e-3
    mc_draws: int = 100000
    seed: int = 0
    workers: int = 1
    sdca_epoch_cap: int = 200000


def load_adult_config(path, seed_override=None, out_override=None) -> tuple[AdultConfig, str]:
    cp = _parser()
    cp.read(path, encoding="utf-8")
    if not cp.has_section("experiment"):
        raise ConfigError(f"{path}: missing [experiment] section")
    base = os.path.dirname(os.path.abspath(path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    train = resolve(_get(cp, "experiment", "train", required=True))
    test = resolve(_get(cp, "experiment", "test", required=True))
    for p in (train, test):
        if not os.path.exists(p):
            raise ConfigError(f"referenced file not found: {p}")
    kappas = _parse_floats(_get(cp, "experiment", "kappas", "0.5,0.6,0.7,0.8,0.9,1.0"))
    zafar_c = _parse_floats(_get(cp, "experiment", "zafar_c", "0,0.01,0.1,1,10,1e6"))
    lam_raw = _get(cp, "experiment", "lambda", "auto")
    lam = None if lam_raw == "auto" else float(lam_raw)
    cfg = AdultConfig(
        train_path=train, test_path=test,
        group_feature=_get_int(cp, "experiment", "group_feature", 72),
        group_a_has_feature=_get_bool(cp, "experiment", "group_a_has_feature", True),
        kappas=tuple(kappas), zafar_c=tuple(zafar_c),
        repeats=_get_int(cp, "experiment", "repeats", 3),
        lam=lam,
        multiplier_cap=_get_float(cp, "experiment", "multiplier_cap", 8.0),
        iterations=_get_int(cp, "experiment", "iterations", 5),
        eps=_get_float(cp, "experiment", "eps", 2e-3),
        mc_draws=_get_int(cp, "experiment", "mc_draws", 100000),
        seed=seed_override if seed_override is not None
        else _get_int(cp, "experiment", "seed", 0),
        workers=_get_int(cp, "experiment", "workers", 1),
        sdca_epoch_cap=_get_int(cp, "experiment", "sdca_epoch_cap", 200000),
    )
    out_dir = out_override or _get(cp, "experiment", "out", "out")
    if not os.path.isabs(out_dir) and out_override is None:
        out_dir = os.path.join(base, out_dir)
    return cfg, out_dir


def _parse_floats(raw: str) -> list[float]:
    return [float(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]


def _load_adult_split(cfg: AdultConfig, path, dim=None):
    labels, features = parse_libsvm(path, dim=dim)
    col = cfg.group_feature - 1
    has = np.asarray(features.matrix[:, col].toarray()).ravel() != 0.0
    groups = has if cfg.group_a_has_feature else ~has
    return partition_labeled_data(
        LabeledData(features=features, labels=labels, groups=groups))


ADULT_COLUMNS = [
    "method", "param", "seed",
    "train_error", "test_error",
    "train_rate_a", "train_rate_b", "test_rate_a", "test_rate_b",
    "train_ratio", "test_ratio",
    "train_ratio_rand", "test_ratio_rand", "train_rate_a_rand",
    "train_rate_b_rand",
]


def _fairness_row(method, param, seed, clf, train, test, mc_draws, rng):
    def stats(datasets):
        err = evaluate_combination(M.build_metric("error_rate", datasets),
                                   datasets, clf, "indicator")
        sa = indicator_rates(datasets[D.GROUP_A], clf)[0]
        sb = indicator_rates(datasets[D.GROUP_B], clf)[0]
        return err, sa, sb

    tr_err, tr_a, tr_b = stats(train)
    te_err, te_a, te_b = stats(test)
    tr_a_r = monte_carlo_positive_rate(train[D.GROUP_A], clf, mc_draws, rng)
    tr_b_r = monte_carlo_positive_rate(train[D.GROUP_B], clf, mc_draws, rng)
    te_a_r = monte_carlo_positive_rate(test[D.GROUP_A], clf, mc_draws, rng)
    te_b_r = monte_carlo_positive_rate(test[D.GROUP_B], clf, mc_draws, rng)

    def ratio(b, a):
        return b / a if a > 0 else math.inf

    return {
        "method": method, "param": repr(float(param)), "seed": seed,
        "train_error": repr(tr_err), "test_error": repr(te_err),
        "train_rate_a": repr(tr_a), "train_rate_b": repr(tr_b),
        "test_rate_a": repr(te_a), "test_rate_b": repr(te_b),
        "train_ratio": repr(ratio(tr_b, tr_a)),
        "test_ratio": repr(ratio(te_b, te_a)),
        "train_ratio_rand": repr(ratio(tr_b_r, tr_a_r)),
        "test_ratio_rand": repr(ratio(te_b_r, te_a_r)),
        "train_rate_a_rand": repr(tr_a_r),
        "train_rate_b_rand": repr(tr_b_r),
    }


def train_fair_classifier(train, kappa, lam, cap, iterations, eps, seed,
                          sdca_epoch_cap=200000):
    """Error-rate objective with the group-rate constraint
    s_p(a) >= kappa * s_p(b), bias pinned at zero."""
    objective = M.build_metric("error_rate", train)
    constraint = M.build_fairness_constraint(train, kappa)
    problem = build_problem(train, objective, [constraint], lam,
                            multiplier_cap=cap)
    rng = np.random.default_rng(seed)
    result = majorize_minimize(
        problem, iterations=iterations, eps=eps, rng=rng, bias_mode="none",
        sdca_max_epochs=sdca_epoch_cap)
    return result.classifier


def _adult_task(task):
    cfg_dict, method, param, seed_index, train_path, test_path = task
    cfg = AdultConfig(**cfg_dict)
    train = _load_adult_split(cfg, train_path)
    dim = train[D.ALL].dim
    test = _load_adult_split(cfg, test_path, dim=dim)
    n_train = train[D.ALL].size
    lam = cfg.lam if cfg.lam is not None else 1.0 / n_train
    seed = cfg.seed + 1000 * seed_index
    rng_eval = np.random.default_rng((seed, 7))

    _verify_group_orientation(train)

    objective = M.build_metric("error_rate", train)
    if method == "constrained":
        clf = train_fair_classifier(train, param, lam, cfg.multiplier_cap,
                                    cfg.iterations, cfg.eps, seed,
                                    cfg.sdca_epoch_cap)
    elif method == "unconstrained":
        clf = train_unconstrained_svm(train, objective, lam, eps=cfg.eps,
                                      rng=np.random.default_rng(seed),
                                      bias_mode="none",
                                      sdca_max_epochs=cfg.sdca_epoch_cap)
    elif method == "threshold":
        base = train_unconstrained_svm(train, objective, lam, eps=cfg.eps,
                                       rng=np.random.default_rng(seed),
                                       bias_mode="none",
                                       sdca_max_epochs=cfg.sdca_epoch_cap)
        clf = threshold_for_fairness(base, train, param)
    elif method == "zafar":
        # covariance-constraint multipliers scale with 1/|xbar| and need far
        # more headroom than rate-vs-rate trade-offs; the singleton pseudo
        # example keeps corner probes cheap regardless
        clf = train_zafar_baseline(train, objective, lam, param,
                                   eps=min(cfg.eps, 2e-4),
                                   rng=np.random.default_rng(seed),
                                   multiplier_cap=max(cfg.multiplier_cap, 500.0),
                                   sdca_max_epochs=cfg.sdca_epoch_cap)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return _fairness_row(method, param, seed_index, clf, train, test,
                         cfg.mc_draws, rng_eval)


def _verify_group_orientation(train) -> None:
    """Sanity-check the group feature: positives in group b should outnumber
    those in group a by roughly six to one on the census data."""
    if D.GROUP_A_POS not in train or D.GROUP_B_POS not in train:
        return
    pos_a = train[D.GROUP_A_POS].size
    pos_b = train[D.GROUP_B_POS].size
    if pos_a > pos_b:
        logger.warning(
            "group a has more positives (%d) than group b (%d); the group "
            "feature orientation may be swapped", pos_a, pos_b)


def threshold_for_fairness(clf: LinearClassifier, datasets, kappa: float,
                           ) -> LinearClassifier:
    """Exact bias scan for the group-rate ratio constraint.

    The fairness left-hand side mixes polarities, so the generic monotone
    thresholding does not apply; this scans all indicator breakpoints of
    both groups and keeps the feasible bias closest to the original.
    """
    margins = np.unique(np.concatenate([
        datasets[D.GROUP_A].margins(clf.w, 0.0),
        datasets[D.GROUP_B].margins(clf.w, 0.0),
        np.asarray([clf.b]),
    ]))
    candidates = np.unique(np.concatenate([margins, np.nextafter(margins, -np.inf)]))

    feasible = []
    for b in candidates:
        shifted = LinearClassifier(clf.w, float(b))
        sa = indicator_rates(datasets[D.GROUP_A], shifted)[0]
        sb = indicator_rates(datasets[D.GROUP_B], shifted)[0]
        if sa >= kappa * sb:
            feasible.append(float(b))
    if not feasible:
        return clf
    best = min(feasible, key=lambda b: (abs(b - clf.b), -b))
    return LinearClassifier(clf.w, best)


def run_experiment_adult(cfg: AdultConfig, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    tasks = []
    cfg_dict = cfg.__dict__.copy()
    for seed_index in range(cfg.repeats):
        for kappa in cfg.kappas:
            tasks.append((cfg_dict, "constrained", kappa, seed_index,
                          cfg.train_path, cfg.test_path))
            tasks.append((cfg_dict, "threshold", kappa, seed_index,
                          cfg.train_path, cfg.test_path))
        for c in cfg.zafar_c:
            tasks.append((cfg_dict, "zafar", c, seed_index,
                          cfg.train_path, cfg.test_path))
        tasks.append((cfg_dict, "unconstrained", 0.0, seed_index,
                      cfg.train_path, cfg.test_path))
    rows = _run_tasks(_adult_task, tasks, cfg.workers)
    rows.sort(key=lambda r: (r["method"], float(r["param"]), r["seed"]))
    out_path = os.path.join(out_dir, "adult_sweep.csv")
    _write_rows(out_path, ADULT_COLUMNS, rows)
    return out_path


# ---------------------------------------------------------------------------
# Synthetic churn scenario
# ---------------------------------------------------------------------------

@dataclass
class ChurnConfig:
    """Two overlapping Gaussian classes in the plane; a fixed mediocre
    deployed model provides the churn/recall reference."""

    n_biased: int = 400        # labeled, positives oversampled
    n_iid: int = 400           # labeled, drawn from the true mix
    n_pool: int = 800          # unlabeled churn pool
    positive_fraction: float = 0.5
    biased_positive_fraction: float = 0.7
    mean_scale: float = 1.0
    noise: float = 0.9
    deployed_w: tuple = (1.0, -0.6)
    deployed_b: float = 0.25
    churn_targets: tuple = (0.05, 0.1, 0.2, 0.3, 0.5, 1.0)
    repeats: int = 5
    lam: float = 0.05
    multiplier_cap: float = 200.0
    iterations: int = 5
    eps: float = 1e-3
    mc_draws: int = 100000
    seed: int = 0
    workers: int = 1
    sdca_epoch_cap: int = 50000


def load_churn_config(path, seed_override=None, out_override=None) -> tuple[ChurnConfig, str]:
    cp = _parser()
    cp.read(path, encoding="utf-8")
    base = os.path.dirname(os.path.abspath(path))
    sec = "experiment"
    cfg = ChurnConfig()
    if cp.has_section(sec):
        cfg = ChurnConfig(
            n_biased=_get_int(cp, sec, "n_biased", cfg.n_biased),
            n_iid=_get_int(cp, sec, "n_iid", cfg.n_iid),
            n_pool=_get_int(cp, sec, "n_pool", cfg.n_pool),
            churn_targets=tuple(_parse_floats(
                _get(cp, sec, "churn_targets", "0.05,0.1,0.2,0.3,0.5,1.0"))),
            repeats=_get_int(cp, sec, "repeats", cfg.repeats),
            lam=_get_float(cp, sec, "lambda", cfg.lam),
            multiplier_cap=_get_float(cp, sec, "multiplier_cap", cfg.multiplier_cap),
            iterations=_get_int(cp, sec, "iterations", cfg.iterations),
            eps=_get_float(cp, sec, "eps", cfg.eps),
            mc_draws=_get_int(cp, sec, "mc_draws", cfg.mc_draws),
            seed=seed_override if seed_override is not None
            else _get_int(cp, sec, "seed", cfg.seed),
            workers=_get_int(cp, sec, "workers", cfg.workers),
            sdca_epoch_cap=_get_int(cp, sec, "sdca_epoch_cap", cfg.sdca_epoch_cap),
        )
    elif seed_override is not None:
        cfg = ChurnConfig(seed=seed_override)
    out_dir = out_override or (
        _get(cp, sec, "out", "out") if cp.has_section(sec) else "out")
    if not os.path.isabs(out_dir) and out_override is None:
        out_dir = os.path.join(base, out_dir)
    return cfg, out_dir


@dataclass
class ChurnScenario:
    datasets_train: dict
    datasets_test: dict
    deployed: LinearClassifier
    deployed_recall: float       # deployed model's recall on the iid train split
    n_labeled_train: int
    feasible_init: LinearClassifier


def _sample_class(rng, n, positive, cfg: ChurnConfig):
    mean = np.array([cfg.mean_scale, 0.4]) if positive else \
        np.array([-cfg.mean_scale, -0.4])
    return rng.normal(mean, cfg.noise, size=(n, 2))


def _labeled(rng, n, pos_frac, cfg):
    n_pos = int(round(n * pos_frac))
    x = np.vstack([_sample_class(rng, n_pos, True, cfg),
                   _sample_class(rng, n - n_pos, False, cfg)])
    y = np.concatenate([np.ones(n_pos, dtype=np.int64),
                        -np.ones(n - n_pos, dtype=np.int64)])
    perm = rng.permutation(n)
    return x[perm], y[perm]


def make_churn_scenario(cfg: ChurnConfig, seed: int) -> ChurnScenario:
    rng = np.random.default_rng((seed, 11))
    deployed = LinearClassifier(np.asarray(cfg.deployed_w, dtype=np.float64),
                                cfg.deployed_b)

    x1, y1 = _labeled(rng, cfg.n_biased, cfg.biased_positive_fraction, cfg)
    x2, y2 = _labeled(rng, cfg.n_iid, cfg.positive_fraction, cfg)
    x3, _ = _labeled(rng, cfg.n_pool, cfg.positive_fraction, cfg)

    def split(x, frac=0.8):
        k = int(round(len(x) * frac))
        return x[:k], x[k:]

    def named(prefix, x, y):
        out = {}
        pos, neg = x[y == 1], x[y == -1]
        tr_p, te_p = split(pos)
        tr_n, te_n = split(neg)
        return ((f"{prefix}_pos", tr_p, te_p), (f"{prefix}_neg", tr_n, te_n))

    train, test = {}, {}
    for name, tr, te in (*named("d1", x1, y1), *named("d2", x2, y2)):
        train[name] = dataset_from_dense(name, tr)
        test[name] = dataset_from_dense(name, te)
    pool_train, pool_test = split(x3)

    def churn_parts(pool, target):
        ds = dataset_from_dense("pool", pool)
        preds = np.where(ds.margins(deployed.w, deployed.b) > 0.0, 1, -1)
        target.update(partition_by_baseline(ds, preds))

    churn_parts(pool_train, train)
    churn_parts(pool_test, test)

    recall = indicator_rates(train["d2_pos"], deployed)[0]
    init = _scaled_feasible_init(deployed, train)
    return ChurnScenario(datasets_train=train, datasets_test=test,
                         deployed=deployed, deployed_recall=recall,
                         n_labeled_train=(train["d1_pos"].size + train["d1_neg"].size
                                          + train["d2_pos"].size + train["d2_neg"].size),
                         feasible_init=init)


def _scaled_feasible_init(deployed: LinearClassifier, train,
                          tol: float = 1e-9) -> LinearClassifier:
    """Scale the deployed model until its ramp rates match its own
    predictions almost exactly: churn ~ 0 and recall at the deployed value,
    a feasible start for any achievable churn target."""
    scale = 4.0
    for _ in range(40):
        cand = LinearClassifier(scale * deployed.w, scale * deployed.b)
        worst = 0.0
        for name in ("base_pos", "base_neg", "d2_pos"):
            r_p, r_n = ramp_rates(train[name], cand)
            s_p, s_n = indicator_rates(train[name], cand)
            worst = max(worst, abs(r_p - s_p), abs(r_n - s_n))
        if worst <= tol:
            return cand
        scale *= 4.0
    return cand


def churn_problem(scenario: ChurnScenario, target: float, cfg: ChurnConfig):
    train = scenario.datasets_train
    n1 = train["d1_pos"].size + train["d1_neg"].size
    total = scenario.n_labeled_train
    # errors on the biased set plus false positives on the iid set,
    # normalized by the labeled-example count
    objective = combination([
        ("d1_pos", "negative", train["d1_pos"].size / total),
        ("d1_neg", "positive", train["d1_neg"].size / total),
        ("d2_neg", "positive", train["d2_neg"].size / total),
    ])
    constraints = [
        M.recall_constraint(train, scenario.deployed_recall, dataset="d2_pos"),
        M.churn_constraint(train, target),
    ]
    return build_problem(train, objective, constraints, cfg.lam,
                         multiplier_cap=cfg.multiplier_cap)


CHURN_COLUMNS = [
    "method", "churn_target", "seed",
    "train_churn", "test_churn", "train_churn_rand", "test_churn_rand",
    "train_error", "test_error", "train_recall", "test_recall",
    "recall_floor", "ramp_train_churn",
]


def _churn_stats(scenario: ChurnScenario, clf, split: str, mc_draws, rng):
    ds = scenario.datasets_train if split == "train" else scenario.datasets_test
    churn_combo = M.build_metric("churn_rate", ds)
    churn = evaluate_combination(churn_combo, ds, clf, "indicator")
    # randomized churn: per baseline slice, disagreement is the flip rate
    total = ds["base_pos"].size + ds["base_neg"].size
    p_pos = monte_carlo_positive_rate(ds["base_pos"], clf, mc_draws, rng)
    p_neg = monte_carlo_positive_rate(ds["base_neg"], clf, mc_draws, rng)
    churn_rand = ((1.0 - p_pos) * ds["base_pos"].size
                  + p_neg * ds["base_neg"].size) / total
    err_combo = combination([
        ("d1_pos", "negative", ds["d1_pos"].size),
        ("d1_neg", "positive", ds["d1_neg"].size),
        ("d2_pos", "negative", ds["d2_pos"].size),
        ("d2_neg", "positive", ds["d2_neg"].size),
    ]).scaled(1.0 / (ds["d1_pos"].size + ds["d1_neg"].size
                     + ds["d2_pos"].size + ds["d2_neg"].size))
    error = evaluate_combination(err_combo, ds, clf, "indicator")
    recall = indicator_rates(ds["d2_pos"], clf)[0]
    return churn, churn_rand, error, recall


def _churn_task(task):
    cfg_dict, method, target, seed_index = task
    cfg = ChurnConfig(**cfg_dict)
    scenario = make_churn_scenario(cfg, cfg.seed + seed_index)
    rng_eval = np.random.default_rng((cfg.seed + seed_index, 13))
    train = scenario.datasets_train

    if method == "constrained":
        problem = churn_problem(scenario, target, cfg)
        result = majorize_minimize(
            problem, init=scenario.feasible_init, iterations=cfg.iterations,
            eps=cfg.eps, rng=np.random.default_rng((cfg.seed + seed_index, 3)),
            bias_mode="free", sdca_max_epochs=cfg.sdca_epoch_cap)
        clf = result.classifier
        ramp_churn = evaluate_combination(
            M.build_metric("churn_rate", train), train, clf, "ramp")
    else:
        objective = combination([
            ("d1_pos", "negative", train["d1_pos"].size),
            ("d1_neg", "positive", train["d1_neg"].size),
            ("d2_pos", "negative", train["d2_pos"].size),
            ("d2_neg", "positive", train["d2_neg"].size),
        ]).scaled(1.0 / scenario.n_labeled_train)
        base = train_unconstrained_svm(
            train, objective, cfg.lam, eps=cfg.eps,
            rng=np.random.default_rng((cfg.seed + seed_index, 3)),
            sdca_max_epochs=cfg.sdca_epoch_cap)
        constraint = M.recall_constraint(train, scenario.deployed_recall,
                                         dataset="d2_pos")
        clf = threshold_for_constraint(base, constraint, train)
        ramp_churn = evaluate_combination(
            M.build_metric("churn_rate", train), train, clf, "ramp")

    tr = _churn_stats(scenario, clf, "train", cfg.mc_draws, rng_eval)
    te = _churn_stats(scenario, clf, "test", cfg.mc_draws, rng_eval)
    return {
        "method": method, "churn_target": repr(float(target)), "seed": seed_index,
        "train_churn": repr(tr[0]), "test_churn": repr(te[0]),
        "train_churn_rand": repr(tr[1]), "test_churn_rand": repr(te[1]),
        "train_error": repr(tr[2]), "test_error": repr(te[2]),
        "train_recall": repr(tr[3]), "test_recall": repr(te[3]),
        "recall_floor": repr(scenario.deployed_recall),
        "ramp_train_churn": repr(ramp_churn),
    }


def run_experiment_churn(cfg: ChurnConfig, out_dir) -> str:
    os.makedirs(out_dir, exist_ok=True)
    cfg_dict = cfg.__dict__.copy()
    tasks = []
    for seed_index in range(cfg.repeats):
        for target in cfg.churn_targets:
            tasks.append((cfg_dict, "constrained", target, seed_index))
        tasks.append((cfg_dict, "threshold", 1.0, seed_index))
    rows = _run_tasks(_churn_task, tasks, cfg.workers)
    rows.sort(key=lambda r: (r["method"], float(r["churn_target"]), r["seed"]))
    out_path = os.path.join(out_dir, "churn_sweep.csv")
    _write_rows(out_path, CHURN_COLUMNS, rows)
    return out_path


# ---------------------------------------------------------------------------

def _run_tasks(fn, tasks, workers: int) -> list[dict]:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _write_rows(path, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
