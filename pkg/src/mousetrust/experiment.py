"""Cross-validated authentication experiment over synthetic corpora.

One run covers a single scenario (low, high, or both), trains every
requested model per target user under stratified k-fold cross-validation,
and reports per-cell train/test AUC, balanced accuracy, and F1 plus
per-model averages.

Determinism rules. Every random quantity derives from the master seed plus
structural coordinates (scenario, user, model, fold) through SeedSequence
tuples, never from scheduling: fold cells may run in any process layout and
the assembled report is identical. The wall-clock field lives only on the
in-memory report and is excluded from serialized output so report files for
one (config, seed) are byte-identical. Normalization statistics are fit on
train-fold rows only, after the fold split, so test rows cannot influence
any fitted quantity.
"""

from __future__ import annotations

import json
import multiprocessing
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DataError
from .events import clean_trace
from .forest import TreeConfig, fit_forest, fit_tree, forest_predict_matrix, tree_predict_matrix
from .kinematics import FEATURE_WIDTH, fit_norm_stats, normalize_rows, trace_to_frame
from .metrics import balanced_accuracy, f1_score, roc_auc
from .rnn import RnnConfig, score_windows, train_rnn
from .synthgen import MODE_CODES, GenSpec, generate_trace, sample_profile
from .windowing import Window, label_windows, make_windows, stratified_folds

MODEL_ORDER = ("gru", "lstm", "dt", "rf")
MODEL_CODES = {name: i for i, name in enumerate(MODEL_ORDER)}
SCENARIO_CODES = {"low": 0, "high": 1, "both": 2}
METRIC_NAMES = ("auc", "bal_acc", "f1")
SPLIT_NAMES = ("train", "test")

# namespace constants separating the seed-derivation streams
_SEED_PROFILE = 11
_SEED_TRACE = 22
_SEED_FOLDS = 33
_SEED_CELL = 44


def derive_seed(*parts: int) -> int:
    """A 64-bit seed from structural coordinates, stable across platforms."""
    ss = np.random.SeedSequence(tuple(int(p) for p in parts))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "both"
    users_per_scenario: int = 15
    shared_users: int = 11
    target_users: Optional[tuple[str, ...]] = None  # None = every roster user
    models: tuple[str, ...] = MODEL_ORDER
    window_length: int = 40
    window_stride: int = 40
    folds: int = 5
    master_seed: int = 0
    trace_duration: float = 900.0
    sample_interval: float = 0.01
    screen: tuple[int, int] = (1920, 1080)
    rnn_hidden: int = 32
    rnn_epochs: int = 30
    rnn_batch: int = 32
    rnn_learning_rate: float = 1e-3
    n_trees: int = 100
    tree_max_depth: Optional[int] = 12

    def __post_init__(self):
        if self.scenario not in SCENARIO_CODES:
            raise DataError(f"scenario must be one of {sorted(SCENARIO_CODES)}")
        if self.folds < 2:
            raise DataError("folds must be >= 2")
        if self.users_per_scenario < 1:
            raise DataError("need at least one user per scenario")
        if not (0 <= self.shared_users <= self.users_per_scenario):
            raise DataError("shared users must lie between 0 and users per scenario")
        if not self.models:
            raise DataError("need at least one model")
        for name in self.models:
            if name not in MODEL_CODES:
                raise DataError(f"unknown model {name!r}; known: {MODEL_ORDER}")
        if self.scenario == "both" and self.shared_users == 0:
            raise DataError("scenario 'both' needs users who play both games")

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "users_per_scenario": self.users_per_scenario,
            "shared_users": self.shared_users,
            "target_users": None if self.target_users is None else list(self.target_users),
            "models": list(self.models),
            "window_length": self.window_length,
            "window_stride": self.window_stride,
            "folds": self.folds,
            "master_seed": self.master_seed,
            "trace_duration": self.trace_duration,
            "sample_interval": self.sample_interval,
            "screen": list(self.screen),
            "rnn_hidden": self.rnn_hidden,
            "rnn_epochs": self.rnn_epochs,
            "rnn_batch": self.rnn_batch,
            "rnn_learning_rate": self.rnn_learning_rate,
            "n_trees": self.n_trees,
            "tree_max_depth": self.tree_max_depth,
        }


def config_from_dict(payload: dict) -> ExperimentConfig:
    kwargs = dict(payload)
    if kwargs.get("target_users") is not None:
        kwargs["target_users"] = tuple(kwargs["target_users"])
    if "models" in kwargs:
        kwargs["models"] = tuple(kwargs["models"])
    if "screen" in kwargs:
        kwargs["screen"] = tuple(kwargs["screen"])
    return ExperimentConfig(**kwargs)


def _user_id(index: int) -> str:
    return f"{index:03d}"


def scenario_users(config: ExperimentConfig) -> list[str]:
    """Roster for the configured scenario.

    Users 0..shared-1 play both games; shared..users-1 play only the
    low-intensity game; users..2*users-shared-1 play only the high-intensity
    game. The 'both' scenario therefore covers exactly the shared block.
    """
    u, s = config.users_per_scenario, config.shared_users
    if config.scenario == "low":
        indices = range(0, u)
    elif config.scenario == "high":
        indices = list(range(0, s)) + list(range(u, 2 * u - s))
    else:
        indices = range(0, s)
    return [_user_id(i) for i in indices]


def _modes_for(config: ExperimentConfig) -> tuple[str, ...]:
    if config.scenario == "both":
        return ("low", "high")
    return (config.scenario,)


def user_trace(config: ExperimentConfig, user_id: str, mode: str):
    """The single session trace of one user in one mode, fully seeded."""
    index = int(user_id)
    profile = sample_profile(
        derive_seed(config.master_seed, _SEED_PROFILE, index, MODE_CODES[mode]), mode, user_id
    )
    spec = GenSpec(
        mode=mode,
        duration=config.trace_duration,
        sample_interval=config.sample_interval,
        screen=config.screen,
        seed=derive_seed(config.master_seed, _SEED_TRACE, index, MODE_CODES[mode]),
    )
    return generate_trace(profile, spec)


def build_scenario_windows(config: ExperimentConfig) -> dict[str, list[Window]]:
    """Generate, clean, featurize, and window every roster user's traces."""
    windows_by_user: dict[str, list[Window]] = {}
    for user_id in scenario_users(config):
        collected: list[Window] = []
        for mode in _modes_for(config):
            trace = user_trace(config, user_id, mode)
            cleaned = clean_trace(trace.events, intensity_tag=mode)
            frame = trace_to_frame(cleaned)
            collected.extend(make_windows(frame, config.window_length, config.window_stride))
        if not collected:
            raise DataError(f"user {user_id} produced no windows; trace too short")
        windows_by_user[user_id] = collected
    return windows_by_user


def run_fold(
    X_raw: np.ndarray,
    y: np.ndarray,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    model_name: str,
    config: ExperimentConfig,
    cell_seed: int,
):
    """Fit one model on one fold; returns (metrics, model, norm stats).

    Normalization statistics come from the train rows alone; the test tensor
    is transformed with them but never touches any fitted quantity.
    """
    stats = fit_norm_stats(X_raw[train_idx].reshape(-1, FEATURE_WIDTH))
    X_train = normalize_rows(X_raw[train_idx], stats)
    X_test = normalize_rows(X_raw[test_idx], stats)
    y_train, y_test = y[train_idx], y[test_idx]

    if model_name in ("gru", "lstm"):
        rnn_config = RnnConfig(
            cell=model_name,
            hidden=config.rnn_hidden,
            epochs=config.rnn_epochs,
            batch_size=config.rnn_batch,
            learning_rate=config.rnn_learning_rate,
            seed=cell_seed,
        )
        model = train_rnn(rnn_config, X_train, y_train, norm_stats=stats)
        train_scores = score_windows(model, X_train)
        test_scores = score_windows(model, X_test)
    elif model_name == "dt":
        tree_config = TreeConfig(max_depth=config.tree_max_depth, seed=cell_seed)
        model = fit_tree(tree_config, X_train.reshape(len(train_idx), -1), y_train)
        train_scores = tree_predict_matrix(model, X_train.reshape(len(train_idx), -1))
        test_scores = tree_predict_matrix(model, X_test.reshape(len(test_idx), -1))
    elif model_name == "rf":
        tree_config = TreeConfig(max_depth=config.tree_max_depth, seed=cell_seed)
        model = fit_forest(
            tree_config,
            X_train.reshape(len(train_idx), -1),
            y_train,
            n_trees=config.n_trees,
            seed=cell_seed,
        )
        train_scores = forest_predict_matrix(model, X_train.reshape(len(train_idx), -1))
        test_scores = forest_predict_matrix(model, X_test.reshape(len(test_idx), -1))
    else:
        raise DataError(f"unknown model {model_name!r}")

    metrics = {}
    for split, scores, labels in (
        ("train", train_scores, y_train),
        ("test", test_scores, y_test),
    ):
        metrics[split] = {
            "auc": roc_auc(scores, labels),
            "bal_acc": balanced_accuracy(scores, labels),
            "f1": f1_score(scores, labels),
        }
    return metrics, model, stats


def _user_arrays(
    config: ExperimentConfig,
    windows_by_user: dict[str, list[Window]],
    cache: dict,
    user_id: str,
):
    """Labeled tensor and fold plan for one target user, memoized."""
    if user_id not in cache:
        labeled = label_windows(windows_by_user, user_id)
        X_raw = np.stack([w.rows for w in labeled.windows]).astype(np.float64)
        plan = stratified_folds(
            labeled.labels,
            config.folds,
            seed=derive_seed(
                config.master_seed, _SEED_FOLDS, SCENARIO_CODES[config.scenario], int(user_id)
            ),
        )
        cache[user_id] = (X_raw, labeled.labels.astype(np.int64), plan)
    return cache[user_id]


def _execute_cell_fold(
    config: ExperimentConfig,
    windows_by_user: dict[str, list[Window]],
    cache: dict,
    user_id: str,
    model_name: str,
    fold: int,
) -> dict:
    X_raw, y, plan = _user_arrays(config, windows_by_user, cache, user_id)
    cell_seed = derive_seed(
        config.master_seed,
        _SEED_CELL,
        SCENARIO_CODES[config.scenario],
        int(user_id),
        MODEL_CODES[model_name],
        fold,
    )
    metrics, _, _ = run_fold(
        X_raw, y, plan.train_indices(fold), plan.test_indices(fold), model_name, config, cell_seed
    )
    return metrics


# Worker-process state: each worker regenerates the corpus deterministically
# from the config, so nothing scheduling-dependent crosses process borders.
_WORKER_STATE: dict = {}


def _worker_init(config_payload: dict) -> None:
    config = config_from_dict(config_payload)
    _WORKER_STATE["config"] = config
    _WORKER_STATE["windows"] = build_scenario_windows(config)
    _WORKER_STATE["cache"] = {}


def _worker_task(task: tuple[str, str, int]) -> dict:
    user_id, model_name, fold = task
    return _execute_cell_fold(
        _WORKER_STATE["config"],
        _WORKER_STATE["windows"],
        _WORKER_STATE["cache"],
        user_id,
        model_name,
        fold,
    )


@dataclass(frozen=True)
class ExperimentReport:
    scenario: str
    config: dict
    users: tuple[str, ...]
    models: tuple[str, ...]
    cells: dict  # cells[user][model][split][metric]
    averages: dict  # averages[model][split][metric]
    wall_clock_seconds: float = field(compare=False)


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentReport:
    """The full per-user, per-model, per-fold matrix for one scenario.

    `workers` is pure execution infrastructure: any value produces the same
    report, and it is not part of the experiment's identity or output.
    """
    started = time.perf_counter()
    roster = scenario_users(config)
    targets = list(config.target_users) if config.target_users is not None else list(roster)
    unknown = [u for u in targets if u not in roster]
    if unknown:
        raise DataError(f"target users {unknown} not in the scenario roster {roster}")

    tasks = [(u, m, f) for u in targets for m in config.models for f in range(config.folds)]
    if workers > 1:
        ctx = multiprocessing.get_context("spawn")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(config.to_dict(),)) as pool:
            results = pool.map(_worker_task, tasks, chunksize=1)
    else:
        windows_by_user = build_scenario_windows(config)
        cache: dict = {}
        results = [
            _execute_cell_fold(config, windows_by_user, cache, u, m, f) for (u, m, f) in tasks
        ]

    by_key = {task: result for task, result in zip(tasks, results)}
    cells: dict = {}
    for user_id in targets:
        cells[user_id] = {}
        for model_name in config.models:
            cell: dict = {split: {metric: 0.0 for metric in METRIC_NAMES} for split in SPLIT_NAMES}
            for fold in range(config.folds):
                fold_metrics = by_key[(user_id, model_name, fold)]
                for split in SPLIT_NAMES:
                    for metric in METRIC_NAMES:
                        cell[split][metric] += fold_metrics[split][metric]
            for split in SPLIT_NAMES:
                for metric in METRIC_NAMES:
                    cell[split][metric] /= config.folds
            cells[user_id][model_name] = cell

    averages: dict = {}
    for model_name in config.models:
        averages[model_name] = {}
        for split in SPLIT_NAMES:
            averages[model_name][split] = {}
            for metric in METRIC_NAMES:
                total = 0.0
                for user_id in targets:
                    total += cells[user_id][model_name][split][metric]
                averages[model_name][split][metric] = total / len(targets)

    return ExperimentReport(
        scenario=config.scenario,
        config=config.to_dict(),
        users=tuple(targets),
        models=tuple(config.models),
        cells=cells,
        averages=averages,
        wall_clock_seconds=time.perf_counter() - started,
    )


def report_to_dict(report: ExperimentReport) -> dict:
    """Canonical report structure; wall-clock deliberately not included."""
    return {
        "scenario": report.scenario,
        "config": report.config,
        "users": list(report.users),
        "models": list(report.models),
        "cells": report.cells,
        "averages": report.averages,
    }


def report_to_json_bytes(report: ExperimentReport) -> bytes:
    return json.dumps(report_to_dict(report), sort_keys=True, separators=(",", ":")).encode("utf-8")


def report_from_json_bytes(data: bytes) -> ExperimentReport:
    payload = json.loads(data.decode("utf-8"))
    return ExperimentReport(
        scenario=payload["scenario"],
        config=payload["config"],
        users=tuple(payload["users"]),
        models=tuple(payload["models"]),
        cells=payload["cells"],
        averages=payload["averages"],
        wall_clock_seconds=0.0,
    )


def report_csv_lines(report: ExperimentReport) -> list[str]:
    """One row per (user, model, metric, split), then average rows."""
    lines = ["user,model,metric,split,value"]
    for user_id in report.users:
        for model_name in report.models:
            for metric in METRIC_NAMES:
                for split in SPLIT_NAMES:
                    value = report.cells[user_id][model_name][split][metric]
                    lines.append(f"{user_id},{model_name},{metric},{split},{value!r}")
    for model_name in report.models:
        for metric in METRIC_NAMES:
            for split in SPLIT_NAMES:
                value = report.averages[model_name][split][metric]
                lines.append(f"average,{model_name},{metric},{split},{value!r}")
    return lines


def emit_report(report: ExperimentReport, fmt: str, path) -> None:
    if not report.users or not report.models:
        raise DataError("refusing to emit an empty report")
    if fmt == "json":
        with open(path, "wb") as fh:
            fh.write(report_to_json_bytes(report))
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(report_csv_lines(report)) + "\n")
    else:
        raise DataError(f"unknown report format {fmt!r}")
