"""Command-line entry point.

Subcommands: simulate, extract, train, eval, experiment, auth-stream,
report. Every subcommand accepts --config pointing at a JSON file whose keys
equal the long flag names (dashes as underscores); explicit flags override
file values.

Exit codes: 0 success, 2 usage error, 3 data/parse error (including file
I/O), 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DataError, MousetrustError, NumericError
from .events import clean_trace, parse_event_line, read_events_csv, write_events_csv
from .experiment import (
    ExperimentConfig,
    MODEL_ORDER,
    emit_report,
    run_experiment,
    user_trace,
)
from .forest import (
    RandomForest,
    TreeConfig,
    fit_forest,
    fit_tree,
    forest_from_dict,
    forest_predict_matrix,
    forest_to_dict,
    tree_from_dict,
    tree_predict_matrix,
    tree_to_dict,
)
from .kinematics import (
    FEATURE_WIDTH,
    NormStats,
    fit_norm_stats,
    normalize_rows,
    trace_to_frame,
    write_frame_csv,
)
from .metrics import evaluate_scores, report_from_dict, report_to_dict, write_roc_csv
from .rnn import RnnConfig, rnn_from_dict, rnn_to_dict, score_windows, train_rnn
from .stream import SessionPolicy, new_session, update_to_dict
from .synthgen import user_of
from .windowing import Window, label_windows, make_windows

BUNDLE_FORMAT = "mousetrust-model-bundle"
BUNDLE_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def save_model_bundle(path, kind: str, model, stats: NormStats, window_length: int) -> None:
    """One self-contained JSON artifact: model + normalization + window size."""
    if kind in ("gru", "lstm"):
        payload = rnn_to_dict(model)
    elif kind == "dt":
        payload = tree_to_dict(model)
    elif kind == "rf":
        payload = forest_to_dict(model)
    else:
        raise DataError(f"unknown model kind {kind!r}")
    bundle = {
        "format": BUNDLE_FORMAT,
        "version": BUNDLE_VERSION,
        "kind": kind,
        "window_length": window_length,
        "norm_stats": {
            "mean": [float(v) for v in stats.mean],
            "std": [float(v) for v in stats.std],
        },
        "payload": payload,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(bundle, fh)


def load_model_bundle(path):
    """Returns (kind, model, stats, window_length)."""
    with open(path, "r", encoding="utf-8") as fh:
        bundle = json.load(fh)
    if bundle.get("format") != BUNDLE_FORMAT:
        raise DataError(f"{path}: not a model bundle")
    if bundle.get("version") != BUNDLE_VERSION:
        raise DataError(f"{path}: unsupported bundle version {bundle.get('version')}")
    kind = bundle["kind"]
    if kind in ("gru", "lstm"):
        model = rnn_from_dict(bundle["payload"])
    elif kind == "dt":
        model = tree_from_dict(bundle["payload"])
    elif kind == "rf":
        model = forest_from_dict(bundle["payload"])
    else:
        raise DataError(f"{path}: unknown model kind {kind!r}")
    stats = NormStats(
        np.array(bundle["norm_stats"]["mean"], dtype=np.float64),
        np.array(bundle["norm_stats"]["std"], dtype=np.float64),
    )
    return kind, model, stats, int(bundle["window_length"])


def load_corpus_windows(
    corpus_dir, window_length: int, stride: int
) -> dict[str, list[Window]]:
    """Windows per user from every Table-format CSV in a directory."""
    directory = Path(corpus_dir)
    paths = sorted(directory.glob("*.csv"))
    if not paths:
        raise DataError(f"no .csv files found in {directory}")
    windows_by_user: dict[str, list[Window]] = {}
    for path in paths:
        events = read_events_csv(path)
        trace = clean_trace(events)
        frame = trace_to_frame(trace)
        user = user_of(trace.user_session_id)
        windows_by_user.setdefault(user, []).extend(
            make_windows(frame, window_length, stride)
        )
    empty = [u for u, ws in windows_by_user.items() if not ws]
    if empty:
        raise DataError(f"users {empty} have no full windows at length {window_length}")
    return windows_by_user


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Flag > config-file > default, per option name."""
    values = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        with open(config_path, "r", encoding="utf-8") as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(defaults)
        if unknown:
            raise DataError(f"unknown config keys {sorted(unknown)}; valid: {sorted(defaults)}")
        values.update(file_values)
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value
    return values


def _add_config_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with the same keys as the long flags")


def _cmd_simulate(args: argparse.Namespace) -> int:
    defaults = {
        "mode": "low",
        "users": 3,
        "seed": 0,
        "duration": 900.0,
        "interval": 0.01,
        "out": None,
    }
    v = _merged(args, defaults)
    if v["out"] is None:
        raise DataError("simulate needs --out DIRECTORY")
    if v["mode"] not in ("low", "high"):
        raise DataError("mode must be low or high")
    out = Path(v["out"])
    out.mkdir(parents=True, exist_ok=True)
    config = ExperimentConfig(
        scenario=v["mode"],
        users_per_scenario=int(v["users"]),
        shared_users=0,
        master_seed=int(v["seed"]),
        trace_duration=float(v["duration"]),
        sample_interval=float(v["interval"]),
    )
    written = []
    for i in range(int(v["users"])):
        trace = user_trace(config, f"{i:03d}", v["mode"])
        path = out / f"{trace.user_session_id}.csv"
        write_events_csv(path, trace.events)
        written.append(str(path))
    print(json.dumps({"written": written}))
    return EXIT_OK


def _cmd_extract(args: argparse.Namespace) -> int:
    defaults = {"input": None, "output": None}
    v = _merged(args, defaults)
    if not v["input"] or not v["output"]:
        raise DataError("extract needs --input EVENTS_CSV and --output FRAME_CSV")
    events = read_events_csv(v["input"])
    frame = trace_to_frame(clean_trace(events))
    write_frame_csv(v["output"], frame)
    print(json.dumps({"rows": len(frame), "output": str(v["output"])}))
    return EXIT_OK


def _train_model(kind: str, X_norm: np.ndarray, y: np.ndarray, v: dict, stats: NormStats):
    if kind in ("gru", "lstm"):
        config = RnnConfig(
            cell=kind,
            hidden=int(v["hidden"]),
            epochs=int(v["epochs"]),
            batch_size=int(v["batch_size"]),
            learning_rate=float(v["learning_rate"]),
            seed=int(v["seed"]),
        )
        return train_rnn(config, X_norm, y, norm_stats=stats)
    tree_config = TreeConfig(max_depth=v["max_depth"], seed=int(v["seed"]))
    flat = X_norm.reshape(X_norm.shape[0], -1)
    if kind == "dt":
        return fit_tree(tree_config, flat, y)
    return fit_forest(tree_config, flat, y, n_trees=int(v["trees"]), seed=int(v["seed"]))


def _cmd_train(args: argparse.Namespace) -> int:
    defaults = {
        "corpus": None,
        "target": None,
        "model": "gru",
        "output": None,
        "window": 40,
        "stride": 40,
        "seed": 0,
        "hidden": 32,
        "epochs": 30,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "trees": 100,
        "max_depth": 12,
    }
    v = _merged(args, defaults)
    for required in ("corpus", "target", "output"):
        if not v[required]:
            raise DataError(f"train needs --{required}")
    if v["model"] not in MODEL_ORDER:
        raise DataError(f"model must be one of {MODEL_ORDER}")
    windows_by_user = load_corpus_windows(v["corpus"], int(v["window"]), int(v["stride"]))
    labeled = label_windows(windows_by_user, v["target"])
    X_raw = np.stack([w.rows for w in labeled.windows]).astype(np.float64)
    stats = fit_norm_stats(X_raw.reshape(-1, FEATURE_WIDTH))
    X_norm = normalize_rows(X_raw, stats)
    model = _train_model(v["model"], X_norm, labeled.labels.astype(np.float64), v, stats)
    save_model_bundle(v["output"], v["model"], model, stats, int(v["window"]))
    counts = labeled.class_counts
    print(
        json.dumps(
            {
                "model": v["model"],
                "windows": len(labeled),
                "authentic": counts[0],
                "intruder": counts[1],
                "output": str(v["output"]),
            }
        )
    )
    return EXIT_OK


def _score_with_bundle(kind: str, model, X_norm: np.ndarray) -> np.ndarray:
    if kind in ("gru", "lstm"):
        return score_windows(model, X_norm)
    flat = X_norm.reshape(X_norm.shape[0], -1)
    if kind == "dt":
        return tree_predict_matrix(model, flat)
    return forest_predict_matrix(model, flat)


def _cmd_eval(args: argparse.Namespace) -> int:
    defaults = {
        "model": None,
        "corpus": None,
        "target": None,
        "output": None,
        "stride": 40,
        "scenario": "both",
    }
    v = _merged(args, defaults)
    for required in ("model", "corpus", "target", "output"):
        if not v[required]:
            raise DataError(f"eval needs --{required}")
    kind, model, stats, window_length = load_model_bundle(v["model"])
    windows_by_user = load_corpus_windows(v["corpus"], window_length, int(v["stride"]))
    labeled = label_windows(windows_by_user, v["target"])
    X_raw = np.stack([w.rows for w in labeled.windows]).astype(np.float64)
    scores = _score_with_bundle(kind, model, normalize_rows(X_raw, stats))
    report = evaluate_scores(scores, labeled.labels, kind, v["target"], v["scenario"])
    with open(v["output"], "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh)
    print(json.dumps({"auc": report.auc, "f1": report.f1, "bal_acc": report.bal_acc}))
    return EXIT_OK


def _cmd_experiment(args: argparse.Namespace) -> int:
    defaults = {
        "scenario": "both",
        "users": 15,
        "shared": 11,
        "targets": None,
        "models": ",".join(MODEL_ORDER),
        "window": 40,
        "stride": 40,
        "folds": 5,
        "seed": 0,
        "duration": 900.0,
        "interval": 0.01,
        "rnn_hidden": 32,
        "rnn_epochs": 30,
        "rnn_batch": 32,
        "rnn_learning_rate": 1e-3,
        "trees": 100,
        "max_depth": 12,
        "workers": 1,
        "json_out": None,
        "csv_out": None,
    }
    v = _merged(args, defaults)
    targets = None
    if v["targets"]:
        raw = v["targets"] if isinstance(v["targets"], (list, tuple)) else str(v["targets"]).split(",")
        targets = tuple(t.strip() for t in raw if t.strip())
    models = v["models"] if isinstance(v["models"], (list, tuple)) else str(v["models"]).split(",")
    config = ExperimentConfig(
        scenario=v["scenario"],
        users_per_scenario=int(v["users"]),
        shared_users=int(v["shared"]),
        target_users=targets,
        models=tuple(m.strip() for m in models if m.strip()),
        window_length=int(v["window"]),
        window_stride=int(v["stride"]),
        folds=int(v["folds"]),
        master_seed=int(v["seed"]),
        trace_duration=float(v["duration"]),
        sample_interval=float(v["interval"]),
        rnn_hidden=int(v["rnn_hidden"]),
        rnn_epochs=int(v["rnn_epochs"]),
        rnn_batch=int(v["rnn_batch"]),
        rnn_learning_rate=float(v["rnn_learning_rate"]),
        n_trees=int(v["trees"]),
        tree_max_depth=v["max_depth"],
    )
    report = run_experiment(config, workers=int(v["workers"]))
    if v["json_out"]:
        emit_report(report, "json", v["json_out"])
    if v["csv_out"]:
        emit_report(report, "csv", v["csv_out"])
    summary = {
        "scenario": report.scenario,
        "users": list(report.users),
        "wall_clock_seconds": report.wall_clock_seconds,
        "averages": report.averages,
    }
    print(json.dumps(summary))
    return EXIT_OK


def _cmd_auth_stream(args: argparse.Namespace) -> int:
    defaults = {
        "model": None,
        "stride": 10,
        "alpha": 0.3,
        "intruder_threshold": 0.7,
        "recovery_threshold": 0.5,
    }
    v = _merged(args, defaults)
    if not v["model"]:
        raise DataError("auth-stream needs --model BUNDLE_JSON")
    kind, model, stats, window_length = load_model_bundle(v["model"])
    policy = SessionPolicy(
        window_length=window_length,
        stride=int(v["stride"]),
        alpha=float(v["alpha"]),
        intruder_threshold=float(v["intruder_threshold"]),
        recovery_threshold=float(v["recovery_threshold"]),
    )
    session = new_session(model, stats, policy)
    for line_number, line in enumerate(sys.stdin, start=1):
        event = parse_event_line(line, line_number)
        if event is None:
            continue
        update = session.push_event(event)
        if update is not None:
            print(json.dumps(update_to_dict(update)), flush=True)
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    defaults = {"input": None, "output": None}
    v = _merged(args, defaults)
    if not v["input"] or not v["output"]:
        raise DataError("report needs --input EVAL_JSON and --output ROC_CSV")
    with open(v["input"], "r", encoding="utf-8") as fh:
        report = report_from_dict(json.load(fh))
    write_roc_csv(v["output"], report)
    print(json.dumps({"points": len(report.roc_points), "output": str(v["output"])}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mousetrust",
        description="Continuous authentication from mouse dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate synthetic trace corpora")
    _add_config_flag(p)
    p.add_argument("--mode", choices=("low", "high"))
    p.add_argument("--users", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--interval", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("extract", help="events CSV to feature-frame CSV")
    _add_config_flag(p)
    p.add_argument("--input")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="fit one model on a corpus and serialize it")
    _add_config_flag(p)
    p.add_argument("--corpus")
    p.add_argument("--target")
    p.add_argument("--model", choices=MODEL_ORDER)
    p.add_argument("--output")
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--trees", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="score a serialized model on a corpus")
    _add_config_flag(p)
    p.add_argument("--model")
    p.add_argument("--corpus")
    p.add_argument("--target")
    p.add_argument("--output")
    p.add_argument("--stride", type=int)
    p.add_argument("--scenario", choices=("low", "high", "both"))
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("experiment", help="full cross-validated model matrix")
    _add_config_flag(p)
    p.add_argument("--scenario", choices=("low", "high", "both"))
    p.add_argument("--users", type=int)
    p.add_argument("--shared", type=int)
    p.add_argument("--targets", help="comma-separated user ids; default all")
    p.add_argument("--models", help="comma-separated subset of gru,lstm,dt,rf")
    p.add_argument("--window", type=int)
    p.add_argument("--stride", type=int)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--interval", type=float)
    p.add_argument("--rnn-hidden", dest="rnn_hidden", type=int)
    p.add_argument("--rnn-epochs", dest="rnn_epochs", type=int)
    p.add_argument("--rnn-batch", dest="rnn_batch", type=int)
    p.add_argument("--rnn-learning-rate", dest="rnn_learning_rate", type=float)
    p.add_argument("--trees", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--json-out", dest="json_out")
    p.add_argument("--csv-out", dest="csv_out")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("auth-stream", help="stream events from stdin to decisions")
    _add_config_flag(p)
    p.add_argument("--model")
    p.add_argument("--stride", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--intruder-threshold", dest="intruder_threshold", type=float)
    p.add_argument("--recovery-threshold", dest="recovery_threshold", type=float)
    p.set_defaults(func=_cmd_auth_stream)

    p = sub.add_parser("report", help="evaluation JSON to ROC points CSV")
    _add_config_flag(p)
    p.add_argument("--input")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except MousetrustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
