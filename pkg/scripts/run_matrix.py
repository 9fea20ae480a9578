#!/usr/bin/env python3
"""Run the full scenario-by-model experiment matrix and write reports.

Defaults reproduce the calibrated release-gate run (5 users per scenario,
3 folds, 900 s traces at 20 Hz); scale the roster or fold count up with
flags when more compute is available. Each scenario writes one JSON and
one CSV report, plus a console summary of the mean test AUCs.
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mousetrust.experiment import (
    ExperimentConfig,
    emit_report,
    run_experiment,
)


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--scenarios", nargs="+", default=["low", "high", "both"],
                        choices=["low", "high", "both"])
    parser.add_argument("--users", type=int, default=5)
    parser.add_argument("--shared-users", type=int, default=5)
    parser.add_argument("--folds", type=int, default=3)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--duration", type=float, default=900.0)
    parser.add_argument("--interval", type=float, default=0.05)
    parser.add_argument("--hidden", type=int, default=16)
    parser.add_argument("--epochs", type=int, default=8)
    parser.add_argument("--trees", type=int, default=40)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--out-dir", type=pathlib.Path, default=pathlib.Path("reports"))
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for scenario in args.scenarios:
        config = ExperimentConfig(
            scenario=scenario,
            users_per_scenario=args.users,
            shared_users=args.shared_users,
            folds=args.folds,
            master_seed=args.seed,
            trace_duration=args.duration,
            sample_interval=args.interval,
            rnn_hidden=args.hidden,
            rnn_epochs=args.epochs,
            rnn_batch=64,
            rnn_learning_rate=0.02,
            n_trees=args.trees,
            tree_max_depth=None,
        )
        report = run_experiment(config, workers=args.workers)
        emit_report(report, "json", args.out_dir / f"{scenario}.json")
        emit_report(report, "csv", args.out_dir / f"{scenario}.csv")
        cells = "  ".join(
            f"{m}={report.averages[m]['test']['auc']:.4f}" for m in report.models
        )
        print(f"{scenario:>4}: {cells}  ({report.wall_clock_seconds:.1f}s)")
    print(f"reports written to {args.out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
