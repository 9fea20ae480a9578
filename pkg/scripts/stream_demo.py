#!/usr/bin/env python3
"""Continuous-authentication walkthrough on a spliced live session.

Trains a verifier for one synthetic target user against a second user,
then replays a session whose first half is the genuine target and whose
second half is an unseen third user. Prints every trust-state change the
stream emits, which should flip from authentic to intruder shortly after
the handover.
"""

import argparse
import dataclasses
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from mousetrust.forest import TreeConfig, fit_forest
from mousetrust.kinematics import fit_norm_stats, normalize_rows, trace_to_frame
from mousetrust.rnn import RnnConfig, train_rnn
from mousetrust.stream import SessionPolicy, new_session
from mousetrust.synthgen import GenSpec, generate_trace, sample_profile
from mousetrust.windowing import make_windows


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", choices=["gru", "rf"], default="gru")
    parser.add_argument("--mode", choices=["low", "high"], default="high")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--train-duration", type=float, default=300.0)
    parser.add_argument("--live-duration", type=float, default=120.0)
    parser.add_argument("--window", type=int, default=40)
    parser.add_argument("--stride", type=int, default=10)
    return parser.parse_args(argv)


def trace_for(profile_seed: int, session_seed: int, mode: str, user_id: str, duration: float):
    # profile seed fixes who the user is; session seed varies what they do
    profile = sample_profile(profile_seed, mode, user_id=user_id)
    return generate_trace(profile, GenSpec(mode=mode, duration=duration, seed=session_seed))


def main(argv=None) -> int:
    args = parse_args(argv)
    base = args.seed * 100

    target = trace_for(base + 0, base + 10, args.mode, "target", args.train_duration)
    others = [
        trace_for(base + i, base + 10 + i, args.mode, f"user{i}", args.train_duration)
        for i in (1, 2, 3)
    ]
    windows = [w for t in (target, *others) for w in make_windows(trace_to_frame(t), args.window)]
    split = len(make_windows(trace_to_frame(target), args.window))
    y = np.array([0] * split + [1] * (len(windows) - split), dtype=np.int64)
    X_raw = np.stack([w.rows for w in windows]).astype(np.float64)
    stats = fit_norm_stats(X_raw.reshape(-1, X_raw.shape[-1]))
    X = normalize_rows(X_raw, stats)

    if args.model == "gru":
        model = train_rnn(
            RnnConfig(cell="gru", hidden=16, epochs=8, batch_size=64,
                      learning_rate=0.02, seed=args.seed, class_weighting="balanced"),
            X, y, norm_stats=stats,
        )
    else:
        model = fit_forest(TreeConfig(max_depth=None, seed=args.seed),
                           X.reshape(len(y), -1), y, n_trees=40, seed=args.seed)
    print(f"trained {args.model} on {len(y)} windows from 4 users ({args.mode} mode)")

    # Live session: genuine half, then an unseen user's half with the clock
    # continued so timestamps stay strictly increasing.
    genuine = trace_for(base + 0, base + 20, args.mode, "target", args.live_duration / 2)
    intruder = trace_for(base + 4, base + 21, args.mode, "smith", args.live_duration / 2)
    handover = genuine.events[-1].timestamp + 0.05
    live = list(genuine.events) + [
        dataclasses.replace(e, user_session_id=genuine.events[0].user_session_id,
                            timestamp=e.timestamp + handover)
        for e in intruder.events
    ]

    session = new_session(model, stats, SessionPolicy(
        window_length=args.window, stride=args.stride))
    last_decision = None
    flagged_at = None
    halves = {"genuine": {"authentic": 0, "suspicious": 0, "intruder": 0},
              "intruder": {"authentic": 0, "suspicious": 0, "intruder": 0}}
    for event in live:
        update = session.push_event(event)
        if update is None:
            continue
        half = "intruder" if update.timestamp > handover else "genuine"
        halves[half][update.decision] += 1
        if update.decision == "intruder" and flagged_at is None and half == "intruder":
            flagged_at = update.timestamp
        if update.decision != last_decision:
            marker = "<-- handover passed" if update.timestamp > handover else ""
            print(f"  t={update.timestamp:7.2f}s  score={update.window_score:.3f}  "
                  f"smoothed={update.smoothed_score:.3f}  {update.decision:<10} {marker}")
            last_decision = update.decision

    for half, counts in halves.items():
        total = sum(counts.values())
        print(f"{half:>8} half: {total} windows  "
              f"(authentic {counts['authentic']}, suspicious {counts['suspicious']}, "
              f"intruder {counts['intruder']})")
    print(f"handover at t={handover:.2f}s", end="")
    if flagged_at is None:
        print("; intruder never flagged after the handover")
        return 1
    print(f"; flagged intruder at t={flagged_at:.2f}s "
          f"({flagged_at - handover:.2f}s after handover)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
