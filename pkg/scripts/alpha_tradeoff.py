#!/usr/bin/env python3
"""Trace the average-bitrate vs rebuffering tradeoff across safety margins.

Replays a synthetic corpus once per predictor, then re-picks bitrates for
each margin from the recorded (prediction, actual) pairs. Better predictors
push the curve toward the top-right: higher bitrate at the same good ratio.

Usage: python scripts/alpha_tradeoff.py [--sessions 8000] [--seed 19]
"""

import argparse
import sys

from sessioncast.bitrate import DEFAULT_LADDER, ideal_bitrate, sweep_alpha
from sessioncast.learner import LearnerConfig
from sessioncast.replay import (
    ReplayConfig,
    predictions_by_predictor,
    replay_evaluate,
)

from planted_experiment import SCHEMA, build_corpus

ALPHAS = [round(0.1 * i, 1) for i in range(1, 16)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sessions", type=int, default=8000)
    parser.add_argument("--seed", type=int, default=19)
    args = parser.parse_args(argv)

    records = build_corpus(args.sessions, args.seed)
    config = ReplayConfig(
        predictors=("adaptive", "last_sample", "global"),
        learner=LearnerConfig(estimation_features=("ISP", "Target")),
        warmup=36000, seed=args.seed, include_sessions=True)
    report = replay_evaluate(records, SCHEMA, config)
    pairs = predictions_by_predictor(report)

    actuals = [actual for _, actual, _ in report.session_rows]
    ideal_avg = sum(ideal_bitrate(a) for a in actuals) / len(actuals)
    print(f"{len(actuals)} scored sessions; ideal AvgBitrate {ideal_avg:.2f} "
          f"at GoodRatio 1.000\n")
    print(f"{'alpha':>6}", end="")
    for name in config.predictors:
        print(f"{name + ' avg':>16}{name + ' good':>16}", end="")
    print()
    rows = {name: sweep_alpha(pairs[name], DEFAULT_LADDER, ALPHAS)
            for name in config.predictors}
    for i, alpha in enumerate(ALPHAS):
        print(f"{alpha:>6.1f}", end="")
        for name in config.predictors:
            _, avg, good = rows[name][i]
            print(f"{avg:>16.2f}{good:>16.3f}", end="")
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
