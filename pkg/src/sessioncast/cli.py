"""Command-line front end: ingest, synth, drop, evaluate, sweep-alpha."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .dataio import ingest_csv, parse_kv_file, random_drop, write_csv
from .replay import (
    ReplayConfig,
    config_from_kv,
    emit_report,
    predictions_by_predictor,
    replay_evaluate,
)
from .bitrate import sweep_alpha
from .synth import generate_synthetic, spec_from_kv


def _cmd_ingest(args) -> int:
    result = ingest_csv(args.data)
    ts = [r.timestamp for r in result.records]
    stats = {
        "records": len(result.records),
        "skipped": result.skipped,
        "features": list(result.schema.names),
        "time_range": [min(ts), max(ts)] if ts else None,
    }
    print(json.dumps(stats, sort_keys=True, indent=2))
    return 0


def _cmd_synth(args) -> int:
    spec = spec_from_kv(parse_kv_file(args.spec))
    records = generate_synthetic(spec)
    write_csv(records, spec.schema, args.out)
    print(f"wrote {len(records)} sessions to {args.out}")
    return 0


def _cmd_drop(args) -> int:
    result = ingest_csv(args.data)
    kept = random_drop(result.records, args.rate, args.seed)
    write_csv(kept, result.schema, args.out)
    print(f"kept {len(kept)} of {len(result.records)} sessions "
          f"(rate={args.rate}, seed={args.seed})")
    return 0


def _load_config(path) -> ReplayConfig:
    if path is None:
        return ReplayConfig()
    return config_from_kv(parse_kv_file(path))


def _cmd_evaluate(args) -> int:
    config = _load_config(args.config)
    result = ingest_csv(args.data)
    report = replay_evaluate(result.records, result.schema, config)
    emit_report(report, args.out)
    summary = report.to_dict()["predictors"]
    for name in config.predictors:
        row = summary.get(name)
        if row is None:
            continue
        p50 = row["error_percentiles"]["p50"] if row["error_percentiles"] else None
        p50_text = f"{p50:.4f}" if p50 is not None else "n/a"
        print(f"{name}: scored={row['n_scored']} coverage={row['coverage']:.3f} "
              f"median_error={p50_text}")
    print(f"report written to {args.out}")
    return 0


def _cmd_sweep_alpha(args) -> int:
    config = _load_config(args.config)
    if not config.include_sessions:
        config = dataclasses.replace(config, include_sessions=True)
    result = ingest_csv(args.data)
    report = replay_evaluate(result.records, result.schema, config)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    rows = {}
    for name, pairs in sorted(predictions_by_predictor(report).items()):
        rows[name] = [
            {"alpha": alpha, "avg_bitrate": avg, "good_ratio": good}
            for alpha, avg, good in sweep_alpha(pairs, config.ladder, alphas)
        ]
    text = json.dumps(rows, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"sweep written to {args.out}")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sessioncast",
        description="Cross-session throughput prediction and bitrate evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a session CSV and print stats")
    p.add_argument("data", help="session CSV path")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic corpus from a spec file")
    p.add_argument("--spec", required=True, help="flat key/value corpus spec")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("drop", help="randomly downsample a session CSV")
    p.add_argument("--rate", type=float, required=True, help="drop probability in [0,1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_drop)

    p = sub.add_parser("evaluate", help="chronological replay evaluation")
    p.add_argument("--config", help="flat key/value config file (defaults used if omitted)")
    p.add_argument("--data", required=True, help="session CSV path")
    p.add_argument("--out", required=True, help="report output path (JSON)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep-alpha", help="bitrate/rebuffering tradeoff across safety margins")
    p.add_argument("--config", help="flat key/value config file")
    p.add_argument("--data", required=True, help="session CSV path")
    p.add_argument("--alphas", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0,1.1,1.2,1.3,1.4,1.5")
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=_cmd_sweep_alpha)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, LookupError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
