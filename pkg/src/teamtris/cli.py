"""Command-line entry points: serve, headless, replay, baseline."""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import PRESET_NAMES, load_config, load_preset
from .errors import TeamtrisError


def _resolve_config(value: str):
    if value in PRESET_NAMES:
        return load_preset(value)
    return load_config(value)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="teamtris",
        description="Multi-board Tetris platform with human-shaped agent learning.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the WebSocket session server")
    p_serve.add_argument("--config", required=True,
                         help=f"config file or preset name {PRESET_NAMES}")
    p_serve.add_argument("--port", type=int, default=8000,
                         help="listen port (the PORT env var overrides this)")
    p_serve.add_argument("--log-dir", default="logs",
                         help="event log directory (the LOG_DIR env var overrides this)")

    p_headless = sub.add_parser(
        "headless", help="train with synthetic oracle trainers, no UI")
    p_headless.add_argument("--config", required=True)
    p_headless.add_argument("--episodes", type=int, default=None,
                            help="feedback events per guided agent "
                                 "(default: config harness.feedbackTargetPerAgent)")
    p_headless.add_argument("--seed", type=int, required=True)
    p_headless.add_argument("--out", required=True, help="metrics CSV path")

    p_replay = sub.add_parser("replay", help="inspect or verify an event log")
    p_replay.add_argument("--log", required=True, help="JSONL event log path")
    p_replay.add_argument("--verify", action="store_true",
                          help="re-run the session and demand a bit-identical stream")

    p_baseline = sub.add_parser(
        "baseline", help="uniform-random placement control statistics")
    p_baseline.add_argument("--config", required=True)
    p_baseline.add_argument("--games", type=int, default=50)
    p_baseline.add_argument("--seed", type=int, required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except TeamtrisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "serve":
        from .server import serve

        config = _resolve_config(args.config)
        port = int(os.environ.get("PORT", args.port))
        log_dir = os.environ.get("LOG_DIR", args.log_dir)
        print(f"serving session {config.session_id!r} on port {port}, "
              f"logs in {log_dir}")
        serve(config, port, log_dir)
        return 0

    if args.command == "headless":
        from .harness import run_experiment

        config = _resolve_config(args.config)
        report = run_experiment(config, args.episodes, args.seed, args.out)
        print(f"config digest: {report.config_digest}")
        print(f"log: {report.log_path}")
        print(f"csv: {report.csv_path}")
        for row in report.rows:
            print(f"  {row.agent_id} @{row.checkpoint}: "
                  f"median={row.median_lines:.1f} mean={row.mean_lines:.2f} "
                  f"agreement={row.agreement:.3f}")
        print(f"  baseline-random: median={report.baseline.median:.1f} "
              f"mean={report.baseline.mean:.2f}")
        print(f"wall time: {report.wall_time_sec:.1f}s")
        return 0

    if args.command == "replay":
        from .eventlog import read_log
        from .replay import replay_verify

        if args.verify:
            report = replay_verify(args.log)
            if report.ok:
                print("ok")
                return 0
            print(f"mismatch at seq {report.mismatch_seq} "
                  f"({report.mismatch_field}): {report.detail[:200]}")
            return 1
        events = read_log(args.log)
        kinds = {}
        for ev in events:
            kinds[ev.kind] = kinds.get(ev.kind, 0) + 1
        print(json.dumps({"events": len(events),
                          "finalTick": events[-1].tick if events else 0,
                          "kinds": kinds}, indent=2, sort_keys=True))
        return 0

    if args.command == "baseline":
        from .harness import baseline_random

        config = _resolve_config(args.config)
        stats = baseline_random(config, args.games, args.seed)
        print(json.dumps({"games": args.games, "seed": args.seed,
                          "medianLines": stats.median,
                          "meanLines": stats.mean}, sort_keys=True))
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
