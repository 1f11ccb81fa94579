#!/usr/bin/env python3
"""Train the default team across several seeds and tabulate the learning
curve (median lines and oracle agreement per feedback checkpoint).

Usage: python scripts/run_learning_curve.py [--seeds 1 2 3] [--episodes 300]
"""
import argparse
from pathlib import Path

from teamtris.config import load_preset
from teamtris.harness import run_experiment


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--preset", default="base")
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--episodes", type=int, default=300)
    parser.add_argument("--out-dir", default="runs/learning_curve")
    args = parser.parse_args()

    config = load_preset(args.preset)
    out_dir = Path(args.out_dir)
    print(f"preset={args.preset} episodes={args.episodes} seeds={args.seeds}")
    for seed in args.seeds:
        report = run_experiment(config, args.episodes, seed,
                                out_dir / f"seed{seed}.csv")
        print(f"\nseed {seed} (digest {report.config_digest}, "
              f"{report.wall_time_sec:.0f}s):")
        print(f"  {'agent':<10} {'ckpt':>6} {'median':>7} {'mean':>7} {'agree':>6}")
        for row in report.rows:
            print(f"  {row.agent_id:<10} {str(row.checkpoint):>6} "
                  f"{row.median_lines:>7.1f} {row.mean_lines:>7.2f} "
                  f"{row.agreement:>6.3f}")
        print(f"  baseline-random median={report.baseline.median:.1f} "
              f"mean={report.baseline.mean:.2f}")


if __name__ == "__main__":
    main()
