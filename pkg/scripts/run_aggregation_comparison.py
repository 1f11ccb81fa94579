#!/usr/bin/env python3
"""Compare the two dependent-agent aggregation modes (sample union vs
parameter consensus) on the default team shape.

Usage: python scripts/run_aggregation_comparison.py [--seeds 1 2 3]
"""
import argparse
import dataclasses

import numpy as np

from teamtris.config import load_preset
from teamtris.harness import _model_from_weights, evaluate_with_oracle, train_session
from teamtris.heuristics import default_oracle_weights
from teamtris.team import TeamTopology


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    parser.add_argument("--episodes", type=int, default=300)
    args = parser.parse_args()

    base = load_preset("base")
    oracle_w = default_oracle_weights()
    for mode in ("sampleUnion", "parameterConsensus"):
        topo = base.topology
        config = dataclasses.replace(
            base,
            topology=TeamTopology(topo.players, topo.agents, topo.guidance,
                                  topo.dependency, mode),
            harness=dataclasses.replace(
                base.harness, feedback_target_per_agent=args.episodes,
                checkpoint_feedback_counts=(0,)))
        medians = []
        for seed in args.seeds:
            run_cfg = dataclasses.replace(config, master_seed=seed,
                                          session_id=f"agg-{mode}-{seed}")
            result = train_session(run_cfg)
            model = _model_from_weights(run_cfg,
                                        result.snapshots["agent5"]["final"])
            stats, agree = evaluate_with_oracle(model, oracle_w, run_cfg,
                                                config.harness.eval_games, seed)
            medians.append(stats.median)
            print(f"{mode:<20} seed {seed}: dependent median={stats.median:.1f} "
                  f"mean={stats.mean:.2f} agreement={agree:.3f}")
        print(f"{mode:<20} overall median of medians: {np.median(medians):.1f}\n")


if __name__ == "__main__":
    main()
