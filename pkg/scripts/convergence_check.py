#!/usr/bin/env python3
"""Compare training budgets on the configured planning problem.

Retrains the planner from scratch at several episode counts against one
fitted surrogate and prints, for each budget, the tail of the learning curve
and the scenario-1 build-out. The answer has converged when more episodes
stop moving either one.
"""

import argparse
import csv
import time
from pathlib import Path

import numpy as np

from storeplan.config import config_hash, load_config
from storeplan.mdp import MdpEnv
from storeplan.metamodel import load_forest
from storeplan.policy import default_scenarios, extract_policy
from storeplan.qlearn import DecaySchedule, train

REPO = Path(__file__).resolve().parent.parent


def describe(report) -> str:
    steps = [f"{s.unit_name}+{s.level_kwh:g}@{s.period}"
             for s in report.steps if not s.action.is_noop]
    return " then ".join(steps) if steps else "never invest"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path,
                    default=REPO / "configs" / "case_study.json")
    ap.add_argument("--forest", type=Path, required=True,
                    help="forest.json from a run with the same config")
    ap.add_argument("--budgets", default="10000,100000,1000000",
                    help="comma-separated episode counts")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None,
                    help="optional CSV with one row per budget")
    args = ap.parse_args()

    cfg = load_config(args.config)
    forest = load_forest(args.forest, expected_config_hash=config_hash(cfg))
    env = MdpEnv(cfg.planning, cfg.storage,
                 outage_cost=forest.predict_outage_cost)
    scenario = default_scenarios()["1"]
    seed = cfg.master_seed if args.seed is None else args.seed
    rl = cfg.rl

    rows = []
    for budget in (int(b) for b in args.budgets.split(",")):
        t0 = time.perf_counter()
        qtable, curve = train(
            env, budget, rl.gamma,
            DecaySchedule(rl.alpha_start, rl.alpha_end, budget),
            DecaySchedule(rl.epsilon_start, rl.epsilon_end, budget), seed)
        wall = time.perf_counter() - t0
        y = np.array(curve.mean_total_reward)
        tail = y[-10:]
        # largest batch-to-batch move near the end, relative to the tail mean
        movement = float(np.abs(np.diff(tail)).max() / abs(tail.mean()))
        plan = describe(extract_policy(qtable, env, scenario))
        print(f"{budget:>9} episodes: final batch {y[-1]:>12.0f}, "
              f"tail movement {movement:6.2%}, "
              f"{len(qtable)} states, {wall:.1f}s")
        print(f"{'':>9}  scenario 1: {plan}")
        rows.append({"episodes": budget, "final_batch_reward": y[-1],
                     "tail_movement": movement,
                     "states_visited": len(qtable), "seconds": round(wall, 1),
                     "scenario_1_plan": plan})

    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
