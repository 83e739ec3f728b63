"""Force the split path on a large simulated instance with a low row budget.

    python3 scripts/split_demo.py --budget 20000
"""
from __future__ import annotations

import argparse
import math

from istsp.pipeline import RunOptions, run
from istsp.simgen import SimConfig, simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", default="large")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--budget", type=int, default=20_000)
    ap.add_argument("--time-limit", type=float, default=60.0)
    args = ap.parse_args()
    inst = simulate(SimConfig(args.size, "S1", seed=args.seed))
    rep = run(inst, RunOptions(budget=args.budget, stage1_time_limit=args.time_limit,
                               stage2_time_limit=args.time_limit)).report
    B, b = rep.metrics["tau_bound"], inst.policy.max_shifts
    print(f"estimated stage-2 rows {rep.stage2['model_size']['constraints']} vs budget {args.budget}")
    print(f"method {rep.method}: {rep.workers} workers, bound ceil({B:g}/{b}) = {math.ceil(B / b)}")
    if rep.split:
        print(f"R1 part {rep.split['w1']} workers x {rep.split['rho'] - 1}, R2 part {rep.split['w2']} workers")


if __name__ == "__main__":
    main()
