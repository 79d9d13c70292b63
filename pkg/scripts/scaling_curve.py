#!/usr/bin/env python3
"""Wall-time scaling of the binary-matrix pipeline over grid size.

Prints one row per size (N, wall seconds, certified, staircase steps,
certificate gap) plus the fitted log-log slope.

    python scripts/scaling_curve.py --labels 19 --sizes 10x25,20x25,25x40
"""

import argparse
import sys
import time

import numpy as np

from mrfsdp import fuses_solve, generate_grid_instance


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10x25,20x25,25x40")
    parser.add_argument("--labels", type=int, default=19)
    parser.add_argument("--noise", type=float, default=0.3)
    parser.add_argument("--seed", type=int, default=5)
    args = parser.parse_args(argv)

    sizes, times = [], []
    print("num_nodes\twall_s\tcertified\tstaircase_steps\tcert_gap")
    for token in args.sizes.split(","):
        rows, _, cols = token.strip().partition("x")
        inst = generate_grid_instance(int(rows), int(cols), args.labels,
                                      unary_noise=args.noise, seed=args.seed)
        t0 = time.perf_counter()
        res = fuses_solve(inst, seed=args.seed)
        dt = time.perf_counter() - t0
        sizes.append(inst.num_nodes)
        times.append(dt)
        print(f"{inst.num_nodes}\t{dt:.3f}\t{res.certified}"
              f"\t{len(res.rank_history)}\t{res.subopt_bound:.4f}")
    if len(sizes) >= 2:
        slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
        print(f"# log-log slope: {slope:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
