#!/usr/bin/env python3
"""Desk-scale benchmark table: both relaxation pipelines against greedy
local search and exhaustive search on seeded grids, with suboptimality and
accuracy columns.  Thin wrapper over the bench subcommand.

    python scripts/bench_small_grids.py --out bench.tsv
"""

import argparse
import sys

from mrfsdp.cli import main as cli_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="3x3,4x4,6x6")
    parser.add_argument("--labels", default="2,3")
    parser.add_argument("--methods", default="fuses,dars,icm,exact")
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--noise", type=float, default=0.3)
    parser.add_argument("--out", default=None)
    args = parser.parse_args(argv)
    cli_args = [
        "bench",
        "--sizes", args.sizes,
        "--labels", args.labels,
        "--methods", args.methods,
        "--seeds", str(args.seeds),
        "--noise", str(args.noise),
        "--gaps",
    ]
    if args.out:
        cli_args += ["--out", args.out]
    return cli_main(cli_args)


if __name__ == "__main__":
    sys.exit(main())
