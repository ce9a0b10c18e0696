#!/usr/bin/env python3
"""Linear-model benchmark: every estimator row at n = 50 and n = 100.

Paper-scale runs use --reps 1000; the default keeps a laptop run short.
"""

import argparse

from sparsefit import sim

METHODS = (
    "one-step:scad",
    "one-step:log",
    "one-step:lq(q=0.01)",
    "lqa:scad",
    "plqa:scad",
    "subset:aic",
    "subset:bic",
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=2)
    ap.add_argument("--sizes", type=int, nargs="+", default=[50, 100])
    args = ap.parse_args()
    for n in args.sizes:
        spec = sim.ScenarioSpec("linear", n, args.reps, METHODS, seed=args.seed)
        report = sim.run_scenario(spec, threads=args.threads)
        print(sim.format_table(report))


if __name__ == "__main__":
    main()
