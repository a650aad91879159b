#!/usr/bin/env python3
"""Demonstrate why the relative-error strong law needs its hypotheses.

One fair coin flip X per trial drives the whole dependent sequence
X_i = X/i.  Partial sums are X * H_n, so half of all trajectories are
identically zero and S_n / E[S_n] sits at 0 or 2 forever: the classical
o(n) error bound holds while the ratio never converges to 1.
"""

import argparse

from epicount.harness import counterexample_demo


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10000)
    ap.add_argument("--seed", type=int, default=808)
    args = ap.parse_args()
    rep = counterexample_demo(args.trials, seed=args.seed)
    print(f"trials: {rep.trials}")
    print(f"fraction of identically-zero trajectories: {rep.zero_fraction:.4f}")
    print(f"expected fraction: {rep.expected} (band +- {rep.band:.4f})")
    ratios = ", ".join(f"{v:g}" for v in rep.ratio_values)
    print(f"observed S_n / E[S_n] values at the last checkpoint: {ratios}")
    print("the ratio never approaches 1: no relative-error law for this sequence")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
