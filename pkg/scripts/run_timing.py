"""Assembly and Crank-Nicolson solve times per variant and mesh size."""

import argparse

from dmlpg.assembly import Method
from dmlpg.problems import timing_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print(f"{'method':8} {'h':>7} {'N':>6} {'assembly s':>11} {'solve s':>9}")
    for method in Method:
        for row in timing_study(method, args.h, args.dt, repeats=args.repeats):
            print(f"{row.method:8} {row.h:7g} {row.n_nodes:6d} {row.assembly:11.4f} {row.solve:9.4f}")


if __name__ == "__main__":
    main()
