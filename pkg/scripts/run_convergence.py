"""Spatial convergence of every variant on the unit-square test problem."""

import argparse

from dmlpg.assembly import Method, SolverConfig
from dmlpg.problems import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, nargs="+", default=[0.2, 0.1, 0.05])
    ap.add_argument("--dt", type=float, default=0.0025)
    ap.add_argument("--c0", type=float, default=0.6)
    ap.add_argument("--r0-factor", type=float, default=0.7)
    args = ap.parse_args()
    cfg = SolverConfig(c0=args.c0, r0_factor=args.r0_factor)
    for method in Method:
        report = convergence_study(method, args.h, args.dt, cfg=cfg)
        print(f"{method.value}  fitted order {report.fitted:.3f}")
        for h, mx, rms, order in report.rows():
            print(f"  h={h:<6g} max={mx:.4e} rms={rms:.4e} order={order:.3f}")


if __name__ == "__main__":
    main()
