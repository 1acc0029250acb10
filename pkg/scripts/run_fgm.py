"""Graded strip: probe temperatures against the series (gamma = 0) and steady profiles."""

import argparse

import numpy as np

from dmlpg.assembly import SolverConfig, assemble, postprocess, solve_method_of_lines
from dmlpg.basis import PolyBasis
from dmlpg.nodes import make_regular_grid
from dmlpg.problems import FgmParams, fgm_problem, fgm_series_solution, fgm_steady_state


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, nargs="+", default=[0.0, 20.0, 50.0, 100.0])
    ap.add_argument("--method", default="dmlpg1")
    ap.add_argument("--times", type=float, nargs="+", default=[10.0, 10.5, 30.0, 60.0])
    args = ap.parse_args()
    cfg = SolverConfig()
    for gamma in args.gamma:
        p = FgmParams(gamma=gamma)
        prob = fgm_problem(p)
        h = p.a / 10
        nodes = make_regular_grid(prob.domain, h)
        traj = solve_method_of_lines(assemble(prob, nodes, args.method, cfg), t_eval=args.times)
        probes = p.probes()
        vals = postprocess(nodes, traj.values, probes, PolyBasis(cfg.m, np.zeros(2), h), cfg.weight_config(h))
        print(f"gamma = {gamma:g} 1/m")
        for t, row in zip(traj.times, vals):
            line = "  ".join(f"{v:.5f}" for v in row)
            if gamma == 0:
                ref = fgm_series_solution(p, probes[:, 0], t)
                line += "   series " + "  ".join(f"{v:.5f}" for v in ref)
            print(f"  t={t:<5g} {line}")
        dev = np.abs(traj.final - fgm_steady_state(p, nodes.points[:, 0])).max()
        print(f"  max deviation from steady profile at t={traj.times[-1]:g}: {dev:.2e}")


if __name__ == "__main__":
    main()
