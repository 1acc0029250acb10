"""Exit criteria for the solver.  Each test prints one PASS/FAIL line per check."""

import math
import time

import numpy as np
import pytest

from dmlpg.assembly import SolverConfig, assemble, postprocess, solve_method_of_lines, solve_steady, step_crank_nicolson
from dmlpg.basis import PolyBasis
from dmlpg.gmls import WeightConfig, build_stencil, solve_coefficients
from dmlpg.nodes import DomainSpec, make_regular_grid
from dmlpg.problems import (
    FgmParams,
    convergence_study,
    fgm_problem,
    fgm_series_solution,
    fgm_steady_state,
    manufactured_problem,
    test_problem,
    timing_study,
)
from dmlpg.quadrature import disk_rule

pytestmark = pytest.mark.acceptance
PI = math.pi


def check(label: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
    return ok


# 1 ------------------------------------------------------------------------------


def test_gmls_exactness_on_random_stencils():
    rng = np.random.default_rng(20240601)
    grids = {h: make_regular_grid(DomainSpec(), h) for h in (0.2, 0.1)}
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        h = float(rng.choice([0.2, 0.1]))
        m = int(rng.integers(1, 4))
        z = rng.uniform(0.0, 1.0, 2)
        nodes = grids[h]
        basis = PolyBasis(m, z, h)
        st = build_stencil(nodes, z, basis, WeightConfig.default(m, h))
        disk = disk_rule(z, 0.7 * h)
        lam = np.vstack([
            basis.eval(z),
            basis.gradient(z)[:, 0],
            basis.laplacian(z),
            disk.weights @ basis.eval(disk.points),
        ])
        recovered = solve_coefficients(st, lam) @ basis.eval(nodes.points[st.indices])
        scale = np.abs(lam).max(axis=1, keepdims=True)
        scale[scale == 0] = 1.0  # the Laplacian vanishes on linears: compare absolutely
        worst = max(worst, float((np.abs(recovered - lam) / scale).max()))
    elapsed = time.perf_counter() - start
    ok = check("1 GMLS exactness", worst <= 1e-10 and elapsed < 10, f"max relative error {worst:.2e}, {elapsed:.2f} s")
    assert ok


# 2 ------------------------------------------------------------------------------


def test_diffuse_derivative_orders():
    def u(p):
        return np.sin(PI * p[:, 0]) * np.cos(PI * p[:, 1])

    def grad(p):
        return PI * np.column_stack([
            np.cos(PI * p[:, 0]) * np.cos(PI * p[:, 1]),
            -np.sin(PI * p[:, 0]) * np.sin(PI * p[:, 1]),
        ])

    points = np.random.default_rng(0).uniform(0.0, 1.0, (40, 2))
    hs = (0.1, 0.05, 0.025)
    start = time.perf_counter()
    errs = []
    for h in hs:
        nodes = make_regular_grid(DomainSpec(), h)
        cfg = WeightConfig.default(2, h)
        e = np.zeros(3)
        for z in points:
            b = PolyBasis(2, z, h)
            st = build_stencil(nodes, z, b, cfg)
            g = b.gradient(z)
            rows = solve_coefficients(st, np.vstack([b.eval(z), g[:, 0], g[:, 1], b.laplacian(z)]))
            r = rows @ u(nodes.points[st.indices])
            zz = z[None]
            e = np.maximum(e, [
                abs(r[0] - u(zz)[0]),
                np.abs(r[1:3] - grad(zz)[0]).max(),
                abs(r[3] + 2 * PI**2 * u(zz)[0]),
            ])
        errs.append(e)
    elapsed = time.perf_counter() - start
    errs = np.array(errs)
    orders = [np.polyfit(np.log(hs), np.log(errs[:, i]), 1)[0] for i in range(3)]
    ok = True
    for name, order, need in zip(("value", "gradient", "laplacian"), orders, (2.8, 1.8, 0.8)):
        ok &= check(f"2 diffuse {name} order", order >= need, f"{order:.3f} (need >= {need})")
    ok &= check("2 runtime", elapsed < 30, f"{elapsed:.2f} s")
    assert ok


# 3 ------------------------------------------------------------------------------


@pytest.mark.parametrize("method, need", [("dmlpg1", 1.8), ("dmlpg5", 1.8), ("dmlpg2", 0.8), ("dmlpg4", 1.5)])
def test_test_problem_spatial_order(method, need):
    report = convergence_study(method, [0.2, 0.1, 0.05], dt=0.0025)
    errs = ", ".join(f"{e:.3e}" for e in report.max_err)
    decreasing = all(b < a for a, b in zip(report.max_err, report.max_err[1:]))
    ok = check(f"3 {method} errors decrease", decreasing, errs)
    ok &= check(f"3 {method} fitted order", report.fitted >= need, f"{report.fitted:.3f} (need >= {need})")
    ok &= check(f"3 {method} runtime at h=0.05", report.seconds[-1] < 60, f"{report.seconds[-1]:.2f} s")
    assert ok


@pytest.mark.parametrize("method", ["dmlpg1", "dmlpg5"])
def test_subdomain_radius_sweep(method):
    hs = [0.2, 0.1, 0.05]
    base = convergence_study(method, hs, dt=0.0025)
    ok = True
    for factor in (0.5, 0.7, 0.9):
        report = convergence_study(method, hs, dt=0.0025, cfg=SolverConfig(r0_factor=factor))
        shift = abs(report.fitted - base.fitted)
        ok &= check(
            f"3 {method} r0 = {factor} h order", shift <= 0.15,
            f"order {report.fitted:.3f} vs {base.fitted:.3f} at 0.7 h, error at h=0.05 {report.max_err[-1]:.3e}",
        )
    assert ok


# 4 ------------------------------------------------------------------------------


@pytest.mark.parametrize("method", ["dmlpg1", "dmlpg2", "dmlpg5"])
def test_manufactured_polynomial_exactness(method):
    prob = manufactured_problem()
    start = time.perf_counter()
    nodes = make_regular_grid(prob.domain, 0.1)
    u = solve_steady(assemble(prob, nodes, method))
    elapsed = time.perf_counter() - start
    err = np.abs(u - prob.exact(nodes.points)).max()
    ok = check(f"4 {method} polynomial exactness", err <= 1e-8, f"max error {err:.2e}")
    ok &= check(f"4 {method} runtime", elapsed < 5, f"{elapsed:.2f} s")
    assert ok


# 5 ------------------------------------------------------------------------------


def test_fgm_homogeneous_against_series():
    p = FgmParams(gamma=0.0)
    prob = fgm_problem(p)
    h = p.a / 10
    start = time.perf_counter()
    nodes = make_regular_grid(prob.domain, h)
    sys = assemble(prob, nodes, "dmlpg1")
    times = [10.0, 30.0, 60.0]
    traj = solve_method_of_lines(sys, 1e-5, 1e-6, t_eval=times)
    probes = p.probes()
    cfg = SolverConfig()
    values = postprocess(nodes, traj.values, probes, PolyBasis(cfg.m, np.zeros(2), h), cfg.weight_config(h))
    elapsed = time.perf_counter() - start
    ok = True
    for t, row in zip(traj.times, values):
        ref = fgm_series_solution(p, probes[:, 0], t)
        err = np.abs(row - ref).max()
        ok &= check(f"5 series at t={t:g}", err <= 0.02 * p.T, f"max error {err:.2e} (limit {0.02 * p.T:g})")
    ok &= check("5 runtime", elapsed < 60, f"{elapsed:.2f} s")
    assert ok


# 6 ------------------------------------------------------------------------------


def test_fgm_steady_state():
    mids = []
    ok = True
    for gamma in (0.0, 20.0, 50.0, 100.0):
        p = FgmParams(gamma=gamma)
        prob = fgm_problem(p)
        nodes = make_regular_grid(prob.domain, p.a / 10)
        traj = solve_method_of_lines(assemble(prob, nodes, "dmlpg1"), 1e-5, 1e-6, t_eval=[p.t_final])
        u = traj.final
        dev = np.abs(u - fgm_steady_state(p, nodes.points[:, 0])).max()
        ok &= check(f"6 steady state gamma={gamma:g}", dev <= 0.02 * p.T, f"max deviation {dev:.2e}")
        mid = np.isclose(nodes.points[:, 0], 0.5 * p.a) & np.isclose(nodes.points[:, 1], 0.5 * p.a)
        mids.append(float(u[mid][0]))
    increasing = all(b > a for a, b in zip(mids, mids[1:]))
    ok &= check("6 mid-point monotone in gamma", increasing, ", ".join(f"{v:.4f}" for v in mids))
    assert ok


# 7 ------------------------------------------------------------------------------


def test_performance_properties():
    methods = ("dmlpg1", "dmlpg2", "dmlpg4", "dmlpg5")
    rows = {m: timing_study(m, [0.1, 0.05], dt=0.01, repeats=3) for m in methods}
    ok = True
    for m in methods:
        coarse, fine = rows[m]
        ratio = fine.assembly / coarse.assembly
        ok &= check(f"7 {m} assembly h-halving ratio", 3 <= ratio <= 6, f"{ratio:.2f} (N {coarse.n_nodes} -> {fine.n_nodes})")
    at_fine = {m: rows[m][1].assembly for m in methods}
    fastest = min(at_fine, key=at_fine.get)
    ok &= check(
        "7 dmlpg2 fastest assembly", fastest == "dmlpg2",
        ", ".join(f"{m} {s * 1e3:.1f} ms" for m, s in at_fine.items()),
    )
    prob = test_problem()
    traj = step_crank_nicolson(assemble(prob, make_regular_grid(prob.domain, 0.1), "dmlpg1"), 0.01)
    ok &= check("7 one factorization per CN run", traj.factorizations == 1, f"{traj.factorizations}")
    assert ok


# 8 ------------------------------------------------------------------------------


def test_crank_nicolson_second_order_in_time():
    prob = test_problem()
    sys = assemble(prob, make_regular_grid(prob.domain, 0.05), "dmlpg1")
    dts = (0.02, 0.01, 0.005)
    finals = [step_crank_nicolson(sys, dt, save_every=round(1 / dt)).final for dt in dts]
    d1 = np.abs(finals[0] - finals[1]).max()
    d2 = np.abs(finals[1] - finals[2]).max()
    order = math.log2(d1 / d2)
    ok = check("8 CN self-convergence order", order >= 1.8, f"{order:.3f} (differences {d1:.2e}, {d2:.2e})")
    assert ok
