"""Batch front-end: ``solve``, ``study convergence`` and ``study timing``.

A run is described by a plain ``key = value`` file; ``#`` starts a comment.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .assembly import (
    Method,
    SolverConfig,
    SolverError,
    assemble,
    postprocess,
    solve_method_of_lines,
    solve_steady,
    step_theta,
)
from .basis import PolyBasis
from .gmls import GmlsError
from .nodes import Shape, make_regular_grid
from .problems import (
    ErrorReport,
    FgmParams,
    fgm_problem,
    manufactured_problem,
    test_problem,
)
from .quadrature import EmptyRegion
from .weakforms import QuadConfig

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER = 0, 2, 3
PROBLEMS = ("test", "fgm", "manufactured")
SCHEMES = ("auto", "cn", "be", "mol", "steady")
FGM_TIMES = (10.0, 10.5, 30.0, 60.0)


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class RunConfig:
    problem: str = "test"
    method: str = "dmlpg1"
    m: int = 2
    h: float | None = None  # mesh size; default 0.1 on the unit square
    n: int | None = None  # nodes per side, alternative to h
    delta0: float | None = None  # None -> 2m
    c0: float = 0.6
    r0_factor: float = 0.7
    shape: str = "ball"
    scheme: str = "auto"
    dt: float = 0.01
    rtol: float = 1e-5
    atol: float = 1e-6
    t_final: float | None = None
    output_times: list[float] = field(default_factory=list)
    gamma: float = 0.0
    h_list: list[float] = field(default_factory=lambda: [0.2, 0.1, 0.05])
    n_r: int = 8
    n_theta: int = 16
    n_segment: int = 8
    repeats: int = 1
    out: str = "out"

    # -- resolved values ------------------------------------------------------

    def side(self) -> float:
        return FgmParams().a if self.problem == "fgm" else 1.0

    def mesh_size(self) -> float:
        if self.n is not None:
            return self.side() / (self.n - 1)
        if self.h is not None:
            return self.h
        return self.side() / 10

    def resolved_scheme(self) -> str:
        if self.scheme != "auto":
            return self.scheme
        return {"test": "cn", "fgm": "mol", "manufactured": "steady"}[self.problem]

    def resolved_t_final(self) -> float:
        if self.t_final is not None:
            return self.t_final
        return FgmParams().t_final if self.problem == "fgm" else 1.0

    def resolved_output_times(self) -> list[float]:
        if self.output_times:
            return sorted(self.output_times)
        if self.problem == "fgm":
            return [t for t in FGM_TIMES if t <= self.resolved_t_final()]
        return [self.resolved_t_final()]

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            m=self.m,
            delta0=self.delta0,
            c0=self.c0,
            r0_factor=self.r0_factor,
            shape=Shape(self.shape),
            quad=QuadConfig(self.n_r, self.n_theta, self.n_segment),
        )

    def build_problem(self):
        if self.problem == "test":
            return dataclasses.replace(test_problem(), t_final=self.resolved_t_final())
        if self.problem == "manufactured":
            return manufactured_problem()
        return fgm_problem(FgmParams(gamma=self.gamma, t_final=self.resolved_t_final()))

    def manifest(self) -> dict:
        out = dataclasses.asdict(self)
        out.update(
            h=self.mesh_size(),
            delta0=self.solver_config().weight_config(self.mesh_size()).delta0,
            scheme=self.resolved_scheme(),
            t_final=self.resolved_t_final(),
            output_times=self.resolved_output_times(),
        )
        if self.problem == "fgm":
            out["fgm"] = dataclasses.asdict(FgmParams(gamma=self.gamma, t_final=self.resolved_t_final()))
        return out


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}
_INTS = {"m", "n", "n_r", "n_theta", "n_segment", "repeats"}
_FLOAT_LISTS = {"output_times", "h_list"}
_STRINGS = {"problem", "method", "shape", "scheme", "out"}


def _convert(key: str, raw: str, line: int):
    try:
        if key in _STRINGS:
            return raw.strip().strip('"').lower() if key != "out" else raw.strip().strip('"')
        if key in _FLOAT_LISTS:
            return [float(v) for v in raw.replace(",", " ").split()]
        if key in _INTS:
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"malformed value for {key!r}: {raw!r}", line) from None


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    where = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in where:
            raise ConfigError(f"duplicate key {key!r} (first set on line {where[key]})", lineno)
        setattr(cfg, key, _convert(key, raw, lineno))
        where[key] = lineno
    validate(cfg, where)
    return cfg


def validate(cfg: RunConfig, where: dict | None = None) -> None:
    where = where or {}

    def fail(key, msg):
        raise ConfigError(f"{key}: {msg}", where.get(key))

    if cfg.problem not in PROBLEMS:
        fail("problem", f"must be one of {PROBLEMS}")
    if cfg.method not in {m.value for m in Method}:
        fail("method", f"must be one of {[m.value for m in Method]}")
    if cfg.shape not in {s.value for s in Shape}:
        fail("shape", "must be 'ball' or 'square'")
    if cfg.scheme not in SCHEMES:
        fail("scheme", f"must be one of {SCHEMES}")
    for key in ("h", "delta0", "t_final"):
        val = getattr(cfg, key)
        if val is not None and not (math.isfinite(val) and val > 0):
            fail(key, "must be positive")
    for key in ("c0", "r0_factor", "dt", "rtol", "atol"):
        val = getattr(cfg, key)
        if not (math.isfinite(val) and val > 0):
            fail(key, "must be positive")
    for key in ("n_r", "n_theta", "n_segment", "repeats"):
        if getattr(cfg, key) < 1:
            fail(key, "must be positive")
    if cfg.m < 1:
        fail("m", "must be positive")
    if cfg.method == "dmlpg2" and cfg.m < 2:
        fail("m", "collocation needs second derivatives, so m >= 2")
    if not math.isfinite(cfg.gamma):
        fail("gamma", "must be finite")
    if cfg.gamma != 0 and cfg.problem != "fgm":
        fail("gamma", "only applies to problem = fgm")
    if cfg.h is not None and cfg.n is not None:
        fail("n", "give either h or n, not both")
    if cfg.n is not None and cfg.n < 2:
        fail("n", "must be at least 2")
    for key in ("h_list", "output_times"):
        vals = getattr(cfg, key)
        if any(not (math.isfinite(v) and v > 0) for v in vals):
            fail(key, "entries must be positive")
    if not cfg.h_list:
        fail("h_list", "must not be empty")
    for h in [cfg.mesh_size()] + ([] if cfg.problem == "fgm" else cfg.h_list):
        k = round(cfg.side() / h)
        if k < 1 or abs(k * h - cfg.side()) > 1e-9 * cfg.side():
            fail("h" if h == cfg.mesh_size() else "h_list", f"{h} does not divide the side {cfg.side()}")
    scheme = cfg.resolved_scheme()
    if scheme in ("cn", "be"):
        T = cfg.resolved_t_final()
        steps = T / cfg.dt
        if abs(steps - round(steps)) > 1e-9 * steps:
            fail("dt", f"must divide the final time {T}")
    if scheme == "steady" and cfg.problem != "manufactured":
        fail("scheme", "steady solves need time-independent data (problem = manufactured)")
    if any(t > cfg.resolved_t_final() for t in cfg.output_times):
        fail("output_times", "must not exceed t_final")


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


# -- running -----------------------------------------------------------------------


def _fmt(x) -> str:
    return "%.17g" % x


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])


@dataclass
class RunResult:
    times: np.ndarray
    nodes: object
    values: np.ndarray
    timings: list[tuple[str, float]]
    errors: ErrorReport | None = None
    probes: np.ndarray | None = None
    probe_values: np.ndarray | None = None


def _integrate(cfg: RunConfig, system, times):
    scheme = cfg.resolved_scheme()
    if scheme == "steady":
        return np.array([0.0]), solve_steady(system)[None]
    if scheme == "mol":
        traj = solve_method_of_lines(system, cfg.rtol, cfg.atol, t_eval=times)
        return traj.times, traj.values
    theta = 0.5 if scheme == "cn" else 1.0
    traj = step_theta(system, cfg.dt, theta)
    keep = [int(np.argmin(np.abs(traj.times - t))) for t in times]
    return traj.times[keep], traj.values[keep]


def execute(cfg: RunConfig) -> RunResult:
    prob = cfg.build_problem()
    h = cfg.mesh_size()
    timings = []
    start = time.perf_counter()
    nodes = make_regular_grid(prob.domain, h)
    timings.append(("nodes", time.perf_counter() - start))
    system = assemble(prob, nodes, cfg.method, cfg.solver_config())
    timings.append(("assembly", system.assembly_seconds))
    start = time.perf_counter()
    times = cfg.resolved_output_times()
    if cfg.resolved_scheme() in ("cn", "be"):
        times = [round(t / cfg.dt) * cfg.dt for t in times]
    times, values = _integrate(cfg, system, times)
    timings.append(("solve", time.perf_counter() - start))
    result = RunResult(times, nodes, values, timings)

    if cfg.problem == "fgm":
        p = FgmParams(gamma=cfg.gamma, t_final=cfg.resolved_t_final())
        basis = PolyBasis(cfg.m, np.zeros(2), h)
        result.probes = p.probes()
        result.probe_values = postprocess(
            nodes, values, result.probes, basis, cfg.solver_config().weight_config(h)
        )

    if prob.exact is not None:
        report = ErrorReport()
        # the series is unreliable right after the step, so early samples are skipped
        late = [i for i, t in enumerate(times) if cfg.problem != "fgm" or t >= 0.4]
        if late:
            num = np.concatenate([values[i] for i in late])
            ref = np.concatenate([prob.exact(nodes.points, times[i]) for i in late])
            report.add(h, num, ref)
            result.errors = report
    return result


def write_outputs(cfg: RunConfig, result: RunResult, out: Path, command: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, t in enumerate(result.times):
        for x, u in zip(result.nodes.points, result.values[i]):
            rows.append((t, x[0], x[1], u))
        if result.probes is not None:
            for x, u in zip(result.probes, result.probe_values[i]):
                rows.append((t, x[0], x[1], u))
    _write_csv(out / "solution.csv", ("t", "x1", "x2", "u"), rows)
    if result.errors is not None:
        _write_csv(out / "errors.csv", ("h", "max_err", "rms_err", "order"), result.errors.rows())
    _write_csv(out / "timings.csv", ("phase", "seconds"), result.timings)
    _write_manifest(cfg, out, command)


def _write_manifest(cfg: RunConfig, out: Path, command: str) -> None:
    manifest = {"command": command, "config": cfg.manifest()}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def run(cfg: RunConfig, out=None) -> int:
    out = Path(out or cfg.out)
    result = execute(cfg)
    write_outputs(cfg, result, out, "solve")
    return EXIT_OK


def run_convergence(cfg: RunConfig, out=None) -> int:
    out = Path(out or cfg.out)
    if cfg.problem != "test":
        raise ConfigError("convergence studies use problem = test")
    prob = cfg.build_problem()
    report = ErrorReport()
    timings = []
    for h in cfg.h_list:
        case = dataclasses.replace(cfg, h=h, n=None, output_times=[])
        res = execute(case)
        report.add(h, res.values[-1], prob.exact(res.nodes.points, res.times[-1]),
                   sum(s for _, s in res.timings))
        timings += [(f"{phase}[h={h:g}]", s) for phase, s in res.timings]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "errors.csv", ("h", "max_err", "rms_err", "order"), report.rows())
    _write_csv(out / "timings.csv", ("phase", "seconds"), timings)
    _write_manifest(cfg, out, "study convergence")
    return EXIT_OK


def run_timing(cfg: RunConfig, out=None) -> int:
    out = Path(out or cfg.out)
    timings = []
    for h in cfg.h_list:
        best = {}
        for _ in range(cfg.repeats):
            res = execute(dataclasses.replace(cfg, h=h, n=None))
            for phase, s in res.timings:
                best[phase] = min(best.get(phase, math.inf), s)
        timings += [(f"{phase}[h={h:g}]", s) for phase, s in best.items()]
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "timings.csv", ("phase", "seconds"), timings)
    _write_manifest(cfg, out, "study timing")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dmlpg", description="Meshless heat conduction solver")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run one configuration")
    solve.add_argument("--config", required=True)
    solve.add_argument("--out")
    study = sub.add_parser("study", help="convergence or timing study")
    study.add_argument("kind", choices=("convergence", "timing"))
    study.add_argument("--config", required=True)
    study.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "solve":
            return run(cfg, args.out)
        if args.kind == "convergence":
            return run_convergence(cfg, args.out)
        return run_timing(cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, GmlsError, EmptyRegion) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
