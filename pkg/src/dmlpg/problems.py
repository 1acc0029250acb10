"""Canned heat problems, analytic references, error norms and studies."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import (
    Method,
    SolverConfig,
    assemble,
    solve_steady,
    step_crank_nicolson,
)
from .nodes import DomainSpec, NodeSet, Tag, make_regular_grid
from .weakforms import HeatProblem, constant, zero_gradient

MAX_SERIES_TERMS = 100_000
SERIES_TOL = 1e-12


class NotApplicable(ValueError):
    pass


# -- unit-square benchmark -------------------------------------------------------


def test_problem() -> HeatProblem:
    """``2 pi^2 u_t = lap u`` on the unit square with exact ``e^-t cos(pi x1) cos(pi x2)``.

    Dirichlet on the vertical sides, insulated horizontal sides.
    """
    pi = math.pi

    def exact(x, t):
        x = np.atleast_2d(x)
        return math.exp(-t) * np.cos(pi * x[:, 0]) * np.cos(pi * x[:, 1])

    def flux(x, t, normals):
        x = np.atleast_2d(x)
        g1 = -pi * np.sin(pi * x[:, 0]) * np.cos(pi * x[:, 1])
        g2 = -pi * np.cos(pi * x[:, 0]) * np.sin(pi * x[:, 1])
        return math.exp(-t) * (g1 * normals[:, 0] + g2 * normals[:, 1])

    return HeatProblem(
        domain=DomainSpec(0.0, 1.0, 0.0, 1.0, Tag.DIRICHLET, Tag.DIRICHLET, Tag.NEUMANN, Tag.NEUMANN),
        conductivity=constant(1.0),
        conductivity_gradient=zero_gradient,
        heat_capacity=constant(2 * pi**2),
        dirichlet=exact,
        initial=lambda x: exact(x, 0.0),
        t_final=1.0,
        neumann=flux,
        exact=exact,
        dirichlet_rate=lambda x, t: -exact(x, t),
        name="test",
    )


test_problem.__test__ = False  # keep pytest from collecting it


def manufactured_problem() -> HeatProblem:
    """Steady ``lap u = -f`` with ``u = x1**2``, ``f = -2`` and mixed boundary data."""

    def exact(x, t=0.0):
        x = np.atleast_2d(x)
        return x[:, 0] ** 2

    def flux(x, t, normals):
        return 2.0 * np.atleast_2d(x)[:, 0] * normals[:, 0]

    return HeatProblem(
        domain=DomainSpec(0.0, 1.0, 0.0, 1.0, Tag.DIRICHLET, Tag.DIRICHLET, Tag.NEUMANN, Tag.NEUMANN),
        conductivity=constant(1.0),
        conductivity_gradient=zero_gradient,
        heat_capacity=constant(1.0),
        dirichlet=exact,
        initial=exact,
        t_final=1.0,
        source=lambda x, t: np.full(len(np.atleast_2d(x)), -2.0),
        neumann=flux,
        exact=exact,
        dirichlet_rate=lambda x, t: np.zeros(len(np.atleast_2d(x))),
        name="manufactured",
    )


# -- graded strip ----------------------------------------------------------------------


@dataclass(frozen=True)
class FgmParams:
    """Square strip of side ``a`` with conductivity ``kappa0 exp(gamma x1)``.

    The face ``x1 = a`` is raised to ``T`` at ``t = 0``, the face ``x1 = 0`` is
    held at zero and the other two faces are insulated.
    """

    gamma: float = 0.0
    kappa0: float = 17.0
    rho_c: float = 1.0e6
    a: float = 0.04
    T: float = 1.0
    t_final: float = 60.0

    def __post_init__(self):
        for name in ("kappa0", "rho_c", "a", "T", "t_final"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be finite")

    @property
    def alpha0(self) -> float:
        return self.kappa0 / self.rho_c

    def probes(self) -> np.ndarray:
        return np.array([[f * self.a, 0.5 * self.a] for f in (0.25, 0.5, 0.75)])


def fgm_problem(p: FgmParams = FgmParams()) -> HeatProblem:
    g = p.gamma

    def kappa(x):
        return p.kappa0 * np.exp(g * np.atleast_2d(x)[:, 0])

    def kappa_grad(x):
        k = kappa(x)
        return np.column_stack([g * k, np.zeros_like(k)])

    def dirichlet(x, t):
        x = np.atleast_2d(x)
        return np.where(x[:, 0] > 0.5 * p.a, p.T, 0.0)

    exact = None
    if g == 0:
        exact = lambda x, t: fgm_series_solution(p, np.atleast_2d(x)[:, 0], t)  # noqa: E731

    return HeatProblem(
        domain=DomainSpec(0.0, p.a, 0.0, p.a, Tag.DIRICHLET, Tag.DIRICHLET, Tag.NEUMANN, Tag.NEUMANN),
        conductivity=kappa,
        conductivity_gradient=kappa_grad,
        heat_capacity=constant(p.rho_c),
        dirichlet=dirichlet,
        initial=lambda x: np.zeros(len(np.atleast_2d(x))),
        t_final=p.t_final,
        exact=exact,
        dirichlet_rate=lambda x, t: np.zeros(len(np.atleast_2d(x))),
        name="fgm",
    )


def fgm_series_solution(p: FgmParams, x1, t: float, n_terms: int | None = None):
    """Fourier series of the homogeneous strip after the step at ``x1 = a``.

    Without ``n_terms`` the sum runs until the envelope ``2T/(n pi) e^{-k n^2}``
    of the next term falls below 1e-12, with a hard cap.
    """
    if p.gamma != 0:
        raise NotApplicable("the series solution only covers the homogeneous strip")
    if t < 0:
        raise ValueError("time must be non-negative")
    x1 = np.asarray(x1, dtype=float)
    rate = p.alpha0 * math.pi**2 * t / p.a**2
    if n_terms is None:
        n_terms = MAX_SERIES_TERMS
        for n in range(1, MAX_SERIES_TERMS + 1):
            if 2 * p.T / (n * math.pi) * math.exp(-rate * n * n) < SERIES_TOL:
                n_terms = n - 1
                break
    if n_terms < 1:
        n_terms = 1
    n = np.arange(1, n_terms + 1)
    coef = 2 * p.T / math.pi * (-1.0) ** n / n * np.exp(-rate * n**2)
    s = np.sin(np.multiply.outer(x1, n) * math.pi / p.a)
    return p.T * x1 / p.a + s @ coef


def fgm_steady_state(p: FgmParams, x1):
    """Steady profile ``T (e^{-g x} - 1) / (e^{-g a} - 1)``, tending to ``T x / a`` as ``g -> 0``."""
    x1 = np.asarray(x1, dtype=float)
    g = p.gamma
    if abs(g * p.a) < 1e-12:
        return p.T * x1 / p.a
    return p.T * np.expm1(-g * x1) / math.expm1(-g * p.a)


# -- error reports and studies ---------------------------------------------------------


def fitted_order(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    if not (e_coarse > 0 and e_fine > 0):
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(ratio)


def least_squares_order(h, errors) -> float:
    """Slope of ``log e`` against ``log h``."""
    h, e = np.log(np.asarray(h, dtype=float)), np.log(np.asarray(errors, dtype=float))
    return float(np.polyfit(h, e, 1)[0])


def nodal_errors(numerical, reference) -> tuple[float, float]:
    d = np.abs(np.asarray(numerical, dtype=float) - np.asarray(reference, dtype=float))
    return float(d.max(initial=0.0)), float(math.sqrt(np.mean(d**2))) if d.size else 0.0


@dataclass
class ErrorReport:
    h: list[float] = field(default_factory=list)
    max_err: list[float] = field(default_factory=list)
    rms_err: list[float] = field(default_factory=list)
    samples: list[np.ndarray] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)

    def add(self, h, numerical, reference, seconds=0.0):
        mx, rms = nodal_errors(numerical, reference)
        self.h.append(float(h))
        self.max_err.append(mx)
        self.rms_err.append(rms)
        self.samples.append(np.abs(np.asarray(numerical) - np.asarray(reference)))
        self.seconds.append(float(seconds))

    @property
    def orders(self) -> list[float]:
        """Observed order between each grid and the previous one (``nan`` for the first)."""
        out = [math.nan]
        for i in range(1, len(self.h)):
            out.append(fitted_order(self.max_err[i - 1], self.max_err[i], self.h[i - 1] / self.h[i]))
        return out

    @property
    def fitted(self) -> float:
        return least_squares_order(self.h, self.max_err)

    def rows(self):
        return list(zip(self.h, self.max_err, self.rms_err, self.orders))


def run_transient(prob: HeatProblem, h: float, method, dt: float, cfg: SolverConfig = SolverConfig()):
    nodes = make_regular_grid(prob.domain, h)
    sys = assemble(prob, nodes, method, cfg)
    return nodes, sys, step_crank_nicolson(sys, dt, save_every=round(prob.t_final / dt))


def convergence_study(
    method,
    h_list,
    dt: float,
    t_final: float | None = None,
    problem: HeatProblem | None = None,
    cfg: SolverConfig = SolverConfig(),
) -> ErrorReport:
    """Max nodal error at the final time for each mesh size (Crank-Nicolson)."""
    prob = problem or test_problem()
    if prob.exact is None:
        raise ValueError("convergence study needs an exact solution")
    t_final = prob.t_final if t_final is None else t_final
    report = ErrorReport()
    for h in h_list:
        start = time.perf_counter()
        nodes = make_regular_grid(prob.domain, h)
        sys = assemble(prob, nodes, method, cfg)
        traj = step_crank_nicolson(sys, dt, t_final, save_every=round(t_final / dt))
        report.add(h, traj.final, prob.exact(nodes.points, t_final), time.perf_counter() - start)
    return report


def steady_error(method, h: float = 0.1, cfg: SolverConfig = SolverConfig()) -> float:
    prob = manufactured_problem()
    nodes = make_regular_grid(prob.domain, h)
    u = solve_steady(assemble(prob, nodes, method, cfg))
    return float(np.max(np.abs(u - prob.exact(nodes.points))))


@dataclass
class TimingRow:
    method: str
    h: float
    n_nodes: int
    assembly: float
    solve: float


def timing_study(method, h_list, dt: float = 0.01, t_final: float | None = None,
                 problem: HeatProblem | None = None, cfg: SolverConfig = SolverConfig(),
                 repeats: int = 1) -> list[TimingRow]:
    """Wall-clock assembly and Crank-Nicolson solve times; the minimum over ``repeats`` runs."""
    prob = problem or test_problem()
    t_final = prob.t_final if t_final is None else t_final
    rows = []
    for h in h_list:
        nodes = make_regular_grid(prob.domain, h)
        best_a = best_s = math.inf
        for _ in range(max(1, repeats)):
            sys = assemble(prob, nodes, Method(method), cfg)
            start = time.perf_counter()
            step_crank_nicolson(sys, dt, t_final, save_every=round(t_final / dt))
            best_s = min(best_s, time.perf_counter() - start)
            best_a = min(best_a, sys.assembly_seconds)
        rows.append(TimingRow(Method(method).value, float(h), nodes.N, best_a, best_s))
    return rows


def grid(prob: HeatProblem, h: float) -> NodeSet:
    return make_regular_grid(prob.domain, h)
