"""Assembly of ``A1 u' + A u = b(t)`` and its time integration.

Rows of nodes on the Dirichlet boundary (and, for collocation, on the
Neumann boundary) are algebraic: their ``A1`` row is zero, their ``A`` row
recovers the boundary functional from nodal values and ``b`` carries the
boundary datum.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import splu

from .basis import PolyBasis
from .gmls import WeightConfig, build_stencil, point_value_row, solve_coefficients
from .nodes import NodeSet, Shape, Tag, clip_subdomain
from .weakforms import (
    CompanionTest,
    ConstantTest,
    HeatProblem,
    MlsTest,
    NodeRole,
    QuadConfig,
    dmlpg1_functionals,
    dmlpg2_functionals,
    dmlpg4_functionals,
    dmlpg5_functionals,
    neumann_rule,
    source_rule,
)


class Method(str, enum.Enum):
    DMLPG1 = "dmlpg1"
    DMLPG2 = "dmlpg2"
    DMLPG4 = "dmlpg4"
    DMLPG5 = "dmlpg5"


class SolverError(RuntimeError):
    pass


class SingularSystem(SolverError):
    pass


class IntegrationFailure(SolverError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    m: int = 2
    delta0: float | None = None  # None -> 2m
    c0: float = 0.6
    r0_factor: float = 0.7
    shape: Shape = Shape.BALL
    quad: QuadConfig = field(default_factory=QuadConfig)

    def weight_config(self, h: float) -> WeightConfig:
        if self.delta0 is None:
            return WeightConfig.default(self.m, h, self.c0)
        return WeightConfig(self.delta0, self.c0, h)


class LoadVector:
    """Right-hand side ``b(t)`` from precomputed quadrature data."""

    def __init__(self, problem: HeatProblem, n: int):
        self.problem = problem
        self.n = n
        self._region = ([], [], [])  # node ids, points, weights
        self._boundary = ([], [], [], [])  # node ids, points, normals, weights
        self._point_source = ([], [], [])  # node ids, points, scale
        self._dirichlet = ([], [])
        self._flux = ([], [], [])
        self._frozen = False

    def add_region(self, k, rule):
        self._region[0].append(np.full(len(rule), k))
        self._region[1].append(rule.points)
        self._region[2].append(rule.weights)

    def add_boundary(self, k, rule):
        self._boundary[0].append(np.full(len(rule), k))
        self._boundary[1].append(rule.points)
        self._boundary[2].append(rule.normals)
        self._boundary[3].append(rule.weights)

    def add_point_source(self, k, x):
        self._point_source[0].append(k)
        self._point_source[1].append(x)

    def add_dirichlet(self, k, x):
        self._dirichlet[0].append(k)
        self._dirichlet[1].append(x)

    def add_flux(self, k, x, normal):
        self._flux[0].append(k)
        self._flux[1].append(x)
        self._flux[2].append(normal)

    def freeze(self):
        def cat(parts, shape):
            return np.concatenate(parts) if parts else np.empty(shape)

        ids, pts, w = self._region
        self.region = (cat(ids, 0).astype(int), cat(pts, (0, 2)), cat(w, 0))
        ids, pts, nrm, w = self._boundary
        self.boundary = (cat(ids, 0).astype(int), cat(pts, (0, 2)), cat(nrm, (0, 2)), cat(w, 0))
        self.point_source = (np.array(self._point_source[0], dtype=int), np.array(self._point_source[1]).reshape(-1, 2))
        self.dirichlet = (np.array(self._dirichlet[0], dtype=int), np.array(self._dirichlet[1]).reshape(-1, 2))
        self.flux = (
            np.array(self._flux[0], dtype=int),
            np.array(self._flux[1]).reshape(-1, 2),
            np.array(self._flux[2]).reshape(-1, 2),
        )
        self._frozen = True

    def __call__(self, t: float) -> np.ndarray:
        p = self.problem
        b = np.zeros(self.n)
        if p.source is not None:
            ids, pts, w = self.region
            if len(ids):
                b += np.bincount(ids, w * p.source(pts, t), minlength=self.n)
            ids, pts = self.point_source
            if len(ids):
                b[ids] += p.source(pts, t)
        if p.neumann is not None:
            ids, pts, nrm, w = self.boundary
            if len(ids):
                b += np.bincount(ids, w * p.neumann(pts, t, nrm), minlength=self.n)
        b[self.constraints] = self.constraint_values(t)
        return b

    @property
    def constraints(self) -> np.ndarray:
        return np.concatenate([self.dirichlet[0], self.flux[0]])

    def constraint_values(self, t: float) -> np.ndarray:
        p = self.problem
        ids, pts = self.dirichlet
        g = [p.dirichlet(pts, t) if len(ids) else np.empty(0)]
        ids, pts, nrm = self.flux
        if len(ids):
            g.append(p.neumann(pts, t, nrm) if p.neumann is not None else np.zeros(len(ids)))
        return np.concatenate(g)

    def constraint_rate(self, t: float) -> np.ndarray:
        """Time derivative of the constraint data (finite differences when no rate is given)."""
        p = self.problem
        if p.dirichlet_rate is not None and not len(self.flux[0]):
            return p.dirichlet_rate(self.dirichlet[1], t)
        dt = 1e-6 * max(1.0, abs(t))
        lo = max(t - dt, 0.0)
        return (self.constraint_values(t + dt) - self.constraint_values(lo)) / (t + dt - lo)


@dataclass(eq=False)
class SemiDiscreteSystem:
    A1: sp.csr_matrix
    A: sp.csr_matrix
    constraints: np.ndarray
    u0: np.ndarray
    load: LoadVector
    nodes: NodeSet
    problem: HeatProblem
    method: Method
    assembly_seconds: float = 0.0

    def b(self, t: float) -> np.ndarray:
        return self.load(t)

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.nodes.N, dtype=bool)
        mask[self.constraints] = False
        return np.flatnonzero(mask)


def assemble(
    prob: HeatProblem, nodes: NodeSet, method: Method | str, cfg: SolverConfig = SolverConfig()
) -> SemiDiscreteSystem:
    """Build the sparse semi-discrete system, one GMLS stencil per node."""
    start = time.perf_counter()
    method = Method(method)
    N = nodes.N
    wcfg = cfg.weight_config(nodes.h)
    r0 = cfg.r0_factor * nodes.h
    rows1, cols1, vals1 = [], [], []
    rows, cols, vals = [], [], []
    load = LoadVector(prob, N)

    for k in range(N):
        x = nodes.points[k]
        tag = nodes.tags[k]
        basis = PolyBasis(cfg.m, x, nodes.h)
        st = build_stencil(nodes, x, basis, wcfg, node=k)

        if tag is Tag.DIRICHLET:
            _put(rows, cols, vals, k, st.indices, solve_coefficients(st, basis.eval(x)))
            load.add_dirichlet(k, x)
            continue

        if method is Method.DMLPG2:
            if tag is Tag.NEUMANN:
                n = nodes.normal(k)
                mu = dmlpg2_functionals(prob, x, basis, NodeRole.NEUMANN, n)
                _put(rows, cols, vals, k, st.indices, solve_coefficients(st, mu))
                load.add_flux(k, x, n)
            else:
                mu = dmlpg2_functionals(prob, x, basis, NodeRole.PDE)
                _put(rows, cols, vals, k, st.indices, -solve_coefficients(st, mu))
                _put(rows1, cols1, vals1, k, [k], prob.heat_capacity(x[None])[:1])
                load.add_point_source(k, x)
            continue

        sub = clip_subdomain(prob.domain, x, cfg.shape, r0, k)
        inverse = False
        if method is Method.DMLPG1:
            v = MlsTest(x, r0, wcfg.c)
            lam_mass, lam_stiff = dmlpg1_functionals(prob, sub, basis, v, cfg.quad)
        elif method is Method.DMLPG5:
            v = ConstantTest()
            lam_mass, lam_stiff = dmlpg5_functionals(prob, sub, basis, cfg.quad)
        else:
            v = CompanionTest(x, r0)
            lam_mass, lam_stiff = dmlpg4_functionals(prob, sub, basis, quad=cfg.quad)
            inverse = True
        a_mass, a_stiff = solve_coefficients(st, np.stack([lam_mass, lam_stiff]))
        _put(rows1, cols1, vals1, k, st.indices, a_mass)
        _put(rows, cols, vals, k, st.indices, -a_stiff)
        if prob.source is not None:
            load.add_region(k, source_rule(prob, sub, v, cfg.quad, inverse))
        if prob.neumann is not None:
            rule = neumann_rule(prob, sub, v, cfg.quad, inverse)
            if len(rule):
                load.add_boundary(k, rule)

    load.freeze()
    A1 = _csr(rows1, cols1, vals1, N)
    A = _csr(rows, cols, vals, N)
    u0 = np.asarray(prob.initial(nodes.points), dtype=float)
    return SemiDiscreteSystem(
        A1, A, load.constraints, u0, load, nodes, prob, method,
        time.perf_counter() - start,
    )


def _put(rows, cols, vals, k, idx, coeffs):
    idx = np.asarray(idx)
    rows.append(np.full(len(idx), k))
    cols.append(idx)
    vals.append(np.asarray(coeffs, dtype=float))


def _csr(rows, cols, vals, n):
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()


# -- time integration ----------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    values: np.ndarray  # (n_times, N)
    factorizations: int = 0
    info: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]


def _step_count(dt: float, t_final: float) -> int:
    if not dt > 0:
        raise ValueError("time step must be positive")
    n = round(t_final / dt)
    if n < 1 or abs(n * dt - t_final) > 1e-12 * t_final:
        raise ValueError(f"time step {dt} does not divide final time {t_final}")
    return n


def _factor(matrix):
    try:
        return splu(sp.csc_matrix(matrix))
    except RuntimeError as exc:
        raise SingularSystem(f"iteration matrix is singular: {exc}") from exc


def step_theta(
    sys: SemiDiscreteSystem,
    dt: float,
    theta: float = 0.5,
    t_final: float | None = None,
    save_every: int = 1,
    eliminate: bool = False,
) -> Trajectory:
    """Fixed-step theta scheme; ``theta = 1/2`` is Crank-Nicolson, ``1`` backward Euler.

    Algebraic rows are enforced at the new time level.  With ``eliminate``
    the constrained unknowns are removed by block elimination before the
    solve instead of keeping their rows in the factored matrix.
    """
    t_final = sys.problem.t_final if t_final is None else t_final
    nsteps = _step_count(dt, t_final)
    C = sys.constraints
    is_con = np.zeros(sys.nodes.N, dtype=bool)
    is_con[C] = True
    keep = sp.diags((~is_con).astype(float))
    lhs = (keep @ (sys.A1 / dt + theta * sys.A) + sp.diags(is_con.astype(float)) @ sys.A).tocsr()
    explicit = (keep @ (sys.A1 / dt - (1.0 - theta) * sys.A)).tocsr()

    if eliminate:
        solve, count = _eliminated_solver(lhs, C, is_con)
    else:
        lu = _factor(lhs)
        solve, count = lu.solve, 1

    u = sys.u0.astype(float).copy()
    b_old = sys.load(0.0)
    times, values = [0.0], [u.copy()]
    for n in range(1, nsteps + 1):
        t = n * dt
        b_new = sys.load(t)
        rhs = explicit @ u + (1.0 - theta) * b_old + theta * b_new
        rhs[C] = b_new[C]
        u = solve(rhs)
        if not np.all(np.isfinite(u)):
            raise SingularSystem(f"non-finite solution at t={t}")
        b_old = b_new
        if n % save_every == 0 or n == nsteps:
            times.append(t)
            values.append(u.copy())
    return Trajectory(np.array(times), np.array(values), count, {"steps": nsteps, "dt": dt})


def _eliminated_solver(lhs, C, is_con):
    F = np.flatnonzero(~is_con)
    L = lhs.tocsr()
    B_CC = L[C][:, C]
    B_CF = L[C][:, F].toarray()
    L_FF = L[F][:, F].toarray()
    L_FC = L[F][:, C].toarray()
    lu_c = _factor(B_CC) if len(C) else None
    if lu_c is not None:
        S = lu_c.solve(B_CF)
        reduced = L_FF - L_FC @ S
    else:
        reduced = L_FF
    try:
        lu_r = lu_factor(reduced)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularSystem(str(exc)) from exc

    def solve(rhs):
        out = np.empty_like(rhs)
        if lu_c is None:
            out[F] = lu_solve(lu_r, rhs[F])
            return out
        gc = lu_c.solve(rhs[C])
        out[F] = lu_solve(lu_r, rhs[F] - L_FC @ gc)
        out[C] = gc - S @ out[F]
        return out

    return solve, (2 if lu_c is not None else 1)


def step_crank_nicolson(sys: SemiDiscreteSystem, dt: float, t_final: float | None = None, **kw) -> Trajectory:
    return step_theta(sys, dt, 0.5, t_final, **kw)


def step_backward_euler(sys: SemiDiscreteSystem, dt: float, t_final: float | None = None, **kw) -> Trajectory:
    return step_theta(sys, dt, 1.0, t_final, **kw)


def solve_steady(sys: SemiDiscreteSystem, t: float = 0.0) -> np.ndarray:
    """Solve ``A u = b(t)``."""
    return _factor(sys.A).solve(sys.load(t))


def solve_method_of_lines(
    sys: SemiDiscreteSystem,
    rtol: float = 1e-5,
    atol: float = 1e-6,
    t_span: tuple[float, float] | None = None,
    t_eval=None,
) -> Trajectory:
    """Adaptive BDF integration after eliminating the algebraic rows.

    With ``u_C = E u_F + G g(t)`` from the constraint rows, the free unknowns
    satisfy ``M u_F' + K u_F = r(t)``; the Jacobian ``-M^{-1} K`` is constant
    and handed to the integrator up front.
    """
    t_span = (0.0, sys.problem.t_final) if t_span is None else tuple(t_span)
    t_eval = np.array([t_span[1]] if t_eval is None else t_eval, dtype=float)
    C, F = sys.constraints, sys.free
    A1, A = sys.A1.tocsr(), sys.A.tocsr()
    B_CC = A[C][:, C].toarray()
    B_CF = A[C][:, F].toarray()
    try:
        lu_c = lu_factor(B_CC) if len(C) else None
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularSystem(f"constraint block is singular: {exc}") from exc

    def constrained(u_f, t):
        g = sys.load.constraint_values(t)
        return lu_solve(lu_c, g - B_CF @ u_f)

    if not len(F):
        values = np.array([lu_solve(lu_c, sys.load.constraint_values(t)) for t in t_eval])
        return Trajectory(t_eval, values, 1, {"nfev": 0})

    E = -lu_solve(lu_c, B_CF) if lu_c is not None else np.zeros((0, len(F)))
    A1_FC = A1[F][:, C].toarray()
    A_FC = A[F][:, C].toarray()
    M = A1[F][:, F].toarray() + A1_FC @ E
    K = A[F][:, F].toarray() + A_FC @ E
    try:
        lu_m = lu_factor(M)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularSystem(f"reduced mass matrix is singular: {exc}") from exc
    jac = -lu_solve(lu_m, K)

    def forcing(t):
        r = sys.load(t)[F]
        if lu_c is not None:
            r = r - A_FC @ lu_solve(lu_c, sys.load.constraint_values(t))
            r = r - A1_FC @ lu_solve(lu_c, sys.load.constraint_rate(t))
        return lu_solve(lu_m, r)

    def rhs(t, y):
        return jac @ y + forcing(t)

    sol = solve_ivp(
        rhs, t_span, sys.u0[F], method="BDF", t_eval=t_eval, jac=jac, rtol=rtol, atol=atol
    )
    if not sol.success:
        reached = sol.t[-1] if len(sol.t) else t_span[0]
        raise IntegrationFailure(f"BDF integration failed near t={reached}: {sol.message}")
    values = np.empty((len(sol.t), sys.nodes.N))
    for i, t in enumerate(sol.t):
        values[i, F] = sol.y[:, i]
        if len(C):
            values[i, C] = constrained(sol.y[:, i], t)
    return Trajectory(sol.t, values, 2, {"nfev": sol.nfev, "njev": sol.njev, "nlu": sol.nlu})


def postprocess(nodes: NodeSet, values, query_points, basis: PolyBasis, cfg: WeightConfig) -> np.ndarray:
    """MLS point values at ``query_points`` from nodal values (1D or stacked in time)."""
    values = np.asarray(values, dtype=float)
    q = np.atleast_2d(np.asarray(query_points, dtype=float))
    out = np.empty(values.shape[:-1] + (len(q),))
    for i, x in enumerate(q):
        idx, a = point_value_row(nodes, x, basis, cfg)
        out[..., i] = values[..., idx] @ a
    return out
