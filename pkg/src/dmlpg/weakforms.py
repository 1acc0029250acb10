"""Heat problems, test functions and the functional vectors of each variant.

Every stiffness-type functional here is oriented so that the local balance
reads ``d/dt lam_mass(u) = lam_stiff(u) + load(t)``.  Assembly therefore
stores ``A1 = a(lam_mass)`` and ``A = -a(lam_stiff)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import PolyBasis
from .gmls import truncated_gaussian
from .nodes import Arc, DomainSpec, PieceTag, Segment, Subdomain
from .quadrature import (
    QuadratureRule,
    arc_rule,
    clipped_region_rule,
    combine,
    log_segment_rule,
    near_segment_rule,
    segment_rule,
)

Field = Callable[[np.ndarray], np.ndarray]


def constant(value: float) -> Field:
    return lambda x: np.full(len(np.atleast_2d(x)), float(value))


def zero_gradient(x):
    return np.zeros((len(np.atleast_2d(x)), 2))


@dataclass(frozen=True)
class HeatProblem:
    """``rho c u_t = div(kappa grad u) + f`` on a rectangle.

    Spatial callables take an ``(n, 2)`` array; time-dependent ones take
    ``(x, t)`` and the Neumann flux ``kappa du/dn`` takes ``(x, t, normals)``.
    ``source`` and ``neumann`` may be ``None`` for identically zero data.
    """

    domain: DomainSpec
    conductivity: Field
    conductivity_gradient: Field
    heat_capacity: Field
    dirichlet: Callable
    initial: Field
    t_final: float = 1.0
    source: Callable | None = None
    neumann: Callable | None = None
    exact: Callable | None = None
    dirichlet_rate: Callable | None = None
    name: str = "custom"


@dataclass(frozen=True)
class QuadConfig:
    n_r: int = 8
    n_theta: int = 16
    n_segment: int = 8


class NodeRole(str, enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PDE = "pde"


# -- test functions ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MlsTest:
    """Truncated Gaussian ``phi(|x - x_k|)`` vanishing at ``r0``."""

    center: np.ndarray
    r0: float
    shape: float

    def value(self, x):
        return truncated_gaussian(np.linalg.norm(x - self.center, axis=-1), self.r0, self.shape)

    def gradient(self, x):
        d = x - self.center
        r = np.linalg.norm(d, axis=-1)
        tail = math.exp(-((self.r0 / self.shape) ** 2))
        g = -2.0 / self.shape**2 * np.exp(-((r / self.shape) ** 2)) / (1.0 - tail)
        return np.where((r < self.r0)[:, None], g[:, None] * d, 0.0)

    def region_rule(self, sub, quad):
        rule = clipped_region_rule(sub, quad.n_r, quad.n_theta)
        return _reweight(rule, rule.weights * self.value(rule.points))

    def segment_rule(self, seg, quad):
        rule = segment_rule(seg, quad.n_segment)
        return _reweight(rule, rule.weights * self.value(rule.points))


@dataclass(frozen=True, eq=False)
class ConstantTest:
    def value(self, x):
        return np.ones(len(x))

    def gradient(self, x):
        return np.zeros((len(x), 2))

    def region_rule(self, sub, quad):
        return clipped_region_rule(sub, quad.n_r, quad.n_theta)

    def segment_rule(self, seg, quad):
        return segment_rule(seg, quad.n_segment)


@dataclass(frozen=True, eq=False)
class CompanionTest:
    """``ln(r0 / r) / (2 pi)``: the Laplace fundamental solution vanishing at ``r0``."""

    center: np.ndarray
    r0: float

    def value(self, x):
        return np.log(self.r0 / np.linalg.norm(x - self.center, axis=-1)) / (2 * math.pi)

    def normal_derivative(self, x, normals):
        d = x - self.center
        return -np.einsum("ij,ij->i", d, normals) / (2 * math.pi * np.einsum("ij,ij->i", d, d))

    def region_rule(self, sub, quad):
        rule = clipped_region_rule(sub, quad.n_r, quad.n_theta, log=True)
        return _reweight(rule, rule.weights / (2 * math.pi))

    def segment_rule(self, seg, quad):
        rule = log_segment_rule(seg, self.center, self.r0, quad.n_segment)
        return _reweight(rule, rule.weights / (2 * math.pi))


def _reweight(rule: QuadratureRule, weights) -> QuadratureRule:
    return QuadratureRule(rule.points, weights, rule.degree, rule.normals)


@dataclass(frozen=True)
class CornerFactor:
    """Fraction of the companion singularity inside the subdomain."""

    alpha: float
    theta: float

    @classmethod
    def from_subdomain(cls, sub: Subdomain) -> CornerFactor:
        theta = sub.opening_angle
        if theta >= 2 * math.pi - 1e-12:
            return cls(1.0, 2 * math.pi)
        return cls(theta / (2 * math.pi), theta)


def _normal_derivatives(basis: PolyBasis, rule: QuadratureRule) -> np.ndarray:
    return np.einsum("iqk,ik->iq", basis.gradient(rule.points), rule.normals)


def _open_flux(prob, sub, basis, test, quad, with_conductivity=True) -> np.ndarray:
    """``int over boundary minus Gamma_N of [kappa] dp/dn v`` for every basis entry."""
    total = np.zeros(basis.Q)
    for piece in sub.pieces:
        if piece.tag is PieceTag.ON_NEUMANN:
            continue
        if isinstance(piece, Arc):
            rule = arc_rule(piece, quad.n_theta)
            if isinstance(test, ConstantTest):
                w = rule.weights
            elif isinstance(test, CompanionTest):
                continue  # vanishes on r = r0
            else:
                w = rule.weights * test.value(rule.points)
        else:
            rule = test.segment_rule(piece, quad)
            w = rule.weights
        if not np.any(w):
            continue
        if with_conductivity:
            w = w * prob.conductivity(rule.points)
        total += w @ _normal_derivatives(basis, rule)
    return total


# -- functional vectors ------------------------------------------------------


def dmlpg1_functionals(
    prob: HeatProblem, sub: Subdomain, basis: PolyBasis, v: MlsTest, quad: QuadConfig = QuadConfig()
):
    """Mass and stiffness vectors of the first local weak form with an MLS-type test function.

    ``lam1[q] = int rho c p_q v`` and ``lam2[q] = -int kappa grad p_q . grad v``.
    If the subdomain reaches a Dirichlet side, the flux through that piece is
    added to ``lam2`` (zero on arcs, where ``v`` vanishes).
    """
    rule = clipped_region_rule(sub, quad.n_r, quad.n_theta)
    X, w = rule.points, rule.weights
    lam1 = (w * prob.heat_capacity(X) * v.value(X)) @ basis.eval(X)
    lam2 = -np.einsum("i,iqk,ik->q", w * prob.conductivity(X), basis.gradient(X), v.gradient(X))
    lam2 += _open_flux(prob, sub, basis, v, quad)
    return lam1, lam2


def dmlpg5_functionals(
    prob: HeatProblem, sub: Subdomain, basis: PolyBasis, quad: QuadConfig = QuadConfig()
):
    """Mass and boundary-flux vectors for the constant test function."""
    rule = clipped_region_rule(sub, quad.n_r, quad.n_theta)
    lam1 = (rule.weights * prob.heat_capacity(rule.points)) @ basis.eval(rule.points)
    lam3 = _open_flux(prob, sub, basis, ConstantTest(), quad)
    return lam1, lam3


def dmlpg2_functionals(
    prob: HeatProblem, x_k, basis: PolyBasis, role: NodeRole, normal=None
) -> np.ndarray:
    """Point functionals for collocation: value, flux ``kappa du/dn`` or ``div(kappa grad u)``."""
    x = np.atleast_2d(np.asarray(x_k, dtype=float))
    role = NodeRole(role)
    if role is NodeRole.DIRICHLET:
        return basis.eval(x)[0]
    grad = basis.gradient(x)[0]
    if role is NodeRole.NEUMANN:
        if normal is None:
            raise ValueError("Neumann collocation needs the outward normal")
        return prob.conductivity(x)[0] * grad @ np.asarray(normal, dtype=float)
    kappa = prob.conductivity(x)[0]
    return grad @ prob.conductivity_gradient(x)[0] + kappa * basis.laplacian(x)[0]


def dmlpg4_functionals(
    prob: HeatProblem,
    sub: Subdomain,
    basis: PolyBasis,
    corner: CornerFactor | None = None,
    quad: QuadConfig = QuadConfig(),
):
    """Mass and stiffness vectors of the second local weak form with the companion solution.

    ``lam1[q] = int (rho c / kappa) p_q v`` and
    ``lam2[q] = -alpha p_q(x_k) - pv-int dv/dn p_q + int (grad kappa . grad p_q / kappa) v``
    plus the flux ``int dp_q/dn v`` over boundary pieces where ``v`` does not vanish
    and no Neumann data is available.  On straight pieces through ``x_k`` the kernel
    ``dv/dn`` is identically zero, which is how the principal value is realized.
    """
    corner = corner or CornerFactor.from_subdomain(sub)
    v = CompanionTest(sub.center, sub.r0)
    rule = v.region_rule(sub, quad)
    X, w = rule.points, rule.weights
    kappa = prob.conductivity(X)
    lam1 = (w * prob.heat_capacity(X) / kappa) @ basis.eval(X)

    lam2 = -corner.alpha * basis.eval(sub.center)
    for piece in sub.pieces:
        if isinstance(piece, Arc):
            br = arc_rule(piece, quad.n_theta)
        else:
            off = abs((piece.a - sub.center) @ piece.normal)
            if off <= 1e-12 * sub.r0:
                continue
            br = near_segment_rule(piece, sub.center, quad.n_segment)
        kern = v.normal_derivative(br.points, br.normals)
        lam2 -= (br.weights * kern) @ basis.eval(br.points)
    gk = prob.conductivity_gradient(X)
    lam2 += np.einsum("i,iqk,ik->q", w / kappa, basis.gradient(X), gk)
    lam2 += _open_flux(prob, sub, basis, v, quad, with_conductivity=False)
    return lam1, lam2


# -- loads ---------------------------------------------------------------------


def source_rule(prob, sub, v, quad=QuadConfig(), inverse_conductivity=False) -> QuadratureRule:
    rule = v.region_rule(sub, quad)
    if inverse_conductivity:
        rule = _reweight(rule, rule.weights / prob.conductivity(rule.points))
    return rule


def neumann_rule(prob, sub, v, quad=QuadConfig(), inverse_conductivity=False) -> QuadratureRule:
    rules = []
    for piece in sub.pieces:
        if isinstance(piece, Segment) and piece.tag is PieceTag.ON_NEUMANN:
            r = v.segment_rule(piece, quad)
            if inverse_conductivity:
                r = _reweight(r, r.weights / prob.conductivity(r.points))
            rules.append(r)
    return combine(rules)


def source_load(prob, sub, v, t: float, quad=QuadConfig(), inverse_conductivity=False) -> float:
    if prob.source is None:
        return 0.0
    rule = source_rule(prob, sub, v, quad, inverse_conductivity)
    return rule.integrate(prob.source(rule.points, t))


def neumann_load(prob, sub, v, t: float, quad=QuadConfig(), inverse_conductivity=False) -> float:
    if prob.neumann is None:
        return 0.0
    rule = neumann_rule(prob, sub, v, quad, inverse_conductivity)
    if not len(rule):
        return 0.0
    return rule.integrate(prob.neumann(rule.points, t, rule.normals))
