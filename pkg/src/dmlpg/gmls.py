"""Generalized moving least squares recovery of linear functionals.

For a functional ``lam`` known only through its action on the polynomial
space, the recovery ``lam(u) ~ sum_j a_j u(x_j)`` uses

    a = W P^T (P W P^T)^{-1} lam(P)

with ``P`` the basis values at the stencil nodes and ``W`` the Gaussian
weights centered at the functional's location.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr, solve_triangular

from .basis import PolyBasis
from .nodes import NodeSet, neighbors_within

COND_LIMIT = 1e12


class GmlsError(RuntimeError):
    node: int | None = None


class StencilDeficient(GmlsError):
    def __init__(self, node, found: int, required: int):
        self.node, self.found, self.required = node, found, required
        super().__init__(
            f"stencil at node {node} has {found} weighted neighbors, basis needs {required}"
        )


class IllConditioned(GmlsError):
    def __init__(self, node, cond: float, n: int, required: int):
        self.node, self.cond, self.found, self.required = node, cond, n, required
        super().__init__(
            f"moment matrix at node {node} has condition {cond:.3e} "
            f"(limit {COND_LIMIT:.0e}, {n} nodes for {required} basis functions)"
        )


@dataclass(frozen=True)
class WeightConfig:
    """Gaussian weight with support ``delta0 * h`` and shape ``c0 * h``."""

    delta0: float
    c0: float
    h: float

    def __post_init__(self):
        if not (self.delta0 > 0 and self.c0 > 0 and self.h > 0):
            raise ValueError(f"weight parameters must be positive: {self}")

    @classmethod
    def default(cls, m: int, h: float, c0: float = 0.6) -> WeightConfig:
        return cls(2.0 * max(m, 1), c0, h)

    @property
    def delta(self) -> float:
        return self.delta0 * self.h

    @property
    def c(self) -> float:
        return self.c0 * self.h


def truncated_gaussian(r, support: float, shape: float):
    """Gaussian shifted to vanish at ``support`` and normalized to 1 at 0."""
    r = np.asarray(r, dtype=float)
    tail = math.exp(-((support / shape) ** 2))
    val = (np.exp(-((r / shape) ** 2)) - tail) / (1.0 - tail)
    return np.where(r < support, val, 0.0)


def truncated_gaussian_slope(r, support: float, shape: float):
    """Radial derivative of :func:`truncated_gaussian`."""
    r = np.asarray(r, dtype=float)
    tail = math.exp(-((support / shape) ** 2))
    val = -2.0 * r / shape**2 * np.exp(-((r / shape) ** 2)) / (1.0 - tail)
    return np.where(r < support, val, 0.0)


def gaussian_weight(cfg: WeightConfig, r):
    return truncated_gaussian(r, cfg.delta, cfg.c)


@dataclass(frozen=True)
class FunctionalVec:
    """Values of one functional on every basis polynomial."""

    values: np.ndarray
    z: np.ndarray
    m: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError("functional values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))


@dataclass(frozen=True, eq=False)
class GmlsStencil:
    indices: np.ndarray
    P: np.ndarray  # (Q, n)
    weights: np.ndarray  # (n,)
    basis: PolyBasis
    cond: float
    _op: np.ndarray  # R^{-1} Q^T from the QR of sqrt(W) P^T, shape (Q, n)

    @property
    def moment_matrix(self) -> np.ndarray:
        return (self.P * self.weights) @ self.P.T

    def __len__(self) -> int:
        return len(self.indices)


def build_stencil(
    nodes: NodeSet, center, basis: PolyBasis, cfg: WeightConfig, node: int | None = None
) -> GmlsStencil:
    """Collect the positively weighted neighbors of ``center`` and factor ``sqrt(W) P^T``."""
    center = np.asarray(center, dtype=float)
    idx = neighbors_within(nodes, center, cfg.delta)
    pts = nodes.points[idx]
    w = gaussian_weight(cfg, np.linalg.norm(pts - center, axis=1))
    keep = w > 0
    idx, pts, w = idx[keep], pts[keep], w[keep]
    if len(idx) < basis.Q:
        raise StencilDeficient(node, len(idx), basis.Q)
    P = basis.eval(pts).T
    # QR of sqrt(W) P^T avoids squaring the condition number of P W P^T
    q, r = qr(np.sqrt(w)[:, None] * P.T, mode="economic")
    cond = np.linalg.cond(r) ** 2
    if not cond < COND_LIMIT:
        raise IllConditioned(node, cond, len(idx), basis.Q)
    op = solve_triangular(r, q.T)
    return GmlsStencil(idx, P, w, basis, float(cond), op)


def solve_coefficients(st: GmlsStencil, f) -> np.ndarray:
    """Coefficient row(s) for one functional vector or a stack of them.

    A ``(k, Q)`` stack returns ``(k, n)`` rows, each computed exactly as the
    corresponding single solve would be.
    """
    if isinstance(f, FunctionalVec):
        if f.m != st.basis.m or not np.array_equal(f.z, st.basis.z):
            raise ValueError("functional was evaluated on a different basis")
        f = f.values
    f = np.asarray(f, dtype=float)
    if f.shape[-1] != st.basis.Q:
        raise ValueError(f"functional has {f.shape[-1]} entries, basis has {st.basis.Q}")
    sw = np.sqrt(st.weights)
    if f.ndim == 1:
        return sw * (f @ st._op)
    return np.stack([sw * (row @ st._op) for row in f])


def point_value_row(
    nodes: NodeSet, x, basis: PolyBasis, cfg: WeightConfig, node: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Indices and coefficients recovering ``u(x)`` from nodal values."""
    b = basis.shifted(x)
    st = build_stencil(nodes, x, b, cfg, node)
    return st.indices, solve_coefficients(st, b.eval(np.asarray(x, dtype=float)))
