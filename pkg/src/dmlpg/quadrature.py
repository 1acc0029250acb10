"""Quadrature over local subdomains, their boundaries and log-singular kernels.

Region rules are built about the subdomain center: circular sectors use
polar coordinates, triangles use the collapsed (Duffy) map with the center
as the collapsed vertex.  Both turn the companion kernel ``ln(r0 / r)``
into a one-dimensional log weight handled by a dedicated Gauss rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from numpy.polynomial.legendre import leggauss

from .nodes import TWO_PI, Arc, Segment, Subdomain

MAX_PANEL = 0.5 * math.pi


class EmptyRegion(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int
    normals: np.ndarray | None = None

    def integrate(self, values) -> float:
        return float(self.weights @ np.asarray(values, dtype=float))

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.weights)


def combine(rules, dim: int = 2) -> QuadratureRule:
    rules = [r for r in rules if len(r)]
    if not rules:
        return QuadratureRule(np.empty((0, dim)), np.empty(0), 0)
    normals = None
    if all(r.normals is not None for r in rules):
        normals = np.concatenate([r.normals for r in rules])
    return QuadratureRule(
        np.concatenate([r.points for r in rules]),
        np.concatenate([r.weights for r in rules]),
        min(r.degree for r in rules),
        normals,
    )


@lru_cache(maxsize=None)
def _gl01(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def log_gauss(n: int, power: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss rule on [0, 1] for the weight ``s**power * ln(1/s)``.

    Built by Golub-Welsch from the exact moments ``1 / (power + k + 1)**2``
    in extended precision; exact for polynomials of degree ``2n - 1``.
    """
    if n < 1:
        raise ValueError("need at least one point")
    with mpmath.workdps(40 + 6 * n):
        mom = [mpmath.mpf(1) / (power + k + 1) ** 2 for k in range(2 * n + 1)]
        H = mpmath.matrix(n + 1, n + 1)
        for i in range(n + 1):
            for j in range(n + 1):
                H[i, j] = mom[i + j]
        R = mpmath.cholesky(H).T
        J = mpmath.matrix(n, n)
        for j in range(n):
            prev = R[j - 1, j] / R[j - 1, j - 1] if j > 0 else 0
            J[j, j] = R[j, j + 1] / R[j, j] - prev
            if j < n - 1:
                J[j, j + 1] = J[j + 1, j] = R[j + 1, j + 1] / R[j, j]
        E, V = mpmath.eigsy(J)
        nodes = np.array([float(E[i]) for i in range(n)])
        weights = np.array([float(mom[0] * V[0, i] ** 2) for i in range(n)])
    order = np.argsort(nodes)
    return nodes[order], weights[order]


def gauss_segment(a, b, n: int) -> QuadratureRule:
    """``n``-point Gauss-Legendre on the segment from ``a`` to ``b`` (any dimension)."""
    if n < 1:
        raise ValueError("need at least one point")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    s, w = _gl01(n)
    return QuadratureRule(a + s[:, None] * (b - a), w * np.linalg.norm(b - a), 2 * n - 1)


def segment_rule(seg: Segment, n: int = 8) -> QuadratureRule:
    r = gauss_segment(seg.a, seg.b, n)
    return QuadratureRule(r.points, r.weights, r.degree, np.tile(seg.normal, (n, 1)))


def _angles(theta0: float, theta1: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Angular nodes: trapezoidal on a full turn, panelled Gauss otherwise."""
    span = theta1 - theta0
    if span >= TWO_PI - 1e-13:
        t = theta0 + TWO_PI * np.arange(n) / n
        return t, np.full(n, TWO_PI / n)
    panels = max(1, math.ceil(span / MAX_PANEL - 1e-12))
    s, w = _gl01(n)
    edges = np.linspace(theta0, theta1, panels + 1)
    t = np.concatenate([lo + (hi - lo) * s for lo, hi in zip(edges[:-1], edges[1:])])
    wt = np.concatenate([(hi - lo) * w for lo, hi in zip(edges[:-1], edges[1:])])
    return t, wt


def arc_rule(arc: Arc, n: int = 16) -> QuadratureRule:
    t, w = _angles(arc.theta0, arc.theta1, n)
    e = np.column_stack([np.cos(t), np.sin(t)])
    deg = n - 1 if arc.full else n - 2
    return QuadratureRule(arc.center + arc.radius * e, arc.radius * w, deg, e)


def _sector(center, r0, theta0, theta1, n_r, n_theta, log: bool) -> QuadratureRule:
    t, wt = _angles(theta0, theta1, n_theta)
    if log:
        s, ws = log_gauss(n_r, 1)
        # ln(r0 / rho) = ln(1/s) on a sector of radius r0
    else:
        s, ws = _gl01(n_r)
        ws = ws * s
    e = np.column_stack([np.cos(t), np.sin(t)])
    pts = center + r0 * (s[None, :, None] * e[:, None, :])
    w = r0**2 * wt[:, None] * ws[None, :]
    full = theta1 - theta0 >= TWO_PI - 1e-13
    deg = min(2 * n_r - 2, n_theta - 1 if full else n_theta - 2)
    return QuadratureRule(pts.reshape(-1, 2), w.ravel(), deg)


def _near_log_nodes(center, a, b, n: int, max_panel: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 1] for ``g(t) ln|a + t (b - a) - center|`` with smooth ``g``.

    The parameter is split at the foot of the perpendicular from ``center``
    and each side is mapped by ``tau = (d / L) sinh(u)``, which turns the
    log of the distance into a smooth function of ``u``.  The ``u`` range is
    split into panels no longer than ``max_panel``.
    """
    e = b - a
    L = float(np.linalg.norm(e))
    t_foot = float(np.clip((center - a) @ e / (L * L), 0.0, 1.0))
    d = float(np.linalg.norm(a + t_foot * e - center))
    g, gw = _gl01(n)
    if d >= L:
        return g, gw
    nodes, weights = [], []
    for sign, span in ((-1.0, t_foot), (1.0, 1.0 - t_foot)):
        if span * L <= 1e-14 * L:
            continue
        u_max = math.asinh(span * L / d)
        edges = np.linspace(0.0, u_max, max(1, math.ceil(u_max / max_panel)) + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = lo + (hi - lo) * g
            nodes.append(t_foot + sign * (d / L) * np.sinh(u))
            weights.append((hi - lo) * gw * (d / L) * np.cosh(u))
    return np.concatenate(nodes), np.concatenate(weights)


def near_segment_rule(seg: Segment, center, n: int = 8) -> QuadratureRule:
    """Segment rule graded toward the foot of the perpendicular from ``center``.

    Suited to kernels such as ``d / (d^2 + s^2)`` whose poles lie a distance
    ``d`` off the segment.
    """
    t, wt = _near_log_nodes(np.asarray(center, dtype=float), seg.a, seg.b, n, max_panel=1.0)
    pts = seg.a + t[:, None] * (seg.b - seg.a)
    w = wt * float(np.linalg.norm(seg.b - seg.a))
    return QuadratureRule(pts, w, 2 * n - 1, np.tile(seg.normal, (len(t), 1)))


def _triangle(center, a, b, n_r, n_t, log_r0: float | None) -> QuadratureRule:
    """Collapsed rule on ``conv(center, a, b)``, optionally times ``ln(log_r0 / r)``."""
    t, wt = _gl01(n_t)
    edge = a + t[:, None] * (b - a)  # (n_t, 2)
    jac = abs((a - center)[0] * (b - a)[1] - (a - center)[1] * (b - a)[0])
    s, ws = _gl01(n_r)
    pts = [center + s[None, :, None] * (edge - center)[:, None, :]]
    w = [jac * wt[:, None] * (ws * s)[None, :]]
    if log_r0 is not None:
        # ln(r0/r) = ln(r0/rho(t)) + ln(1/s); the first factor is near-singular in t
        # when the edge passes close to the center, so it gets its own edge rule
        tn, wtn = _near_log_nodes(center, a, b, n_t)
        edge_n = a + tn[:, None] * (b - a)
        dist = np.linalg.norm(edge_n - center, axis=1)
        pts[0] = center + s[None, :, None] * (edge_n - center)[:, None, :]
        w[0] = jac * (wtn * np.log(log_r0 / dist))[:, None] * (ws * s)[None, :]
        sl, wl = log_gauss(n_r, 1)
        pts.append(center + sl[None, :, None] * (edge - center)[:, None, :])
        w.append(jac * wt[:, None] * wl[None, :])
    deg = min(2 * n_r - 2, 2 * n_t - 1)
    return QuadratureRule(
        np.concatenate([p.reshape(-1, 2) for p in pts]),
        np.concatenate([x.ravel() for x in w]),
        deg,
    )


def disk_rule(center, r0: float, n_r: int = 8, n_theta: int = 16) -> QuadratureRule:
    if not r0 > 0:
        raise EmptyRegion("disk radius must be positive")
    return _sector(np.asarray(center, dtype=float), r0, 0.0, TWO_PI, n_r, n_theta, False)


def clipped_region_rule(
    sub: Subdomain, n_r: int = 8, n_theta: int = 16, log: bool = False
) -> QuadratureRule:
    """Rule over the subdomain; with ``log`` the weights include ``ln(r0 / r)``."""
    rules = [_sector(sub.center, sub.r0, a, b, n_r, n_theta, log) for a, b in sub.sectors]
    rules += [
        _triangle(sub.center, tri.a, tri.b, n_r, n_theta, sub.r0 if log else None)
        for tri in sub.triangles
    ]
    rule = combine(rules)
    if not len(rule) or sub.area <= 0:
        raise EmptyRegion("subdomain has zero area")
    return rule


def log_singular_rule(
    center, r0: float, n: int = 8, n_theta: int = 16, sub: Subdomain | None = None
) -> QuadratureRule:
    """Rule with weights carrying ``ln(r0 / |x - center|)`` over a disk or a clipped subdomain."""
    if sub is not None:
        return clipped_region_rule(sub, n, n_theta, log=True)
    if not r0 > 0:
        raise EmptyRegion("disk radius must be positive")
    return _sector(np.asarray(center, dtype=float), r0, 0.0, TWO_PI, n, n_theta, True)


def log_segment_rule(seg: Segment, center, r0: float, n: int = 8) -> QuadratureRule:
    """Segment rule with weights carrying ``ln(r0 / |x - center|)``.

    When ``center`` lies on the segment the rule is split there and each half
    uses the log-weighted Gauss points; otherwise the kernel is smooth.
    """
    center = np.asarray(center, dtype=float)
    length = seg.length
    tangent = (seg.b - seg.a) / length
    along = float((center - seg.a) @ tangent)
    offset = np.linalg.norm(seg.a + along * tangent - center)
    if offset > 1e-12 * length or not (0.0 <= along <= length):
        t, wt = _near_log_nodes(center, seg.a, seg.b, n)
        pts = seg.a + t[:, None] * (seg.b - seg.a)
        w = length * wt * np.log(r0 / np.linalg.norm(pts - center, axis=1))
        return QuadratureRule(pts, w, 2 * n - 1, np.tile(seg.normal, (len(t), 1)))
    parts = []
    sg, wg = _gl01(n)
    sl, wl = log_gauss(n, 0)
    for end in (seg.a, seg.b):
        ell = float(np.linalg.norm(end - center))
        if ell <= 1e-12 * length:
            continue
        direction = (end - center) / ell
        pts = np.concatenate([center + ell * sg[:, None] * direction, center + ell * sl[:, None] * direction])
        w = np.concatenate([ell * wg * math.log(r0 / ell), ell * wl])
        parts.append(QuadratureRule(pts, w, 2 * n - 1, np.tile(seg.normal, (2 * n, 1))))
    return combine(parts)
