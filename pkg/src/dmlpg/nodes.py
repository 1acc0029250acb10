"""Rectangular domains, scattered node sets and clipped local subdomains."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


class Tag(str, enum.Enum):
    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class PieceTag(str, enum.Enum):
    INTERIOR_BOUNDARY = "interior_boundary"
    ON_DIRICHLET = "on_dirichlet"
    ON_NEUMANN = "on_neumann"


class Shape(str, enum.Enum):
    BALL = "ball"
    SQUARE = "square"


SIDES = ("left", "right", "bottom", "top")
_NORMALS = {
    "left": np.array([-1.0, 0.0]),
    "right": np.array([1.0, 0.0]),
    "bottom": np.array([0.0, -1.0]),
    "top": np.array([0.0, 1.0]),
}


@dataclass(frozen=True)
class DomainSpec:
    """Axis-aligned rectangle with a boundary condition type on each side."""

    x0: float = 0.0
    x1: float = 1.0
    y0: float = 0.0
    y1: float = 1.0
    left: Tag = Tag.DIRICHLET
    right: Tag = Tag.DIRICHLET
    bottom: Tag = Tag.NEUMANN
    top: Tag = Tag.NEUMANN

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError(f"degenerate rectangle [{self.x0},{self.x1}]x[{self.y0},{self.y1}]")
        for side in SIDES:
            tag = Tag(getattr(self, side))
            if tag is Tag.INTERIOR:
                raise ValueError(f"side {side!r} must be dirichlet or neumann")
            object.__setattr__(self, side, tag)

    @property
    def lengths(self) -> tuple[float, float]:
        return self.x1 - self.x0, self.y1 - self.y0

    @property
    def scale(self) -> float:
        return max(self.lengths)

    def tag(self, side: str) -> Tag:
        return getattr(self, side)

    def normal(self, side: str) -> np.ndarray:
        return _NORMALS[side].copy()

    def distance(self, side: str, x) -> float:
        """Distance from ``x`` to the line carrying ``side``; negative outside."""
        x = np.asarray(x, dtype=float)
        return {
            "left": x[0] - self.x0,
            "right": self.x1 - x[0],
            "bottom": x[1] - self.y0,
            "top": self.y1 - x[1],
        }[side]

    def endpoints(self, side: str) -> tuple[np.ndarray, np.ndarray]:
        c = self.corners()
        a, b = {"left": (0, 3), "right": (1, 2), "bottom": (0, 1), "top": (3, 2)}[side]
        return c[a], c[b]

    def corners(self) -> np.ndarray:
        return np.array(
            [[self.x0, self.y0], [self.x1, self.y0], [self.x1, self.y1], [self.x0, self.y1]]
        )

    def contains(self, x, tol: float = 0.0) -> bool:
        return all(self.distance(s, x) >= -tol for s in SIDES)

    def sides_at(self, x, tol: float) -> list[str]:
        return [s for s in SIDES if abs(self.distance(s, x)) <= tol]


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Scattered nodes with boundary classification.

    ``points`` is an ``(N, 2)`` array, ``tags`` holds one :class:`Tag` per node
    and ``h`` is the representative spacing used to scale bases and weights.
    Instances are read-only; the neighbor-search buckets are built lazily.
    """

    points: np.ndarray
    tags: tuple
    h: float
    domain: DomainSpec
    _grids: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"points must have shape (N, 2), got {pts.shape}")
        if len(self.tags) != len(pts):
            raise ValueError("one tag per node required")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        tags = tuple(Tag(t) for t in self.tags)
        tol = 1e-12 * self.h
        for k, (p, t) in enumerate(zip(pts, tags)):
            if not self.domain.contains(p, tol):
                raise ValueError(f"node {k} at {p} lies outside the domain")
            if t is not Tag.INTERIOR and not self.domain.sides_at(p, tol):
                raise ValueError(f"node {k} tagged {t.value} is not on the boundary")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "tags", tags)

    @classmethod
    def from_points(cls, domain: DomainSpec, points, h: float) -> NodeSet:
        """Tag arbitrary points: Dirichlet wins over Neumann at shared corners."""
        pts = np.asarray(points, dtype=float)
        tol = 1e-12 * h
        tags = []
        for p in pts:
            sides = domain.sides_at(p, tol)
            if not sides:
                tags.append(Tag.INTERIOR)
            elif any(domain.tag(s) is Tag.DIRICHLET for s in sides):
                tags.append(Tag.DIRICHLET)
            else:
                tags.append(Tag.NEUMANN)
        return cls(pts, tuple(tags), h, domain)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def N(self) -> int:
        return len(self.points)

    def mask(self, tag: Tag) -> np.ndarray:
        return np.array([t is tag for t in self.tags])

    def normal(self, k: int) -> np.ndarray:
        """Outward unit normal at boundary node ``k`` (bisector at corners)."""
        sides = self.domain.sides_at(self.points[k], 1e-12 * self.h)
        if not sides:
            raise ValueError(f"node {k} is interior")
        n = sum(self.domain.normal(s) for s in sides)
        return n / np.linalg.norm(n)

    def bucket_grid(self, cell: float) -> BucketGrid:
        grid = self._grids.get(cell)
        if grid is None:
            grid = self._grids[cell] = BucketGrid(self.points, cell)
        return grid

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x1", "x2", "tag"])
            for p, t in zip(self.points, self.tags):
                writer.writerow([f"{p[0]:.17g}", f"{p[1]:.17g}", t.value])

    @classmethod
    def from_csv(cls, path, domain: DomainSpec, h: float) -> NodeSet:
        with open(Path(path), newline="") as fh:
            rows = list(csv.DictReader(fh))
        pts = [(float(r["x1"]), float(r["x2"])) for r in rows]
        return cls(np.array(pts).reshape(-1, 2), tuple(Tag(r["tag"]) for r in rows), h, domain)


class BucketGrid:
    """Uniform hash grid over a fixed point cloud for radius queries."""

    def __init__(self, points: np.ndarray, cell: float):
        if not cell > 0:
            raise ValueError("cell size must be positive")
        self.points = points
        self.cell = cell
        self.origin = points.min(axis=0) if len(points) else np.zeros(2)
        keys = np.floor((points - self.origin) / cell).astype(np.int64)
        self.buckets: dict[tuple[int, int], np.ndarray] = {}
        order = np.lexsort((keys[:, 1], keys[:, 0]))
        sk = keys[order]
        if len(sk):
            breaks = np.flatnonzero(np.any(np.diff(sk, axis=0) != 0, axis=1)) + 1
            for chunk in np.split(order, breaks):
                i, j = keys[chunk[0]]
                self.buckets[(int(i), int(j))] = chunk

    def query(self, x, radius: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        reach = int(math.ceil(radius / self.cell))
        ci, cj = np.floor((x - self.origin) / self.cell).astype(np.int64)
        found = [
            self.buckets[(i, j)]
            for i in range(ci - reach, ci + reach + 1)
            for j in range(cj - reach, cj + reach + 1)
            if (i, j) in self.buckets
        ]
        if not found:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(found)
        dist = np.linalg.norm(self.points[cand] - x, axis=1)
        return np.sort(cand[dist <= radius])


def make_regular_grid(domain: DomainSpec, h: float) -> NodeSet:
    """Tensor grid with spacing ``h`` covering the closed rectangle."""
    if not h > 0:
        raise ValueError(f"spacing must be positive, got {h}")
    counts = []
    for length in domain.lengths:
        n = round(length / h)
        if n < 1 or abs(length - n * h) > 1e-12 * length:
            raise ValueError(f"spacing {h} does not divide side length {length}")
        counts.append(n)
    xs = np.linspace(domain.x0, domain.x1, counts[0] + 1)
    ys = np.linspace(domain.y0, domain.y1, counts[1] + 1)
    X, Y = np.meshgrid(xs, ys)
    return NodeSet.from_points(domain, np.column_stack([X.ravel(), Y.ravel()]), h)


def neighbors_within(nodes: NodeSet, x, radius: float) -> np.ndarray:
    """Sorted indices ``j`` with ``|x - x_j| <= radius``."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    if radius == 0:
        dist = np.linalg.norm(nodes.points - np.asarray(x, dtype=float), axis=1)
        return np.flatnonzero(dist <= 0.0)
    return nodes.bucket_grid(radius).query(x, radius)


# -- local subdomains -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Arc:
    center: np.ndarray
    radius: float
    theta0: float
    theta1: float
    tag: PieceTag = PieceTag.INTERIOR_BOUNDARY

    @property
    def length(self) -> float:
        return self.radius * (self.theta1 - self.theta0)

    @property
    def full(self) -> bool:
        return self.theta1 - self.theta0 >= TWO_PI - 1e-13


@dataclass(frozen=True, eq=False)
class Segment:
    a: np.ndarray
    b: np.ndarray
    normal: np.ndarray
    tag: PieceTag

    @property
    def length(self) -> float:
        return float(np.linalg.norm(self.b - self.a))


@dataclass(frozen=True, eq=False)
class Triangle:
    """Region piece ``conv(center, a, b)``; the edge ``ab`` is on the subdomain boundary."""

    a: np.ndarray
    b: np.ndarray


@dataclass(frozen=True, eq=False)
class Subdomain:
    """A local subdomain as a star-shaped union of sectors and triangles.

    Every region piece has the center as a vertex, so polar and collapsed
    quadratures about the center apply to all of them.
    """

    center: np.ndarray
    r0: float
    shape: Shape
    sectors: tuple  # (theta0, theta1) pairs of radius r0
    triangles: tuple
    pieces: tuple
    center_index: int | None = None

    @property
    def area(self) -> float:
        total = sum(0.5 * self.r0**2 * (b - a) for a, b in self.sectors)
        for tri in self.triangles:
            u, v = tri.a - self.center, tri.b - self.center
            total += 0.5 * abs(u[0] * v[1] - u[1] * v[0])
        return total

    @property
    def perimeter(self) -> float:
        return sum(p.length for p in self.pieces)

    @property
    def opening_angle(self) -> float:
        """Interior angle of the subdomain seen from its center."""
        total = sum(b - a for a, b in self.sectors)
        for tri in self.triangles:
            u, v = tri.a - self.center, tri.b - self.center
            total += math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))
        return total


def _piece_tag(tag: Tag) -> PieceTag:
    return PieceTag.ON_DIRICHLET if tag is Tag.DIRICHLET else PieceTag.ON_NEUMANN


def clip_subdomain(
    domain: DomainSpec,
    center,
    shape: Shape | str = Shape.BALL,
    r0: float = 0.1,
    center_index: int | None = None,
) -> Subdomain:
    """Intersect a ball of radius ``r0`` (or a square of side ``r0``) with the domain."""
    if not r0 > 0:
        raise ValueError(f"subdomain size must be positive, got {r0}")
    c = np.array(center, dtype=float)
    tol = 1e-12 * max(r0, domain.scale)
    if not domain.contains(c, tol):
        raise ValueError(f"center {c} lies outside the domain")
    shape = Shape(shape)
    if shape is Shape.BALL:
        sectors, triangles, pieces = _clip_ball(domain, c, r0)
    else:
        sectors, triangles, pieces = _clip_square(domain, c, r0)
    return Subdomain(c, r0, shape, tuple(sectors), tuple(triangles), tuple(pieces), center_index)


def _clip_ball(domain: DomainSpec, c: np.ndarray, r0: float):
    tol = 1e-12 * r0
    sides = [(s, domain.normal(s), max(domain.distance(s, c), 0.0)) for s in SIDES]

    breaks = []
    for _, n, d in sides:
        if d < r0 - tol:
            phi = math.atan2(n[1], n[0])
            alpha = math.acos(min(d / r0, 1.0))
            breaks += [phi - alpha, phi + alpha]
    for corner in domain.corners():
        v = corner - c
        dist = math.hypot(*v)
        if tol < dist < r0 - tol:
            breaks.append(math.atan2(v[1], v[0]))

    if not breaks:
        return [(0.0, TWO_PI)], [], [Arc(c, r0, 0.0, TWO_PI)]

    breaks = np.unique(np.mod(breaks, TWO_PI))
    bounds = np.append(breaks, breaks[0] + TWO_PI)
    arcs, triangles = [], []
    for ta, tb in zip(bounds[:-1], bounds[1:]):
        if tb - ta <= 1e-14:
            continue
        tm = 0.5 * (ta + tb)
        e = np.array([math.cos(tm), math.sin(tm)])
        exit_t, exit_side = math.inf, None
        for s, n, d in sides:
            en = e @ n
            if en > 1e-15 and d / en < exit_t:
                exit_t, exit_side = d / en, (n, d)
        if exit_t >= r0:
            arcs.append((float(ta), float(tb)))
        elif exit_t > tol:
            n, d = exit_side
            pts = []
            for t in (ta, tb):
                et = np.array([math.cos(t), math.sin(t)])
                pts.append(c + (d / (et @ n)) * et)
            triangles.append(Triangle(pts[0], pts[1]))

    arcs = _merge_arcs(arcs)
    pieces = [Arc(c, r0, a, b) for a, b in arcs]
    for s, n, d in sides:
        if d >= r0 - tol:
            continue
        foot = c + d * n
        tau = np.array([-n[1], n[0]])
        half = math.sqrt(max(r0 * r0 - d * d, 0.0))
        p0, p1 = domain.endpoints(s)
        s0, s1 = sorted(((p0 - foot) @ tau, (p1 - foot) @ tau))
        lo, hi = max(-half, s0), min(half, s1)
        if hi - lo > tol:
            pieces.append(Segment(foot + lo * tau, foot + hi * tau, n, _piece_tag(domain.tag(s))))
    return arcs, triangles, pieces


def _merge_arcs(arcs):
    merged = []
    for a, b in arcs:
        if merged and abs(merged[-1][1] - a) <= 1e-13:
            merged[-1] = (merged[-1][0], b)
        else:
            merged.append((a, b))
    if len(merged) > 1 and abs(merged[-1][1] - (merged[0][0] + TWO_PI)) <= 1e-13:
        first = merged.pop(0)
        merged[-1] = (merged[-1][0], first[1] + TWO_PI)
    if len(merged) == 1 and merged[0][1] - merged[0][0] >= TWO_PI - 1e-13:
        return [(0.0, TWO_PI)]
    return merged


def _clip_square(domain: DomainSpec, c: np.ndarray, r0: float):
    half = 0.5 * r0
    tol = 1e-12 * r0
    bx0, bx1 = max(domain.x0, c[0] - half), min(domain.x1, c[0] + half)
    by0, by1 = max(domain.y0, c[1] - half), min(domain.y1, c[1] + half)
    box = DomainSpec(bx0, bx1, by0, by1)
    on_side = {
        "left": abs(bx0 - domain.x0) <= tol,
        "right": abs(bx1 - domain.x1) <= tol,
        "bottom": abs(by0 - domain.y0) <= tol,
        "top": abs(by1 - domain.y1) <= tol,
    }
    triangles, pieces = [], []
    for s in SIDES:
        a, b = box.endpoints(s)
        n = box.normal(s)
        if (b - a) @ np.array([-n[1], n[0]]) < 0:
            a, b = b, a
        tag = _piece_tag(domain.tag(s)) if on_side[s] else PieceTag.INTERIOR_BOUNDARY
        pieces.append(Segment(a, b, n, tag))
        if box.distance(s, c) > tol:
            triangles.append(Triangle(a, b))
    return [], triangles, pieces
