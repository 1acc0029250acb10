import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmlpg.nodes import (
    Arc,
    DomainSpec,
    NodeSet,
    PieceTag,
    Segment,
    Shape,
    Tag,
    clip_subdomain,
    make_regular_grid,
    neighbors_within,
)
from dmlpg.quadrature import arc_rule, clipped_region_rule, segment_rule

UNIT = DomainSpec()


def test_grid_counts():
    g = make_regular_grid(UNIT, 0.5)
    assert g.N == 9
    assert sum(t is not Tag.INTERIOR for t in g.tags) == 8
    assert make_regular_grid(UNIT, 0.1).N == 121
    strip = DomainSpec(0.0, 0.04, 0.0, 0.04)
    assert make_regular_grid(strip, 0.004).N == 121


def test_grid_rejects_non_dividing_spacing():
    with pytest.raises(ValueError, match="does not divide"):
        make_regular_grid(UNIT, 0.3)
    with pytest.raises(ValueError):
        make_regular_grid(UNIT, -0.1)


def test_corner_tags_prefer_dirichlet():
    g = make_regular_grid(UNIT, 0.5)
    tags = {tuple(p): t for p, t in zip(g.points, g.tags)}
    assert tags[(0.0, 0.0)] is Tag.DIRICHLET
    assert tags[(0.5, 0.0)] is Tag.NEUMANN
    assert tags[(0.5, 0.5)] is Tag.INTERIOR


def test_nodeset_validation():
    with pytest.raises(ValueError, match="outside"):
        NodeSet(np.array([[1.5, 0.5]]), (Tag.INTERIOR,), 0.1, UNIT)
    with pytest.raises(ValueError, match="not on the boundary"):
        NodeSet(np.array([[0.5, 0.5]]), (Tag.NEUMANN,), 0.1, UNIT)


def test_boundary_normals():
    g = make_regular_grid(UNIT, 0.5)
    k = next(i for i, p in enumerate(g.points) if tuple(p) == (0.5, 1.0))
    np.testing.assert_allclose(g.normal(k), [0.0, 1.0])
    k = next(i for i, p in enumerate(g.points) if tuple(p) == (1.0, 1.0))
    np.testing.assert_allclose(g.normal(k), [math.sqrt(0.5)] * 2)


def test_csv_round_trip(tmp_path):
    g = make_regular_grid(UNIT, 0.25)
    g.to_csv(tmp_path / "nodes.csv")
    assert (tmp_path / "nodes.csv").read_text().splitlines()[0] == "x1,x2,tag"
    back = NodeSet.from_csv(tmp_path / "nodes.csv", UNIT, 0.25)
    np.testing.assert_array_equal(back.points, g.points)
    assert back.tags == g.tags


def test_neighbors_examples():
    g = make_regular_grid(UNIT, 0.5)
    idx = neighbors_within(g, [0.5, 0.5], 0.5)
    assert len(idx) == 5 and list(idx) == sorted(idx)
    assert list(neighbors_within(g, [0.5, 0.5], 0.0)) == [4]
    g11 = make_regular_grid(UNIT, 0.1)
    # brute-force oracle: (0,0),(h,0),(2h,0),(0,h),(h,h),(0,2h)
    assert len(neighbors_within(g11, [0.0, 0.0], 0.21)) == 6


@settings(max_examples=60, deadline=None)
@given(
    pts=st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=80),
    q=st.tuples(st.floats(-0.2, 1.2), st.floats(-0.2, 1.2)),
    radius=st.floats(0.01, 0.8),
)
def test_neighbors_match_brute_force(pts, q, radius):
    nodes = NodeSet.from_points(UNIT, np.array(pts), 0.1)
    brute = np.flatnonzero(np.linalg.norm(nodes.points - np.array(q), axis=1) <= radius)
    np.testing.assert_array_equal(neighbors_within(nodes, q, radius), brute)


def test_interior_ball_is_full_circle():
    sub = clip_subdomain(UNIT, [0.5, 0.5], Shape.BALL, 0.07)
    assert len(sub.pieces) == 1
    arc = sub.pieces[0]
    assert isinstance(arc, Arc) and arc.tag is PieceTag.INTERIOR_BOUNDARY
    assert sub.perimeter == pytest.approx(2 * math.pi * 0.07, rel=1e-14)


def test_neumann_midpoint_gives_half_disk():
    sub = clip_subdomain(UNIT, [0.5, 0.0], Shape.BALL, 0.07)
    arcs = [p for p in sub.pieces if isinstance(p, Arc)]
    segs = [p for p in sub.pieces if isinstance(p, Segment)]
    assert len(arcs) == 1 and len(segs) == 1
    assert arcs[0].length == pytest.approx(math.pi * 0.07, rel=1e-14)
    assert segs[0].tag is PieceTag.ON_NEUMANN
    assert segs[0].length == pytest.approx(0.14, rel=1e-14)
    assert sub.area == pytest.approx(0.5 * math.pi * 0.07**2, rel=1e-14)


def test_corner_square_is_quarter():
    sub = clip_subdomain(UNIT, [0.0, 0.0], Shape.SQUARE, 0.1)
    assert sub.area == pytest.approx(0.0025, rel=1e-14)
    assert clipped_region_rule(sub).measure == pytest.approx(0.0025, rel=1e-12)
    tags = sorted(p.tag.value for p in sub.pieces)
    assert tags == ["interior_boundary", "interior_boundary", "on_dirichlet", "on_neumann"]


def test_clipped_ball_area_against_independent_integration():
    # scipy dblquad over the clipped disk at (0.05, 0.03), r0 = 0.1
    sub = clip_subdomain(UNIT, [0.05, 0.03], Shape.BALL, 0.1)
    assert sub.area == pytest.approx(0.01709141109363149, rel=1e-12)
    assert clipped_region_rule(sub).measure == pytest.approx(0.01709141109363149, rel=1e-12)


def test_rejects_bad_radius():
    with pytest.raises(ValueError):
        clip_subdomain(UNIT, [0.5, 0.5], Shape.BALL, 0.0)


def _analytic_perimeter(c, r0):
    """Arc length inside the square plus chord lengths, from a fine angular scan."""
    t = np.linspace(0, 2 * math.pi, 400001)[:-1]
    p = c + r0 * np.column_stack([np.cos(t), np.sin(t)])
    inside = np.all((p >= 0) & (p <= 1), axis=1)
    arc = inside.mean() * 2 * math.pi * r0
    chords = 0.0
    for lo, hi, coord in ((0, c[0], 0), (1, 1 - c[0], 0), (0, c[1], 1), (1, 1 - c[1], 1)):
        d = hi
        if d < r0:
            half = math.sqrt(r0 * r0 - d * d)
            other = c[1 - coord]
            chords += min(other + half, 1) - max(other - half, 0)
    return arc, chords


@settings(max_examples=40, deadline=None)
@given(
    cx=st.floats(0, 1),
    cy=st.floats(0, 1),
    r0=st.floats(0.01, 0.3),
    shape=st.sampled_from([Shape.BALL, Shape.SQUARE]),
)
def test_pieces_measure_matches_geometry(cx, cy, r0, shape):
    sub = clip_subdomain(UNIT, [cx, cy], shape, r0)
    rule = clipped_region_rule(sub)
    assert rule.measure == pytest.approx(sub.area, rel=1e-12)
    assert np.all(rule.weights > 0)
    bnd = sum(
        (arc_rule(p) if isinstance(p, Arc) else segment_rule(p)).measure for p in sub.pieces
    )
    assert bnd == pytest.approx(sub.perimeter, rel=1e-12)
    if shape is Shape.SQUARE:
        w = min(cx + r0 / 2, 1) - max(cx - r0 / 2, 0)
        h = min(cy + r0 / 2, 1) - max(cy - r0 / 2, 0)
        assert sub.area == pytest.approx(w * h, rel=1e-12)
        assert sub.perimeter == pytest.approx(2 * (w + h), rel=1e-12)
    else:
        arc, chords = _analytic_perimeter(np.array([cx, cy]), r0)
        arcs = sum(p.length for p in sub.pieces if isinstance(p, Arc))
        segs = sum(p.length for p in sub.pieces if isinstance(p, Segment))
        assert arcs == pytest.approx(arc, abs=2e-5 * r0)
        assert segs == pytest.approx(chords, rel=1e-12, abs=1e-15)
