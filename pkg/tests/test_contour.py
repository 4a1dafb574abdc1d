from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwesens.contour import bilinear, polylines, segments


def test_single_corner_cell_hand_interpolation():
    x = np.array([0.0, 1.0])
    y = np.array([0.0, 2.0])
    v = np.array([[3.0, 0.0], [0.0, 0.0]])  # only (0, 0) above level 1
    segs = segments(x, y, v, 1.0)
    assert len(segs) == 1
    pts = sorted(segs[0])
    # left edge x=0: from 3 at y=0 to 0 at y=2 -> crossing at y = 2 * (2/3)
    # bottom edge y=0: from 3 at x=0 to 0 at x=1 -> crossing at x = 2/3
    assert pts[0] == pytest.approx((0.0, 4.0 / 3.0))
    assert pts[1] == pytest.approx((2.0 / 3.0, 0.0))


def test_constant_surface_has_no_segments():
    v = np.full((4, 5), 2.0)
    assert segments(np.arange(4.0), np.arange(5.0), v, 1.0) == []


@pytest.mark.parametrize("centre_high", [True, False])
def test_saddle_resolved_by_centre(centre_high):
    x = y = np.array([0.0, 1.0])
    hi = 2.5 if centre_high else 1.2
    v = np.array([[hi, 0.0], [0.0, hi]])  # corners 0 and 2 above level 1
    segs = segments(x, y, v, 1.0)
    assert len(segs) == 2
    mean_above = v.mean() > 1.0
    assert mean_above == centre_high
    # when the centre is above, the above corners are joined, so each
    # segment cuts off one of the below corners (1,0) and (0,1)
    for a, b in segs:
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        if centre_high:
            assert mid[0] > 0.5 and mid[1] < 0.5 or mid[0] < 0.5 and mid[1] > 0.5
        else:
            assert (mid[0] < 0.5) == (mid[1] < 0.5)


@given(st.integers(0, 10_000), st.floats(-0.8, 0.8))
@settings(max_examples=40, deadline=None)
def test_vertices_lie_on_level(seed, level):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.random(6)) + np.arange(6)
    y = np.sort(rng.random(5)) + np.arange(5)
    v = rng.uniform(-1, 1, (6, 5))
    for a, b in segments(x, y, v, level):
        for p in (a, b):
            assert abs(bilinear(x, y, v, *p) - level) < 1e-9


def test_polylines_join_a_circle():
    g = np.linspace(-1, 1, 41)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    lines = polylines(g, g, xx ** 2 + yy ** 2, 0.5)
    assert len(lines) == 1
    ring = lines[0]
    assert ring[0] == pytest.approx(ring[-1])
    r = np.hypot(*np.array(ring).T)
    assert np.all(np.abs(r - np.sqrt(0.5)) < 0.01)


def test_polylines_open_line():
    g = np.linspace(0, 1, 11)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    lines = polylines(g, g, xx + yy, 1.0)
    assert len(lines) == 1
    assert len(lines[0]) >= 10


def test_bilinear_exact_on_bilinear_surface():
    x = np.array([0.0, 1.0, 3.0])
    y = np.array([0.0, 2.0])
    f = lambda a, b: 1 + 2 * a - b + 0.5 * a * b
    v = np.array([[f(a, b) for b in y] for a in x])
    assert bilinear(x, y, v, 2.0, 1.5) == pytest.approx(f(2.0, 1.5))
    # clamped outside the grid
    assert bilinear(x, y, v, 10.0, 1.0) == pytest.approx(f(3.0, 1.0))
