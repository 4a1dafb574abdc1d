from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import replace

import numpy as np
import pytest

from rwesens.benchmark import overlay_benchmarks
from rwesens.bounds.ovb import ovb_contour
from rwesens.model import PARTIAL_R2, SensitivityPoint, ValidationError
from rwesens.svg import SvgStyle, render_contour_svg

NS = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def pilot_grid(pilot_effect):
    grid = ovb_contour(pilot_effect, resolution=61)
    return overlay_benchmarks(grid, [SensitivityPoint(PARTIAL_R2, 0.009, 0.12, label="pain")])


def test_pilot_grid_paths_and_marker(pilot_grid):
    root = ET.fromstring(render_contour_svg(pilot_grid))
    paths = root.findall(f"{NS}path")
    assert sorted(p.get("class") for p in paths) == ["nullify", "significance"]
    markers = [g for g in root.iter(f"{NS}g") if g.get("class") == "benchmark"]
    assert len(markers) == 1
    assert markers[0].find(f"{NS}circle") is not None
    assert "pain" in markers[0].find(f"{NS}text").text


def test_constant_surface_has_no_paths(pilot_grid):
    flat = replace(pilot_grid, surface_estimate=np.full_like(pilot_grid.surface_estimate, -1.0),
                   surface_t=np.full_like(pilot_grid.surface_t, -5.0),
                   level_nullify=(), level_significance=(), benchmarks=())
    root = ET.fromstring(render_contour_svg(flat))
    assert root.findall(f"{NS}path") == []


def test_rendering_is_deterministic(pilot_grid):
    a = render_contour_svg(pilot_grid)
    assert a == render_contour_svg(pilot_grid)
    assert render_contour_svg(pilot_grid, {"width": 800}) != a
    assert render_contour_svg(pilot_grid, SvgStyle()) == a


def test_out_of_range_marker_is_square(pilot_grid):
    g = overlay_benchmarks(pilot_grid, [SensitivityPoint(PARTIAL_R2, 0.9, 0.5, label="far")])
    root = ET.fromstring(render_contour_svg(g))
    markers = [m for m in root.iter(f"{NS}g") if m.get("class") == "benchmark"]
    assert markers[1].find(f"{NS}rect") is not None


def test_degenerate_grid_rejected(pilot_grid):
    with pytest.raises(ValidationError):
        render_contour_svg(replace(pilot_grid, x_axis=np.array([0.1])))
    bad = pilot_grid.surface_t.copy()
    bad[0, 0] = np.nan
    with pytest.raises(ValidationError):
        render_contour_svg(replace(pilot_grid, surface_t=bad))
