from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwesens.bounds import (bounding_factor, evalue, evalue_contour, evalue_from_rr, evalue_rr,
                            evalue_smd, rr_to_smd, smd_to_rr)
from rwesens.model import EffectEstimate, ValidationError


def test_known_values():
    assert evalue_rr(1.0) == 1.0
    assert evalue_rr(2.0) == pytest.approx(2 + math.sqrt(2))
    assert evalue_rr(0.5) == pytest.approx(evalue_rr(2.0))
    assert evalue_smd(0.25).e_point == pytest.approx(1.8218, abs=1e-3)


def test_smd_round_trip():
    assert rr_to_smd(smd_to_rr(0.4)) == pytest.approx(0.4)
    assert smd_to_rr(-0.4) == smd_to_rr(0.4)


def _grid_min_equal_strength(rr, step):
    """Smallest common strength whose bounding factor reaches rr, by grid search."""
    for s in np.arange(1.0, 20.0, step):
        if bounding_factor(s, s) >= rr:
            return s
    return math.inf


@pytest.mark.parametrize("seed", range(3))
def test_evalue_matches_bounding_factor_grid(seed):
    rng = np.random.default_rng(seed)
    step = 1e-3
    for rr in rng.uniform(1.01, 6.0, 15):
        assert abs(_grid_min_equal_strength(rr, step) - evalue_rr(rr)) <= step + 1e-12


@given(st.floats(1.001, 50.0))
@settings(max_examples=100, deadline=None)
def test_bounding_factor_at_evalue_equals_rr(rr):
    e = evalue_rr(rr)
    assert bounding_factor(e, e) == pytest.approx(rr, rel=1e-9)


def test_ci_crossing_null_gives_one():
    res = evalue_from_rr(1.3, 0.9, 1.8)
    assert res.e_ci == 1.0
    assert res.e_point > 1


def test_protective_uses_upper_limit():
    res = evalue_from_rr(0.5, 0.3, 0.8)
    assert res.e_ci == pytest.approx(evalue_rr(0.8))


def test_difference_scale_needs_sd(pilot_effect):
    with pytest.raises(ValidationError):
        evalue(pilot_effect)
    res = evalue(pilot_effect, 1.2)
    assert res.e_point == pytest.approx(evalue_smd(0.25).e_point)
    assert evalue(EffectEstimate(1.0, 0.0, 1.0, 1.0, 1), scale="rr").e_point == 1.0


def test_evalue_contour_levels(pilot_effect):
    grid = evalue_contour(pilot_effect, 1.2, resolution=41)
    assert grid.level_nullify
    # the nullify curve passes near the diagonal point (E, E)
    e = evalue_smd(0.25).e_point
    pts = np.array([p for line in grid.level_nullify for p in line])
    assert np.min(np.hypot(pts[:, 0] - e, pts[:, 1] - e)) < 0.05
