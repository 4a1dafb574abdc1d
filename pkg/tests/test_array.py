from __future__ import annotations

import pytest

from rwesens.bounds import array_adjusted_rr, array_grid, confounding_rr
from rwesens.model import SensitivityPoint, ValidationError


def test_hand_case():
    assert array_adjusted_rr(1.5, 0.5, 0.2, 2.0) == 1.2


def test_no_imbalance_no_bias():
    assert confounding_rr(0.3, 0.3, 5.0) == 1.0
    assert array_adjusted_rr(1.7, 0.4, 0.4, 3.0) == pytest.approx(1.7)


def test_validation():
    with pytest.raises(ValidationError):
        array_adjusted_rr(1.5, 1.2, 0.2, 2.0)


def test_grid_slices(pilot_effect):
    grids = array_grid(pilot_effect, 1.2, [0.54, 0.2], resolution=21,
                       benchmarks=[SensitivityPoint.risk_ratio(1.5, 3.0, label="pain")])
    assert [g.prevalence_slice for g in grids] == [0.54, 0.2]
    g = grids[0]
    assert (g.surface_estimate[0, :] == pilot_effect.estimate).all()
    assert g.x_axis[-1] == pytest.approx(0.5)
    assert grids[1].x_axis[-1] == pytest.approx(0.4)  # clipped at 2 * min(p, 1 - p)
    assert g.benchmarks[0].adjusted_estimate > pilot_effect.estimate
    with pytest.raises(ValidationError):
        array_grid(pilot_effect, 1.2, [1.0])
