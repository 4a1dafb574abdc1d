from __future__ import annotations

import numpy as np
import pytest

from rwesens.datagen import (PAIN, GenConfig, correlation_matrix, generate_registry, mark_internal,
                             write_study)
from rwesens.model import REGISTRY, ValidationError, load_dataset


def test_default_correlation_is_psd():
    names = GenConfig().covariate_names
    c = correlation_matrix(names)
    assert np.allclose(c, c.T)
    assert np.linalg.eigvalsh(c).min() > 0


def test_pilot_diagnostics(pilot_calibration):
    d = pilot_calibration[4].realized
    assert d["u_prevalence"] == pytest.approx(0.54, abs=0.04)
    assert d["r2_tu"] == pytest.approx(0.022, abs=0.005)
    assert d["r2_yu"] == pytest.approx(0.122, abs=0.005)
    assert d["naive_estimate"] == pytest.approx(-0.30, abs=0.04)
    assert abs(d["adjusted_estimate"]) < 2 * d["adjusted_se"]


def test_pain_is_calibrated(pilot_calibration):
    d = pilot_calibration[4].realized
    assert d["pain_r2_treatment"] == pytest.approx(0.009, abs=0.003)
    assert d["pain_r2_outcome"] == pytest.approx(0.12, abs=0.01)


def test_internal_subsample_size(pilot_full, pilot_config):
    assert pilot_full.internal.sum() == round(pilot_config.internal_fraction * pilot_full.n)
    hidden = pilot_full.hide_u()
    assert hidden.u_observed.sum() == pilot_full.internal.sum()


def test_registry_single_arm(pilot_registry, pilot_config):
    assert pilot_registry.n == pilot_config.n_registry
    assert (pilot_registry.z == 0).all()
    assert (pilot_registry.source == REGISTRY).all()
    assert pilot_registry.u.mean() == pytest.approx(0.54, abs=0.01)


def test_generation_is_deterministic(pilot_config, pilot_registry):
    again = generate_registry(pilot_config)
    assert np.array_equal(again.y, pilot_registry.y)
    assert np.array_equal(again.x, pilot_registry.x)


def test_mark_internal_fraction(pilot_full):
    a = mark_internal(pilot_full, 0.1, seed=3)
    b = mark_internal(pilot_full, 0.1, seed=3)
    assert a.internal.sum() == 100
    assert np.array_equal(a.internal, b.internal)
    with pytest.raises(ValidationError):
        mark_internal(pilot_full, 0.0, seed=3)


def test_config_validation():
    with pytest.raises(ValidationError):
        GenConfig.from_dict({"bogus": 1})
    with pytest.raises(ValidationError):
        GenConfig(u_prevalence_target=1.2)
    with pytest.raises(ValidationError):
        GenConfig(covariates=tuple(c for c in GenConfig().covariates if c.name != PAIN))
    cfg = GenConfig.from_dict(GenConfig(seed=7).to_dict())
    assert cfg == GenConfig(seed=7, correlation=cfg.correlation)


def test_write_study_roundtrip(tmp_path):
    manifest = write_study(GenConfig(seed=1, n_main=300, n_registry=200, naive_target=None,
                                     naive_se_target=0.2), tmp_path)
    main = load_dataset(tmp_path / "main.csv")
    reg = load_dataset(tmp_path / "registry.csv")
    assert main.n == 300 and reg.n == 200
    assert main.u_observed.sum() == 60
    assert manifest["seed"] == 1
