from __future__ import annotations

import numpy as np
import pytest

from rwesens.datagen import GenConfig, calibrate, generate_main, generate_registry
from rwesens.model import Dataset, EffectEstimate

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pilot_effect() -> EffectEstimate:
    """Published ANCOVA summary: -0.30 with 95% CI (-0.55, -0.05), n = 1000, about 20 parameters."""
    return EffectEstimate.from_ci(-0.30, -0.55, -0.05, df=980, method="ANCOVA")


@pytest.fixture(scope="session")
def pilot_config() -> GenConfig:
    return GenConfig(seed=1)


@pytest.fixture(scope="session")
def pilot_calibration(pilot_config):
    return calibrate(pilot_config)


@pytest.fixture(scope="session")
def pilot_full(pilot_config, pilot_calibration) -> Dataset:
    """Generated main study with U present on every row."""
    return generate_main(pilot_config, pilot_calibration)


@pytest.fixture(scope="session")
def pilot_main(pilot_full) -> Dataset:
    """Generated main study with U kept only on the internal subsample."""
    return pilot_full.hide_u()


@pytest.fixture(scope="session")
def pilot_registry(pilot_config, pilot_calibration) -> Dataset:
    return generate_registry(pilot_config, pilot_calibration)


def make_dataset(n=300, p=3, effect=0.5, seed=0, u_strength=0.0, internal_fraction=0.3):
    """Small confounded dataset with a known structure, for unit tests."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    u = (rng.random(n) < 0.5).astype(float)
    lin = 0.4 * x[:, 0] - 0.3 * x[:, 1] + u_strength * (u - 0.5)
    z = (rng.random(n) < 1 / (1 + np.exp(-lin))).astype(int)
    y = 1.0 + effect * z + x @ np.linspace(0.5, -0.5, p) + 2 * u_strength * u + rng.standard_normal(n)
    internal = np.zeros(n, dtype=bool)
    internal[rng.permutation(n)[: int(internal_fraction * n)]] = True
    ds = Dataset(tuple(f"r{i:04d}" for i in range(n)), z, y, x,
                 tuple(f"x{j + 1}" for j in range(p)), u=u, internal=internal)
    return ds
