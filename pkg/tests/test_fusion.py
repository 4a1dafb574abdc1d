from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from rwesens.estimators import ancova
from rwesens.fusion import (bayes_twin_regression, control_variate_estimate, effective_size,
                            multiple_impute_u, registry_prevalence, split_rhat, wilson_interval)
from rwesens.model import REGISTRY, Dataset, ValidationError

from conftest import make_dataset


def _registry(u):
    n = len(u)
    return Dataset(tuple(f"r{i}" for i in range(n)), np.zeros(n), np.zeros(n),
                   np.zeros((n, 0)), (), u=np.asarray(u, float),
                   source=np.full(n, REGISTRY, dtype=object))


@pytest.mark.parametrize("k,n", [(27, 50), (0, 20), (20, 20), (540, 1000)])
def test_wilson_matches_score_equation(k, n):
    # the Wilson limits are the roots of (k/n - p)^2 = z^2 p (1 - p) / n
    zc = stats.norm.ppf(0.975)
    ph = k / n
    a = 1 + zc ** 2 / n
    roots = np.sort(np.roots([a, -(2 * ph + zc ** 2 / n), ph ** 2]).real)
    lo, hi = wilson_interval(k, n)
    assert lo == pytest.approx(max(roots[0], 0.0), abs=1e-12)
    assert hi == pytest.approx(min(roots[1], 1.0), abs=1e-12)


def test_registry_prevalence():
    p = registry_prevalence(_registry([1] * 27 + [0] * 23))
    assert p.estimate == pytest.approx(0.54)
    assert p.ci_low < 0.54 < p.ci_high
    zero = registry_prevalence(_registry([0] * 40))
    assert zero.estimate == 0 and zero.ci_low == 0 and zero.ci_high > 0


@pytest.fixture(scope="module")
def confounded():
    return make_dataset(n=400, effect=0.0, seed=11, u_strength=1.0, internal_fraction=0.3)


def test_mi_with_everything_internal_is_full_ancova(confounded):
    full = ancova(confounded, confounded.covariates, include_u=True)
    every = replace(confounded, internal=np.ones(confounded.n, dtype=bool))
    mi = multiple_impute_u(every, m=5, seed=2)
    assert mi.estimate == pytest.approx(full.estimate, abs=1e-10)
    assert mi.se == pytest.approx(full.se, rel=1e-8)


def test_mi_moves_toward_truth(confounded):
    hidden = confounded.hide_u()
    naive = ancova(hidden, hidden.covariates)
    mi = multiple_impute_u(hidden, m=20, seed=3)
    assert abs(mi.estimate) < abs(naive.estimate)
    assert mi.se > ancova(confounded, confounded.covariates, include_u=True).se


def test_mi_needs_internal_rows():
    ds = make_dataset(n=200, internal_fraction=0.1).hide_u()
    with pytest.raises(ValidationError):
        multiple_impute_u(ds)


def test_control_variate_degenerate_when_all_internal(confounded):
    every = replace(confounded, internal=np.ones(confounded.n, dtype=bool))
    cv = control_variate_estimate(every, bootstrap_b=200, seed=1)
    full = ancova(confounded, confounded.covariates, include_u=True)
    # internal and main error-prone estimates coincide, so the correction vanishes
    assert cv.estimate == pytest.approx(full.estimate, abs=1e-10)
    assert any("Var" in n or "variance" in n for n in cv.notes)


def test_control_variate_deterministic(confounded):
    hidden = confounded.hide_u()
    a = control_variate_estimate(hidden, bootstrap_b=200, seed=5)
    b = control_variate_estimate(hidden, bootstrap_b=200, seed=5)
    assert a == b
    assert abs(a.estimate) < abs(ancova(hidden, hidden.covariates).estimate) + 2 * a.se


def test_rhat_and_ess():
    rng = np.random.default_rng(0)
    iid = rng.standard_normal((4, 2000))
    assert split_rhat(iid) < 1.01
    assert effective_size(iid) == pytest.approx(8000, rel=0.15)
    shifted = iid + np.arange(4)[:, None]
    assert split_rhat(shifted) > 1.5
    ar = np.zeros((4, 4000))
    for t in range(1, 4000):
        ar[:, t] = 0.9 * ar[:, t - 1] + rng.standard_normal(4)
    # AR(1) with rho = 0.9 has ESS about n (1 - rho) / (1 + rho)
    assert effective_size(ar) == pytest.approx(16000 * 0.1 / 1.9, rel=0.3)


def test_twin_regression_with_u_fully_observed(confounded):
    every = replace(confounded, internal=np.ones(confounded.n, dtype=bool))
    summary, eff = bayes_twin_regression(every, chains=2, draws=1500, burn_in=500, seed=4)
    full = ancova(confounded, confounded.covariates, include_u=True)
    assert summary.rhat_max < 1.05
    assert eff.estimate == pytest.approx(full.estimate, abs=0.5 * full.se)
    assert eff.se == pytest.approx(full.se, rel=0.25)
    assert all(0.1 < a < 0.7 for a in summary.acceptance.values())


def test_twin_regression_validation(confounded):
    with pytest.raises(ValidationError):
        bayes_twin_regression(confounded, chains=1)
    with pytest.raises(ValidationError):
        bayes_twin_regression(confounded, draws=10)
