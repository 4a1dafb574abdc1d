from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, stats

from rwesens.model import (Dataset, EffectEstimate, RankDeficiencyError, SensitivityPoint,
                           SeparationError, ValidationError, bisect, load_dataset, logistic,
                           ols, ols_fit, rubin_pool, t_critical, write_dataset)

from conftest import make_dataset


def test_dataset_roundtrip(tmp_path):
    ds = make_dataset(n=50).hide_u()
    path = tmp_path / "d.csv"
    write_dataset(ds, path)
    back = load_dataset(path)
    assert back.equals(ds)
    header = path.read_text().splitlines()[0]
    assert header == "id,z,y,x1,x2,x3,u,source,internal"


def test_unobserved_u_is_blank(tmp_path):
    ds = make_dataset(n=20, internal_fraction=0.5).hide_u()
    write_dataset(ds, tmp_path / "d.csv")
    rows = (tmp_path / "d.csv").read_text().splitlines()[1:]
    blanks = sum(r.split(",")[6] == "" for r in rows)
    assert blanks == int((~ds.u_observed).sum()) == 10


def test_registry_with_treated_row_rejected(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("id,z,y,a,source,internal\nr1,0,1.0,2.0,registry,0\nr2,1,2.0,1.0,registry,0\n")
    with pytest.raises(ValidationError, match="registry must be single-arm"):
        load_dataset(path)


@pytest.mark.parametrize("body,msg", [
    ("id,z,a\nr1,0,1\n", "missing column 'y'"),
    ("id,z,y,a\nr1,2,1.0,1\n", "binary"),
    ("id,z,y,a,u\nr1,0,1.0,1,0.5\n", "binary"),
    ("id,z,y,a\nr1,0,1.0,\n", "NaN covariate"),
    ("id,z,y,a\nr1,0,1.0,nan\n", "NaN covariate"),
])
def test_load_errors(tmp_path, body, msg):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(ValidationError, match=msg):
        load_dataset(path)


def test_schema_mapping(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("pid,treat,pain,age\na,1,3.5,40\nb,0,4.0,50\n")
    ds = load_dataset(path, schema={"id": "pid", "z": "treat", "y": "pain"})
    assert ds.covariates == ("age",)
    assert ds.z.tolist() == [1, 0]


def test_non_binary_u_not_silently_truncated():
    with pytest.raises(ValidationError):
        Dataset(("a", "b"), [0, 1], [1.0, 2.0], [[0.0], [1.0]], ("x",), u=[0, 2])


def test_column_u_requires_full_observation():
    ds = make_dataset(n=30).hide_u()
    with pytest.raises(ValidationError, match="unobserved"):
        ds.column("u")


def test_ols_matches_normal_equations():
    rng = np.random.default_rng(3)
    X = np.column_stack([np.ones(80), rng.standard_normal((80, 3))])
    y = X @ [1.0, 2.0, -1.0, 0.5] + rng.standard_normal(80)
    fit = ols(X, y)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    resid = y - X @ beta
    s2 = resid @ resid / (80 - 4)
    se = np.sqrt(np.diag(s2 * np.linalg.inv(X.T @ X)))
    np.testing.assert_allclose(fit.coef, beta, rtol=1e-10)
    np.testing.assert_allclose(fit.se, se, rtol=1e-10)
    t = beta / se
    np.testing.assert_allclose(fit.partial_r2, t ** 2 / (t ** 2 + 76), rtol=1e-10)


def test_ols_rank_deficiency():
    X = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(RankDeficiencyError):
        ols(X, np.arange(10.0))


def test_ols_fit_names():
    ds = make_dataset(n=100)
    fit = ols_fit(ds, "y", ["z", "x1"])
    assert fit.names == ("intercept", "z", "x1")
    assert fit.coef_of("z") == pytest.approx(fit.coef[1])


def test_logistic_matches_direct_likelihood_maximisation():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((400, 2)) * [1.0, 30.0] + [0.0, 50.0]
    X = np.column_stack([np.ones(400), x])
    eta = -1.0 + 0.8 * x[:, 0] + 0.02 * (x[:, 1] - 50)
    y = (rng.random(400) < 1 / (1 + np.exp(-eta))).astype(float)
    fit = logistic(X, y)

    def nll(b):
        e = X @ b
        return -np.sum(y * e - np.logaddexp(0, e))

    ref = optimize.minimize(nll, np.zeros(3), method="BFGS", options={"gtol": 1e-10}).x
    np.testing.assert_allclose(fit.coef, ref, atol=1e-4)
    # likelihood grid around the estimate: no neighbour does better
    best = nll(fit.coef)
    for d in np.linspace(-0.05, 0.05, 5):
        for k in range(3):
            b = fit.coef.copy()
            b[k] += d
            assert nll(b) >= best - 1e-9
    assert all(np.diff(fit.loglik_path) >= -1e-9)


def test_logistic_offset_matches_shifted_fit():
    rng = np.random.default_rng(2)
    X = np.column_stack([np.ones(300), rng.standard_normal(300)])
    off = rng.standard_normal(300)
    y = (rng.random(300) < 1 / (1 + np.exp(-(0.3 + X[:, 1] + off)))).astype(float)
    fit = logistic(X, y, offset=off)

    def nll(b):
        e = X @ b + off
        return -np.sum(y * e - np.logaddexp(0, e))

    ref = optimize.minimize(nll, np.zeros(2), method="BFGS", options={"gtol": 1e-10}).x
    np.testing.assert_allclose(fit.coef, ref, atol=1e-4)


def test_logistic_separation():
    x = np.linspace(-1, 1, 40)
    X = np.column_stack([np.ones(40), x])
    with pytest.raises(SeparationError):
        logistic(X, (x > 0).astype(float))


def test_rubin_pool_hand_case():
    est, total, df, w, b = rubin_pool([1.0, 2.0, 3.0], [0.5, 0.5, 0.5])
    assert est == 2.0
    assert w == 0.5 and b == 1.0
    assert total == pytest.approx(0.5 + (4 / 3) * 1.0)
    lam = (4 / 3) / total
    assert df == pytest.approx(2 / lam ** 2)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=12),
       st.floats(0.01, 3.0))
@settings(max_examples=50, deadline=None)
def test_rubin_total_at_least_within(ests, var):
    _, total, _, w, _ = rubin_pool(ests, [var] * len(ests), df_complete=100)
    assert total >= w - 1e-12


def test_t_critical_and_effect_from_ci(pilot_effect):
    assert t_critical(0.05, 1e6) == pytest.approx(1.959964, abs=1e-5)
    assert pilot_effect.se == pytest.approx(0.50 / (2 * stats.t.ppf(0.975, 980)))
    assert pilot_effect.significant
    with pytest.raises(ValidationError):
        EffectEstimate(1.0, 0.1, 1.2, 1.5, 10)


def test_sensitivity_point_rr_folding():
    p = SensitivityPoint.risk_ratio(0.5, 2.0)
    assert (p.assoc_treatment, p.assoc_outcome) == (2.0, 2.0)
    with pytest.raises(ValidationError):
        SensitivityPoint("partial_r2", 1.0, 0.1)


def test_bisect():
    root = bisect(lambda v: v ** 3 - 2, 0, 2)
    assert root == pytest.approx(2 ** (1 / 3), abs=1e-9)
    assert math.isclose(bisect(lambda v: 1 - v, 0, 3), 1.0, abs_tol=1e-9)
