from __future__ import annotations

import numpy as np
import pytest

from rwesens.estimators import (_greedy_match, aipw_ate, ancova, difference_in_means, ipw_ate,
                                propensity_model, ps_match_att)
from rwesens.model import Dataset, NumericalError, ValidationError
from rwesens.rng import set_threads

from conftest import make_dataset


@pytest.fixture(scope="module")
def ds():
    return make_dataset(n=400, effect=0.5, seed=4)


def test_ancova_normal_equations(ds):
    e = ancova(ds, ["x1", "x2", "x3"])
    X = np.column_stack([np.ones(ds.n), ds.z, ds.x])
    beta = np.linalg.solve(X.T @ X, X.T @ ds.y)
    assert e.estimate == pytest.approx(beta[1], rel=1e-10)
    assert e.df == ds.n - 5


def test_ancova_with_u_requires_full_u(ds):
    with pytest.raises(ValidationError):
        ancova(ds.hide_u(), ["x1"], include_u=True)
    assert ancova(ds, ["x1"], include_u=True).method == "ANCOVA with U"


def test_estimators_recover_effect(ds):
    covs = ["x1", "x2", "x3"]
    for e in (ancova(ds, covs), ipw_ate(ds, covs, bootstrap=100, seed=1),
              aipw_ate(ds, covs), ps_match_att(ds, covs, bootstrap=100, seed=1)):
        assert abs(e.estimate - 0.5) < 3 * e.se, e.method


def test_no_covariates_reduce_to_difference_in_means(ds):
    dim = difference_in_means(ds)
    assert ipw_ate(ds, [], bootstrap=50).estimate == pytest.approx(dim, abs=1e-9)
    assert aipw_ate(ds, []).estimate == pytest.approx(dim, abs=1e-9)


def test_unstabilized_ipw_hand_case():
    # constant propensity 0.5: HT estimator is 2 * mean(z*y) - 2 * mean((1-z)*y)
    z = np.array([1, 0] * 20)
    y = np.arange(40.0)
    ds = Dataset(tuple(str(i) for i in range(40)), z, y, np.zeros((40, 0)), ())
    est = ipw_ate(ds, [], stabilized=False, trim=0.0, bootstrap=30).estimate
    assert est == pytest.approx(2 * np.mean(z * y) - 2 * np.mean((1 - z) * y))


def test_greedy_match_hand_case():
    score = np.array([0.9, 0.5, 0.85, 0.55, 0.1])
    z = np.array([1, 1, 0, 0, 0])
    ids = ["t1", "t2", "c1", "c2", "c3"]
    pairs, n_t = _greedy_match(score, z, ids, None)
    assert n_t == 2 and pairs == [(0, 2), (1, 3)]
    pairs, _ = _greedy_match(score, z, ids, caliper=0.02)
    assert pairs == []


def test_match_tie_broken_by_id():
    score = np.array([0.5, 0.4, 0.6])
    z = np.array([1, 0, 0])
    pairs, _ = _greedy_match(score, z, ["t", "c_b", "c_a"], None)
    assert pairs == [(0, 2)]  # equidistant controls: smaller id wins


def test_caliper_warning_and_failure(ds):
    e = ps_match_att(ds, ["x1", "x2"], caliper=0.001, bootstrap=50)
    assert any("unmatched" in n for n in e.notes)
    with pytest.raises((NumericalError, ValidationError)):
        ps_match_att(ds, ["x1", "x2"], caliper=0.0, bootstrap=50)


def test_bootstrap_independent_of_threads(ds):
    a = ipw_ate(ds, ["x1"], bootstrap=60, seed=9)
    set_threads(4)
    try:
        b = ipw_ate(ds, ["x1"], bootstrap=60, seed=9)
    finally:
        set_threads(1)
    assert a == b


def test_propensity_overlap(ds):
    pm = propensity_model(ds, ["x1", "x2"])
    assert 0 < pm.overlap["treated"]["min"] <= pm.overlap["treated"]["max"] < 1
    assert ((pm.scores > 0) & (pm.scores < 1)).all()


def test_trim_validation(ds):
    with pytest.raises(ValidationError):
        ipw_ate(ds, ["x1"], trim=0.6)
