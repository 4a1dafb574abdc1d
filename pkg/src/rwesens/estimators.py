"""Primary treatment-effect estimators: ANCOVA, 1:1 propensity matching, IPW and AIPW."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import (DEFAULT_ALPHA, Dataset, EffectEstimate, NumericalError,
                    ValidationError, logistic, ols, ols_fit)
from .rng import parallel_map, substream

DEFAULT_BOOTSTRAP = 500
MIN_ESS = 10.0


def _main(dataset: Dataset) -> Dataset:
    main = dataset.main_rows()
    if main.n == 0:
        raise ValidationError("no main-source rows")
    return main


def ancova(dataset: Dataset, covariates: Sequence[str], include_u: bool = False,
           alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """OLS coefficient of treatment adjusted for ``covariates`` (and U when requested)."""
    main = _main(dataset)
    preds = ["z", *covariates]
    if include_u:
        if not main.has_u or not main.u_observed.all():
            raise ValidationError("include_u requires U observed on every row")
        preds.append("u")
    fit = ols_fit(main, "y", preds)
    return EffectEstimate.from_t(fit.coef_of("z"), fit.se_of("z"), fit.df, alpha,
                                 method="ANCOVA with U" if include_u else "ANCOVA")


@dataclass(frozen=True)
class PropensityModel:
    names: tuple[str, ...]
    coefficients: np.ndarray
    scores: np.ndarray
    overlap: dict

    def to_dict(self) -> dict:
        return {"coefficients": dict(zip(self.names, map(float, self.coefficients))),
                "overlap": self.overlap}


def _overlap(scores, z) -> dict:
    out = {}
    for arm, label in ((1, "treated"), (0, "control")):
        s = scores[z == arm]
        out[label] = {"min": float(s.min()), "max": float(s.max())} if len(s) else None
    return out


def propensity_model(dataset: Dataset, covariates: Sequence[str]) -> PropensityModel:
    main = _main(dataset)
    X = main.design(covariates)
    fit = logistic(X, main.z.astype(float), ("intercept", *covariates))
    scores = fit.fitted
    return PropensityModel(fit.names, fit.coef, scores, _overlap(scores, main.z))


def _check_arms(z):
    if z.sum() == 0 or z.sum() == len(z):
        raise ValidationError("both treatment arms must be non-empty")


def _bootstrap_se(stat, n: int, b: int, seed: int, tag: str) -> tuple[float, int]:
    """Standard deviation of ``stat(idx)`` over ``b`` resamples of ``range(n)``.

    Replicates whose statistic fails numerically are dropped and counted.
    """
    def one(k):
        idx = substream(seed, tag, k).integers(0, n, n)
        try:
            return stat(idx)
        except (NumericalError, ValidationError):
            return math.nan

    vals = np.array(parallel_map(one, list(range(b))))
    ok = vals[np.isfinite(vals)]
    if len(ok) < max(2, b // 2):
        raise NumericalError(f"bootstrap failed: only {len(ok)} of {b} replicates usable")
    return float(ok.std(ddof=1)), b - len(ok)


# ---------------------------------------------------------------------------
# Matching


def _greedy_match(logit_score: np.ndarray, z: np.ndarray, ids: Sequence[str],
                  caliper: float | None):
    """Greedy 1:1 nearest-neighbour matching without replacement.

    Treated units are processed by descending score (id breaks ties); each
    takes the closest unused control, the smaller id winning distance ties.
    """
    treated = [i for i in range(len(z)) if z[i] == 1]
    controls = sorted((i for i in range(len(z)) if z[i] == 0), key=lambda i: ids[i])
    treated.sort(key=lambda i: (-logit_score[i], ids[i]))
    c_idx = np.array(controls)
    c_score = logit_score[c_idx]
    free = np.ones(len(controls), dtype=bool)
    pairs = []
    for t in treated:
        if not free.any():
            break
        dist = np.where(free, np.abs(c_score - logit_score[t]), np.inf)
        k = int(np.argmin(dist))
        if caliper is not None and dist[k] > caliper:
            continue
        free[k] = False
        pairs.append((t, int(c_idx[k])))
    return pairs, len(treated)


def ps_match_att(dataset: Dataset, covariates: Sequence[str], caliper: float | None = None,
                 bootstrap: int = DEFAULT_BOOTSTRAP, seed: int = 0,
                 alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """ATT from greedy 1:1 matching on the logit propensity score; pair-bootstrap se."""
    main = _main(dataset)
    _check_arms(main.z)
    if caliper is not None and caliper < 0:
        raise ValidationError("caliper must be non-negative")
    pm = propensity_model(main, covariates)
    lp = np.log(pm.scores / (1 - pm.scores))
    pairs, n_treated = _greedy_match(lp, main.z, main.ids, caliper)
    if not pairs:
        raise NumericalError("no treated unit found a match within the caliper")
    notes = []
    unmatched = n_treated - len(pairs)
    if unmatched > 0.2 * n_treated:
        notes.append(f"warning: {unmatched} of {n_treated} treated units unmatched")
    diffs = np.array([main.y[t] - main.y[c] for t, c in pairs])
    att = float(diffs.mean())
    if len(pairs) < 2:
        raise NumericalError("need at least two matched pairs for a standard error")
    se, failed = _bootstrap_se(lambda idx: float(diffs[idx].mean()), len(diffs),
                               bootstrap, seed, "psm")
    return EffectEstimate.from_t(att, se, len(pairs) - 1, alpha, estimand="ATT",
                                 method="1:1 propensity score matching", notes=tuple(notes))


# ---------------------------------------------------------------------------
# Weighting


def _scores(X, z, trim):
    e = logistic(X, z).fitted
    if trim > 0:
        e = np.clip(e, trim, 1 - trim)
    if not ((e > 0) & (e < 1)).all():
        raise NumericalError("propensity scores outside (0, 1) after trimming")
    return e


def _ess(w):
    return float(w.sum() ** 2 / (w ** 2).sum()) if len(w) else 0.0


def _ipw_point(y, z, e, stabilized):
    w1 = z / e
    w0 = (1 - z) / (1 - e)
    if _ess(w1[z == 1]) < MIN_ESS or _ess(w0[z == 0]) < MIN_ESS:
        raise NumericalError("effective sample size below 10 in an arm")
    if stabilized:
        # arm-prevalence factors cancel in the normalised weighted means
        return float((w1 @ y) / w1.sum() - (w0 @ y) / w0.sum())
    n = len(y)
    return float((w1 @ y) / n - (w0 @ y) / n)


def ipw_ate(dataset: Dataset, covariates: Sequence[str], stabilized: bool = True,
            trim: float = 0.01, bootstrap: int = DEFAULT_BOOTSTRAP, seed: int = 0,
            alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """Inverse-probability-weighted ATE; se from bootstrapping the whole pipeline.

    ``trim`` truncates scores to ``[trim, 1 - trim]``.
    """
    if not 0 <= trim < 0.5:
        raise ValidationError("trim must lie in [0, 0.5)")
    main = _main(dataset)
    _check_arms(main.z)
    X = main.design(covariates)
    z = main.z.astype(float)
    y = main.y
    est = _ipw_point(y, z, _scores(X, z, trim), stabilized)

    def stat(idx):
        zb = z[idx]
        _check_arms(zb)
        return _ipw_point(y[idx], zb, _scores(X[idx], zb, trim), stabilized)

    se, failed = _bootstrap_se(stat, main.n, bootstrap, seed, "ipw")
    notes = (f"{failed} bootstrap replicates failed",) if failed else ()
    return EffectEstimate.from_t(est, se, main.n - 1, alpha,
                                 method="IPW (stabilized)" if stabilized else "IPW", notes=notes)


def aipw_ate(dataset: Dataset, covariates: Sequence[str],
             outcome_covariates: Sequence[str] | None = None, trim: float = 0.01,
             alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """Augmented IPW (doubly robust) ATE with influence-function standard error.

    ``covariates`` feed the propensity model; ``outcome_covariates`` (default
    the same) feed the per-arm linear outcome models.
    """
    if not 0 <= trim < 0.5:
        raise ValidationError("trim must lie in [0, 0.5)")
    main = _main(dataset)
    _check_arms(main.z)
    oc = list(covariates if outcome_covariates is None else outcome_covariates)
    z = main.z.astype(float)
    y = main.y
    e = _scores(main.design(covariates), z, trim)
    Xo = main.design(oc)
    mu = {}
    for arm in (0, 1):
        rows = main.z == arm
        mu[arm] = Xo @ ols(Xo[rows], y[rows]).coef
    w1, w0 = z / e, (1 - z) / (1 - e)
    if _ess(w1[z == 1]) < MIN_ESS or _ess(w0[z == 0]) < MIN_ESS:
        raise NumericalError("effective sample size below 10 in an arm")
    psi = mu[1] - mu[0] + w1 * (y - mu[1]) - w0 * (y - mu[0])
    est = float(psi.mean())
    se = float(psi.std(ddof=1) / math.sqrt(main.n))
    return EffectEstimate.from_t(est, se, main.n - 1, alpha, method="AIPW")


def difference_in_means(dataset: Dataset) -> float:
    main = _main(dataset)
    return float(main.y[main.z == 1].mean() - main.y[main.z == 0].mean())
