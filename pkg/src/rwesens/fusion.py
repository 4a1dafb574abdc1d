"""Combine the main study with partial information on U.

Three estimators use the internal subsample (rows where U was collected):
multiple imputation, a control-variate calibration of the error-prone
estimator, and a joint Bayesian model of outcome and confounder.  The
registry contributes the prevalence of U.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .model import (DEFAULT_ALPHA, ConvergenceError, Dataset, EffectEstimate, NumericalError,
                    ValidationError, expit, logistic, ols, rubin_pool)
from .rng import parallel_map, substream

MIN_INTERNAL = 50
VAR_FLOOR = 1e-12
RHAT_LIMIT = 1.05


def _internal_main(dataset: Dataset) -> tuple[Dataset, np.ndarray]:
    main = dataset.main_rows()
    if main.n == 0:
        raise ValidationError("no main-source rows")
    if not main.has_u:
        raise ValidationError("dataset carries no U column")
    known = main.u_observed
    if int(known.sum()) < MIN_INTERNAL:
        raise ValidationError(f"need at least {MIN_INTERNAL} rows with U observed, "
                              f"found {int(known.sum())}")
    return main, known


def _covariates(main: Dataset, covariates: Sequence[str] | None) -> list[str]:
    return list(main.covariates if covariates is None else covariates)


def _ancova_coef(X: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    fit = ols(X, y)
    return float(fit.coef[1]), float(fit.se[1])


# ---------------------------------------------------------------------------
# Multiple imputation


def multiple_impute_u(main: Dataset, m: int = 20, seed: int = 0,
                      covariates: Sequence[str] | None = None,
                      alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """Impute U from a logistic model on (X, Z, Y) fit to the internal rows, then pool.

    Each imputation draws the imputation-model coefficients from the normal
    approximation to their posterior (IRLS estimate and covariance) before
    drawing U for the rows where it is missing.
    """
    if m < 5:
        raise ValidationError("m must be at least 5")
    data, known = _internal_main(main)
    covs = _covariates(data, covariates)
    n = data.n
    base = np.column_stack([np.ones(n), data.z.astype(float), data.design(covs)[:, 1:]])
    W = np.column_stack([base, data.y])
    u_obs = np.where(known, data.u, 0).astype(float)
    imp = logistic(W[known], u_obs[known])  # raises SeparationError on separation
    chol = np.linalg.cholesky(imp.cov + 1e-12 * np.eye(len(imp.coef)))
    missing = ~known
    df_complete = n - base.shape[1] - 1

    def one(k: int) -> tuple[float, float]:
        rng = substream(seed, "mi", k)
        beta = imp.coef + chol @ rng.standard_normal(len(imp.coef))
        u = u_obs.copy()
        u[missing] = (rng.random(int(missing.sum())) < expit(W[missing] @ beta)).astype(float)
        est, se = _ancova_coef(np.column_stack([base, u]), data.y)
        return est, se * se

    results = parallel_map(one, list(range(m)))
    est, total, df, w, b = rubin_pool([r[0] for r in results], [r[1] for r in results],
                                      df_complete=df_complete)
    notes = (f"m={m}", f"within={w:.6g}", f"between={b:.6g}")
    return EffectEstimate.from_t(est, math.sqrt(total), max(1, int(df)), alpha,
                                 method="multiple imputation of U", notes=notes)


# ---------------------------------------------------------------------------
# Control-variate calibration


@dataclass(frozen=True)
class ControlVariateDetail:
    tau_internal: float
    tau_ep_internal: float
    tau_ep_main: float
    gamma: float
    var_internal: float
    var_cv: float
    corr_internal_d: float
    replicates: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _cv_pieces(data: Dataset, known: np.ndarray, covs: list[str], idx: np.ndarray):
    n = len(idx)
    z = data.z[idx].astype(float)
    X = data.design(covs)[idx]
    ep = np.column_stack([X[:, :1], z, X[:, 1:]])
    y = data.y[idx]
    k = known[idx]
    u = data.u[idx].astype(float)
    if k.sum() <= ep.shape[1] + 1 or n <= ep.shape[1]:
        raise NumericalError("too few rows in a bootstrap replicate")
    tau_int = ols(np.column_stack([ep[k], u[k]]), y[k]).coef[1]
    tau_ep_int = ols(ep[k], y[k]).coef[1]
    tau_ep_main = ols(ep, y).coef[1]
    return float(tau_int), float(tau_ep_int), float(tau_ep_main)


def control_variate_estimate(main: Dataset, bootstrap_b: int = 1000, seed: int = 0,
                             covariates: Sequence[str] | None = None,
                             alpha: float = DEFAULT_ALPHA,
                             detail: bool = False):
    """Calibrate the U-adjusted internal estimate with the error-prone estimator gap.

    ``tau_cv = tau_int - gamma * (tau_ep_int - tau_ep_main)`` where gamma is
    Cov(tau_int, D) / Var(D) over a paired bootstrap that resamples main rows
    (and with them the internal rows) jointly.  When ``detail`` is true a
    ``(EffectEstimate, ControlVariateDetail)`` pair is returned.
    """
    if bootstrap_b < 20:
        raise ValidationError("bootstrap_b must be at least 20")
    data, known = _internal_main(main)
    covs = _covariates(data, covariates)
    n = data.n
    t_int, t_epi, t_epm = _cv_pieces(data, known, covs, np.arange(n))

    def one(k: int):
        idx = substream(seed, "cv", k).integers(0, n, n)
        try:
            return _cv_pieces(data, known, covs, idx)
        except (NumericalError, ValidationError):
            return None

    reps = [r for r in parallel_map(one, list(range(bootstrap_b))) if r is not None]
    if len(reps) < max(20, bootstrap_b // 2):
        raise NumericalError(f"control-variate bootstrap failed: {len(reps)} usable replicates")
    arr = np.array(reps)
    ti = arr[:, 0]
    d = arr[:, 1] - arr[:, 2]
    var_d = float(d.var(ddof=1))
    var_i = float(ti.var(ddof=1))
    notes = []
    if var_d < VAR_FLOOR:
        gamma = 0.0
        notes.append("warning: degenerate calibration (Var(D) ~ 0); internal estimate returned")
        corr = 0.0
    else:
        cov = float(np.cov(ti, d, ddof=1)[0, 1])
        gamma = cov / var_d
        corr = cov / math.sqrt(var_i * var_d) if var_i > 0 else 0.0
    est = t_int - gamma * (t_epi - t_epm)
    cv_reps = ti - gamma * d
    var_cv = float(cv_reps.var(ddof=1))
    df = int(known.sum()) - (len(covs) + 3)
    if len(reps) < bootstrap_b:
        notes.append(f"{bootstrap_b - len(reps)} bootstrap replicates failed")
    eff = EffectEstimate.from_t(est, math.sqrt(var_cv), max(1, df), alpha,
                                method="control-variate calibration", notes=tuple(notes))
    if detail:
        return eff, ControlVariateDetail(t_int, t_epi, t_epm, gamma, var_i, var_cv, corr, len(reps))
    return eff


# ---------------------------------------------------------------------------
# Twin regression


@dataclass(frozen=True)
class TwinPriors:
    coef_sd: float = 10.0
    sigma_scale: float = 5.0

    def __post_init__(self) -> None:
        if not (self.coef_sd > 0 and self.sigma_scale > 0):
            raise ValidationError("prior scales must be positive")

    @classmethod
    def from_dict(cls, d: dict | None) -> TwinPriors:
        return cls(**(d or {}))


@dataclass(frozen=True)
class PosteriorSummary:
    mean: float
    sd: float
    credible_low: float
    credible_high: float
    n_chains: int
    n_draws: int
    rhat_max: float
    ess_min: float
    acceptance: dict

    def __post_init__(self) -> None:
        if not self.credible_low <= self.mean <= self.credible_high:
            raise ValidationError("credible interval must contain the posterior mean")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def split_rhat(chains: np.ndarray) -> float:
    """Split-chain potential scale reduction for an array of shape (chains, draws)."""
    c, n = chains.shape
    half = n // 2
    parts = np.concatenate([chains[:, :half], chains[:, half:2 * half]])
    m, k = parts.shape
    means = parts.mean(axis=1)
    w = parts.var(axis=1, ddof=1).mean()
    b = k * means.var(ddof=1)
    if w <= 0:
        return 1.0 if b <= 0 else math.inf
    var_plus = (k - 1) / k * w + b / k
    return float(math.sqrt(var_plus / w))


def effective_size(chains: np.ndarray) -> float:
    """Multi-chain ESS with Geyer's initial positive sequence on averaged autocorrelations."""
    c, n = chains.shape
    x = chains - chains.mean(axis=1, keepdims=True)
    var = x.var(axis=1).mean()
    if var <= 0:
        return float(c * n)
    f = np.fft.rfft(x, n=2 * n, axis=1)
    acov = np.fft.irfft(f * np.conj(f), axis=1)[:, :n] / n
    rho = acov.mean(axis=0) / var
    tau = -1.0
    for t in range(0, n - 1, 2):
        pair = rho[t] + rho[t + 1]
        if pair <= 0:
            break
        tau += 2 * pair
    return float(c * n / max(tau, 1e-12))


class _TwinChain:
    """State and updates of one Metropolis-within-Gibbs chain."""

    def __init__(self, y, Xo, Wu, u_obs, known, priors, rng, init):
        self.y, self.Xo, self.Wu = y, Xo, Wu
        self.known, self.latent = known, ~known
        self.priors, self.rng = priors, rng
        beta, log_sigma, gamma, u = init
        self.beta, self.log_sigma, self.gamma = beta, log_sigma, gamma
        self.u = np.where(known, u_obs, u)
        self.ju = Xo.shape[1]  # U is the last outcome-model coefficient

    # log densities ---------------------------------------------------------

    def _mean(self, beta):
        return self.Xo @ beta[:-1] + beta[-1] * self.u

    def log_outcome(self, beta, log_sigma):
        s = math.exp(log_sigma)
        r = self.y - self._mean(beta)
        return -len(r) * log_sigma - 0.5 * float(r @ r) / (s * s)

    def log_confounder(self, gamma):
        eta = self.Wu @ gamma
        return float(self.u @ eta - np.logaddexp(0.0, eta).sum())

    def log_prior_coef(self, v):
        return -0.5 * float(v @ v) / self.priors.coef_sd ** 2

    def log_prior_sigma(self, log_sigma):
        # half-Cauchy on sigma plus the log-transform Jacobian
        s = math.exp(log_sigma)
        return -math.log1p((s / self.priors.sigma_scale) ** 2) + log_sigma

    def log_joint(self) -> float:
        return (self.log_outcome(self.beta, self.log_sigma) + self.log_confounder(self.gamma)
                + self.log_prior_coef(self.beta) + self.log_prior_coef(self.gamma)
                + self.log_prior_sigma(self.log_sigma))

    # updates ---------------------------------------------------------------

    def gibbs_u(self):
        s2 = math.exp(2 * self.log_sigma)
        bu = self.beta[-1]
        r0 = self.y - self.Xo @ self.beta[:-1]
        logit = self.Wu @ self.gamma + (r0 * r0 - (r0 - bu) ** 2) / (2 * s2)
        p = expit(logit[self.latent])
        if not np.all((p > 0) & (p < 1)):
            # exact 0/1 only arises from float saturation; keep the draw well defined
            p = np.clip(p, 1e-300, 1 - 1e-16)
        self.u[self.latent] = (self.rng.random(len(p)) < p).astype(float)

    def mh(self, current, chol, scale, logpost):
        prop = current + scale * (chol @ self.rng.standard_normal(len(current)))
        lp_new, lp_old = logpost(prop), logpost(current)
        if math.log(self.rng.random()) < lp_new - lp_old:
            return prop, True
        return current, False


def _twin_setup(data: Dataset, known: np.ndarray, covs: list[str]):
    X = data.design(covs)
    z = data.z.astype(float)
    Xo = np.column_stack([X[:, :1], z, X[:, 1:]])  # intercept, Z, X (U appended via beta[-1])
    Wu = Xo.copy()
    u_obs = np.where(known, data.u, 0).astype(float)
    # preconditioners from complete-case fits on the internal rows
    full = ols(np.column_stack([Xo[known], u_obs[known]]), data.y[known])
    lfit = logistic(Wu[known], u_obs[known])
    start_u = expit(Wu @ lfit.coef)
    return Xo, Wu, u_obs, full, lfit, start_u


def _run_chain(c: int, seed: int, data, known, Xo, Wu, u_obs, full, lfit, start_u,
               priors: TwinPriors, draws: int, burn_in: int):
    rng = substream(seed, "twin", c)
    n_known = int(known.sum())
    # complete-case covariances are inflated by n_internal / n to match the whole-data posterior
    shrink = n_known / data.n
    chol_b = np.linalg.cholesky(full.cov * shrink + 1e-12 * np.eye(len(full.coef)))
    chol_g = np.linalg.cholesky(lfit.cov * shrink + 1e-12 * np.eye(len(lfit.coef)))
    # over-dispersed starting values for the convergence diagnostic
    beta0 = full.coef + 2.0 * (np.linalg.cholesky(full.cov + 1e-12 * np.eye(len(full.coef)))
                               @ rng.standard_normal(len(full.coef)))
    gamma0 = lfit.coef + 2.0 * (np.linalg.cholesky(lfit.cov + 1e-12 * np.eye(len(lfit.coef)))
                                @ rng.standard_normal(len(lfit.coef)))
    ls0 = math.log(full.sigma) + 0.2 * rng.standard_normal()
    u0 = (rng.random(data.n) < start_u).astype(float)
    ch = _TwinChain(data.y, Xo, Wu, u_obs, known, priors, rng, (beta0, ls0, gamma0, u0))

    scales = {"beta": 2.38 / math.sqrt(len(beta0)), "gamma": 2.38 / math.sqrt(len(gamma0)),
              "sigma": 0.5 * math.sqrt(full.cov[0, 0]) / max(full.sigma, 1e-12) + 0.02}
    target = 0.375
    total = burn_in + draws
    keep_bz = np.empty(draws)
    keep_bu = np.empty(draws)
    keep_sigma = np.empty(draws)
    keep_gz = np.empty(draws)
    accepted = dict.fromkeys(scales, 0)
    sigma_chol = np.ones((1, 1))
    for it in range(total):
        ch.gibbs_u()
        ch.beta, ok_b = ch.mh(ch.beta, chol_b, scales["beta"],
                              lambda b: ch.log_outcome(b, ch.log_sigma) + ch.log_prior_coef(b))
        ls_vec, ok_s = ch.mh(np.array([ch.log_sigma]), sigma_chol, scales["sigma"],
                             lambda v: ch.log_outcome(ch.beta, v[0]) + ch.log_prior_sigma(v[0]))
        ch.log_sigma = float(ls_vec[0])
        ch.gamma, ok_g = ch.mh(ch.gamma, chol_g, scales["gamma"],
                               lambda g: ch.log_confounder(g) + ch.log_prior_coef(g))
        if it < burn_in:
            # Robbins-Monro adaptation of the log proposal scale; frozen after burn-in
            step = 1.0 / math.sqrt(it + 1.0)
            for key, ok in (("beta", ok_b), ("sigma", ok_s), ("gamma", ok_g)):
                scales[key] *= math.exp(step * ((1.0 if ok else 0.0) - target))
        else:
            k = it - burn_in
            accepted["beta"] += ok_b
            accepted["sigma"] += ok_s
            accepted["gamma"] += ok_g
            keep_bz[k] = ch.beta[1]
            keep_bu[k] = ch.beta[-1]
            keep_sigma[k] = math.exp(ch.log_sigma)
            keep_gz[k] = ch.gamma[1]
        if it % 200 == 0 and not math.isfinite(ch.log_joint()):
            raise NumericalError("log joint density became non-finite")
    rates = {k: v / draws for k, v in accepted.items()}
    return {"beta_z": keep_bz, "beta_u": keep_bu, "sigma": keep_sigma, "gamma_z": keep_gz,
            "acceptance": rates}


def bayes_twin_regression(main: Dataset, priors: TwinPriors | dict | None = None,
                          chains: int = 4, draws: int = 30000, burn_in: int = 7500,
                          seed: int = 0, covariates: Sequence[str] | None = None,
                          alpha: float = DEFAULT_ALPHA) -> tuple[PosteriorSummary, EffectEstimate]:
    """Joint Bayesian outcome/confounder model with U latent outside the internal rows.

    Latent U is drawn from its exact Bernoulli conditional; the outcome
    coefficients, log sigma and the confounder-model coefficients are updated
    by random-walk Metropolis whose scales adapt during burn-in toward an
    acceptance rate in 0.30-0.45.  Raises ``ConvergenceError`` when the
    largest split R-hat reaches 1.05.
    """
    if chains < 2:
        raise ValidationError("at least two chains are needed for R-hat")
    if draws < 100 or burn_in < 50:
        raise ValidationError("need draws >= 100 and burn_in >= 50")
    if not isinstance(priors, TwinPriors):
        priors = TwinPriors.from_dict(priors)
    data, known = _internal_main(main)
    covs = _covariates(data, covariates)
    setup = _twin_setup(data, known, covs)
    runs = parallel_map(lambda c: _run_chain(c, seed, data, known, *setup, priors, draws, burn_in),
                        list(range(chains)))
    for r in runs:
        if min(r["acceptance"].values()) == 0:
            raise ConvergenceError("a Metropolis block accepted no proposals after adaptation")
    stacked = {k: np.stack([r[k] for r in runs]) for k in ("beta_z", "beta_u", "sigma", "gamma_z")}
    rhat = max(split_rhat(v) for v in stacked.values())
    ess = min(effective_size(v) for v in stacked.values())
    bz = stacked["beta_z"].ravel()
    lo, hi = (float(v) for v in np.quantile(bz, [alpha / 2, 1 - alpha / 2]))
    acc = {k: float(np.mean([r["acceptance"][k] for r in runs])) for k in runs[0]["acceptance"]}
    summary = PosteriorSummary(float(bz.mean()), float(bz.std(ddof=1)), lo, hi, chains, draws,
                               rhat, ess, acc)
    if rhat >= RHAT_LIMIT:
        raise ConvergenceError(f"twin regression did not converge (rhat_max = {rhat:.3f})")
    df = data.n - _outcome_width(covs) - 1
    eff = EffectEstimate(summary.mean, summary.sd, lo, hi, df, alpha,
                         method="Bayesian twin regression",
                         notes=(f"rhat_max={rhat:.4f}", f"ess_min={ess:.1f}"))
    return summary, eff


def _outcome_width(covs: Sequence[str]) -> int:
    return len(covs) + 3


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class Prevalence:
    estimate: float
    ci_low: float
    ci_high: float
    successes: int
    n: int
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def wilson_interval(k: int, n: int, alpha: float = DEFAULT_ALPHA) -> tuple[float, float]:
    if n <= 0:
        raise ValidationError("n must be positive")
    zc = float(stats.norm.ppf(1 - alpha / 2))
    p = k / n
    denom = 1 + zc * zc / n
    centre = (p + zc * zc / (2 * n)) / denom
    half = zc * math.sqrt(p * (1 - p) / n + zc * zc / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def registry_prevalence(registry: Dataset, alpha: float = DEFAULT_ALPHA) -> Prevalence:
    """Sample proportion of U = 1 among rows with U observed, with a Wilson interval."""
    if not registry.has_u:
        raise ValidationError("registry has no U column")
    obs = registry.u_observed
    n = int(obs.sum())
    if n == 0:
        raise ValidationError("registry has no observed U values")
    k = int(registry.u[obs].sum())
    lo, hi = wilson_interval(k, n, alpha)
    return Prevalence(k / n, lo, hi, k, n, alpha)


__all__ = [
    "ControlVariateDetail", "PosteriorSummary", "Prevalence", "TwinPriors",
    "bayes_twin_regression", "control_variate_estimate", "effective_size",
    "multiple_impute_u", "registry_prevalence", "split_rhat", "wilson_interval",
]
