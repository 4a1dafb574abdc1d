"""Simulation framework: impute a binary U under assumed strengths and re-estimate.

U is drawn row by row from its conditional distribution given treatment,
outcome and covariates, with its effect on treatment (log-odds ``zeta_z``)
and on outcome (``zeta_y`` outcome units) held fixed as offsets.  The
treatment and outcome models are refit after every sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..model import (DEFAULT_ALPHA, ConvergenceError, Dataset, EffectEstimate, NumericalError,
                     ValidationError, expit, logistic, ols, rubin_pool)
from ..rng import substream

MIN_DRAWS = 20
MIN_BURN_IN = 10


@dataclass
class _State:
    beta_z: np.ndarray
    coef_y: np.ndarray
    sigma: float


def _arrays(dataset: Dataset, covariates: Sequence[str]):
    main = dataset.main_rows()
    X = main.design(covariates)
    z = main.z.astype(float)
    y = main.y.astype(float)
    return X, z, y, np.column_stack([X[:, :1], z, X[:, 1:]])


def _sweeps(X, z, y, Xy, zeta_z, zeta_y, prevalence, n_iter, seed):
    """Yield ``(u, outcome_fit)`` after each augmentation sweep."""
    if not 0 < prevalence < 1:
        raise ValidationError("u_prevalence must lie in (0, 1)")
    fz = logistic(X, z)
    fy = ols(Xy, y)
    state = _State(fz.coef, fy.coef, math.sqrt(fy.sigma2))
    prior = math.log(prevalence / (1 - prevalence))
    for it in range(n_iter):
        eta = X @ state.beta_z
        mu = Xy @ state.coef_y
        lz = z * zeta_z - np.logaddexp(0.0, eta + zeta_z) + np.logaddexp(0.0, eta)
        r0 = y - mu
        ly = -((r0 - zeta_y) ** 2 - r0 ** 2) / (2 * state.sigma ** 2)
        logit_q = prior + lz + ly
        if not np.isfinite(logit_q).all():
            raise NumericalError("non-finite conditional likelihood for U")
        q = expit(logit_q)
        u = (substream(seed, "simframe", it).random(len(y)) < q).astype(float)
        try:
            fz = logistic(X, z, offset=zeta_z * u, init=state.beta_z)
        except ConvergenceError:
            fz = logistic(X, z, offset=zeta_z * u)
        fy = ols(Xy, y - zeta_y * u)
        state = _State(fz.coef, fy.coef, math.sqrt(fy.sigma2))
        yield u, fy


def simulate_confounder_adjustment(dataset: Dataset, covariates: Sequence[str], zeta_z: float,
                                   zeta_y: float, u_prevalence: float, draws: int = 50,
                                   burn_in: int = 10, seed: int = 0,
                                   alpha: float = DEFAULT_ALPHA) -> EffectEstimate:
    """Treatment effect adjusted for a simulated binary confounder of fixed strength."""
    if draws < MIN_DRAWS or burn_in < MIN_BURN_IN:
        raise ValidationError(f"need draws >= {MIN_DRAWS} and burn_in >= {MIN_BURN_IN}")
    X, z, y, Xy = _arrays(dataset, covariates)
    taus, variances = [], []
    for it, (_, fy) in enumerate(_sweeps(X, z, y, Xy, zeta_z, zeta_y, u_prevalence,
                                         burn_in + draws, seed)):
        if it >= burn_in:
            taus.append(fy.coef[1])
            variances.append(fy.se[1] ** 2)
    est, var, _, _, _ = rubin_pool(taus, variances)
    df = Xy.shape[0] - Xy.shape[1] - 1
    return EffectEstimate.from_t(est, math.sqrt(var), df, alpha,
                                 method=f"simulation framework (zeta_z={zeta_z:.4g}, zeta_y={zeta_y:.4g})")


def realized_partial_r2(dataset: Dataset, covariates: Sequence[str], zeta_z: float,
                        zeta_y: float, u_prevalence: float, draws: int = 10,
                        burn_in: int = 5, seed: int = 0) -> tuple[float, float]:
    """Average partial R2 of the drawn U with treatment and with outcome."""
    X, z, y, Xy = _arrays(dataset, covariates)
    r_tu, r_yu = [], []
    for it, (u, _) in enumerate(_sweeps(X, z, y, Xy, zeta_z, zeta_y, u_prevalence,
                                        burn_in + draws, seed)):
        if it < burn_in:
            continue
        if u.min() == u.max():
            r_tu.append(0.0)
            r_yu.append(0.0)
            continue
        r_tu.append(float(ols(np.column_stack([X, u]), z).partial_r2[-1]))
        r_yu.append(float(ols(np.column_stack([Xy, u]), y).partial_r2[-1]))
    return float(np.mean(r_tu)), float(np.mean(r_yu))


def zeta_from_partial_r2(dataset: Dataset, covariates: Sequence[str], target_r2_tu: float,
                         target_r2_yu: float, u_prevalence: float, seed: int = 0,
                         tol: float = 0.005, max_steps: int = 60, passes: int = 4
                         ) -> tuple[float, float]:
    """Sensitivity coefficients whose drawn U reproduces the target partial R2 values.

    Coordinate-wise bisection: the treatment coefficient is solved with the
    outcome coefficient held fixed, then the reverse, until both realized
    values are within ``tol``.  Signs are chosen so the adjustment moves the
    estimate toward zero.
    """
    for tgt in (target_r2_tu, target_r2_yu):
        if not 0 <= tgt <= 0.5:
            raise ValidationError("partial R2 targets must lie in [0, 0.5]")
    X, z, y, Xy = _arrays(dataset, covariates)
    naive = ols(Xy, y).coef[1]
    sign_y = -1.0 if naive < 0 else 1.0
    y_scale = float(np.std(y))

    def realized(zz, zy):
        return realized_partial_r2(dataset, covariates, zz, zy, u_prevalence, seed=seed)

    def solve(f, target, step):
        # bracket by doubling: very large coefficients make the drawn U
        # degenerate, so the realized R2 is only monotone near the origin
        if target == 0:
            return 0.0
        lo, hi = 0.0, step
        for _ in range(8):
            if f(hi) >= target:
                break
            lo, hi = hi, 2 * hi
        else:
            raise ConvergenceError("partial R2 target not reachable within the search range")
        mid = hi
        for _ in range(max_steps):
            mid = 0.5 * (lo + hi)
            v = f(mid)
            if abs(v - target) < tol / 5:
                return mid
            if v < target:
                lo = mid
            else:
                hi = mid
        return mid

    zz, zy = 0.0, 0.0
    for _ in range(passes):
        zz = solve(lambda a: realized(a, sign_y * zy)[0], target_r2_tu, 0.25)
        zy = solve(lambda b: realized(zz, sign_y * b)[1], target_r2_yu, 0.25 * y_scale)
        r_tu, r_yu = realized(zz, sign_y * zy)
        if abs(r_tu - target_r2_tu) < tol and abs(r_yu - target_r2_yu) < tol:
            return zz, sign_y * zy
    raise ConvergenceError("zeta calibration did not reach the partial R2 targets")
