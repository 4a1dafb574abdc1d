"""Core data types, dataset I/O and the regression primitives shared by every module."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

DEFAULT_ALPHA = 0.05
RANK_TOL = 1e-10
SEPARATION_BOUND = 15.0

MAIN = "main"
REGISTRY = "registry"


class RwesensError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(RwesensError, ValueError):
    """Input violates a documented precondition or schema."""


class NumericalError(RwesensError, ArithmeticError):
    """A numerical procedure failed (singular design, divergence, no convergence)."""


class RankDeficiencyError(NumericalError):
    pass


class SeparationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


# ---------------------------------------------------------------------------
# Dataset


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented study data.

    ``u`` holds the confounder values and ``u_observed`` marks where they are
    known; entries of ``u`` under a False mask carry no meaning.  ``u`` is None
    when the source has no confounder column at all.
    """

    ids: tuple[str, ...]
    z: np.ndarray
    y: np.ndarray
    x: np.ndarray
    covariates: tuple[str, ...]
    u: np.ndarray | None = None
    u_observed: np.ndarray | None = None
    source: np.ndarray | None = None
    internal: np.ndarray | None = None

    def __post_init__(self) -> None:
        n = len(self.ids)
        if not np.isin(np.asarray(self.z, dtype=float), (0.0, 1.0)).all():
            raise ValidationError("z must be binary 0/1")
        z = np.asarray(self.z, dtype=np.int8)
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x, dtype=float).reshape(n, len(self.covariates))
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        if self.u is None:
            object.__setattr__(self, "u_observed", np.zeros(n, dtype=bool))
        else:
            mask = (np.ones(n, dtype=bool) if self.u_observed is None
                    else np.asarray(self.u_observed, dtype=bool))
            raw = np.asarray(self.u, dtype=float)
            if not np.isin(raw[mask], (0.0, 1.0)).all():
                raise ValidationError("u must be binary 0/1")
            u = np.where(mask, raw, 0).astype(np.int8)
            object.__setattr__(self, "u", u)
            object.__setattr__(self, "u_observed", mask)
        src = (np.full(n, MAIN, dtype=object) if self.source is None
               else np.asarray(self.source, dtype=object))
        object.__setattr__(self, "source", src)
        internal = (np.zeros(n, dtype=bool) if self.internal is None
                    else np.asarray(self.internal, dtype=bool))
        object.__setattr__(self, "internal", internal)
        for arr in (z, y, src, internal, self.u_observed):
            arr.flags.writeable = False
        x.flags.writeable = False
        if self.u is not None:
            self.u.flags.writeable = False
        self._validate()

    def _validate(self) -> None:
        n = len(self.ids)
        if len(set(self.covariates)) != len(self.covariates):
            raise ValidationError("covariate names must be unique")
        reserved = {"id", "z", "y", "u", "source", "internal"}
        clash = reserved.intersection(self.covariates)
        if clash:
            raise ValidationError(f"covariate names clash with reserved columns: {sorted(clash)}")
        for name, arr in (("z", self.z), ("y", self.y), ("source", self.source),
                          ("internal", self.internal)):
            if arr.shape != (n,):
                raise ValidationError(f"column {name!r} has length {arr.shape[0]}, expected {n}")
        if not np.isin(self.z, (0, 1)).all():
            raise ValidationError("z must be binary 0/1")
        if not np.isfinite(self.y).all():
            raise ValidationError("y must be finite")
        if np.isnan(self.x).any():
            raise ValidationError("covariates must not contain NaN")
        if self.u is not None and not np.isin(self.u, (0, 1)).all():
            raise ValidationError("u must be binary 0/1")
        bad = set(self.source) - {MAIN, REGISTRY}
        if bad:
            raise ValidationError(f"unknown source values: {sorted(bad)}")
        if ((self.source == REGISTRY) & (self.z == 1)).any():
            raise ValidationError("registry must be single-arm (z = 0 for every registry row)")

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def has_u(self) -> bool:
        return self.u is not None

    def column(self, name: str) -> np.ndarray:
        if name == "z":
            return self.z.astype(float)
        if name == "y":
            return self.y
        if name == "u":
            if self.u is None:
                raise ValidationError("dataset has no u column")
            if not self.u_observed.all():
                raise ValidationError("u is unobserved for some rows")
            return self.u.astype(float)
        try:
            return self.x[:, self.covariates.index(name)]
        except ValueError:
            raise ValidationError(f"unknown column {name!r}") from None

    def design(self, predictors: Sequence[str], intercept: bool = True) -> np.ndarray:
        cols = [self.column(p) for p in predictors]
        if intercept:
            cols.insert(0, np.ones(self.n))
        return np.column_stack(cols) if cols else np.empty((self.n, 0))

    def subset(self, mask_or_index) -> Dataset:
        idx = np.arange(self.n)[mask_or_index]
        return Dataset(
            ids=tuple(self.ids[i] for i in idx),
            z=self.z[idx], y=self.y[idx], x=self.x[idx],
            covariates=self.covariates,
            u=None if self.u is None else self.u[idx],
            u_observed=self.u_observed[idx],
            source=self.source[idx], internal=self.internal[idx],
        )

    def main_rows(self) -> Dataset:
        return self.subset(self.source == MAIN)

    def with_u(self, u: np.ndarray, observed: np.ndarray | None = None) -> Dataset:
        return replace(self, u=np.asarray(u), u_observed=(
            np.ones(self.n, dtype=bool) if observed is None else observed))

    def hide_u(self) -> Dataset:
        """Keep U only on rows flagged internal (or registry rows)."""
        if self.u is None:
            return self
        keep = self.u_observed & (self.internal | (self.source == REGISTRY))
        return replace(self, u_observed=keep)

    def equals(self, other: Dataset) -> bool:
        same_u = (self.u is None) == (other.u is None)
        if same_u and self.u is not None:
            same_u = (np.array_equal(self.u_observed, other.u_observed)
                      and np.array_equal(self.u[self.u_observed], other.u[other.u_observed]))
        return (self.ids == other.ids and self.covariates == other.covariates
                and np.array_equal(self.z, other.z) and np.array_equal(self.y, other.y)
                and np.array_equal(self.x, other.x) and same_u
                and np.array_equal(self.source, other.source)
                and np.array_equal(self.internal, other.internal))


def _parse_binary(value: str, column: str, row: int) -> int:
    try:
        v = float(value)
    except ValueError:
        raise ValidationError(f"row {row}: column {column!r} is not numeric: {value!r}") from None
    if v not in (0.0, 1.0):
        raise ValidationError(f"row {row}: column {column!r} must be binary 0/1, got {value!r}")
    return int(v)


def _parse_bool(value: str, row: int) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "t", "yes"):
        return True
    if v in ("0", "false", "f", "no", ""):
        return False
    raise ValidationError(f"row {row}: internal flag not boolean: {value!r}")


def load_dataset(path: str | Path, schema: Mapping[str, str] | None = None) -> Dataset:
    """Read a dataset CSV.

    ``schema`` maps canonical names (``id``, ``z``, ``y``, ``u``, ``source``,
    ``internal``) to header names in the file; unmapped canonical names are
    looked up verbatim.  Every other column is a covariate.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"no such file: {path}")
    schema = dict(schema or {})
    names = {k: schema.get(k, k) for k in ("id", "z", "y", "u", "source", "internal")}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{path}: empty file") from None
        rows = list(reader)
    if len(set(header)) != len(header):
        raise ValidationError(f"{path}: duplicate column names in header")
    pos = {h: i for i, h in enumerate(header)}
    for key in ("id", "z", "y"):
        if names[key] not in pos:
            raise ValidationError(f"{path}: missing column {names[key]!r}")
    special = {names[k] for k in names if names[k] in pos}
    covariates = tuple(h for h in header if h not in special)

    ids, z, y, x = [], [], [], []
    u, u_obs, source, internal = [], [], [], []
    has_u = names["u"] in pos
    for r, row in enumerate(rows, start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise ValidationError(f"row {r}: expected {len(header)} fields, got {len(row)}")
        ids.append(row[pos[names["id"]]])
        z.append(_parse_binary(row[pos[names["z"]]], "z", r))
        try:
            y.append(float(row[pos[names["y"]]]))
            x.append([float(row[pos[c]]) if row[pos[c]].strip() else math.nan for c in covariates])
        except ValueError as exc:
            raise ValidationError(f"row {r}: non-numeric value ({exc})") from None
        if any(math.isnan(v) for v in x[-1]):
            raise ValidationError(f"row {r}: NaN covariate")
        if has_u:
            raw = row[pos[names["u"]]].strip()
            u_obs.append(raw != "")
            u.append(_parse_binary(raw, "u", r) if raw else 0)
        source.append(row[pos[names["source"]]].strip() if names["source"] in pos else MAIN)
        internal.append(_parse_bool(row[pos[names["internal"]]], r)
                        if names["internal"] in pos else False)
    if len(set(ids)) != len(ids):
        raise ValidationError(f"{path}: duplicate ids")
    return Dataset(
        ids=tuple(ids), z=np.array(z), y=np.array(y),
        x=np.array(x, dtype=float).reshape(len(ids), len(covariates)),
        covariates=covariates,
        u=np.array(u) if has_u else None,
        u_observed=np.array(u_obs, dtype=bool) if has_u else None,
        source=np.array(source, dtype=object), internal=np.array(internal, dtype=bool),
    )


def format_number(v: float) -> str:
    return repr(float(v))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write the CSV format read by :func:`load_dataset`; floats are written round-trip exact."""
    path = Path(path)
    header = ["id", "z", "y", *dataset.covariates]
    if dataset.has_u:
        header.append("u")
    header += ["source", "internal"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(dataset.n):
            row = [dataset.ids[i], int(dataset.z[i]), format_number(dataset.y[i])]
            row += [format_number(v) for v in dataset.x[i]]
            if dataset.has_u:
                row.append(int(dataset.u[i]) if dataset.u_observed[i] else "")
            row += [dataset.source[i], int(dataset.internal[i])]
            w.writerow(row)


# ---------------------------------------------------------------------------
# Estimates and sensitivity points


def t_critical(alpha: float, df: float) -> float:
    return float(stats.t.ppf(1.0 - alpha / 2.0, df))


@dataclass(frozen=True)
class EffectEstimate:
    estimate: float
    se: float
    ci_low: float
    ci_high: float
    df: int
    alpha: float = DEFAULT_ALPHA
    estimand: str = "ATE"
    method: str = ""
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.se >= 0:
            raise ValidationError("se must be non-negative")
        if not 0 < self.alpha < 1:
            raise ValidationError("alpha must lie in (0, 1)")
        if self.df < 1:
            raise ValidationError("df must be a positive integer")
        if self.estimand not in ("ATE", "ATT"):
            raise ValidationError(f"unknown estimand {self.estimand!r}")
        if not self.ci_low <= self.estimate <= self.ci_high:
            raise ValidationError("confidence interval must contain the estimate")

    @classmethod
    def from_t(cls, estimate: float, se: float, df: int, alpha: float = DEFAULT_ALPHA,
               **kw) -> EffectEstimate:
        half = t_critical(alpha, df) * se
        return cls(float(estimate), float(se), float(estimate - half), float(estimate + half),
                   int(df), alpha, **kw)

    @classmethod
    def from_ci(cls, estimate: float, ci_low: float, ci_high: float, df: int,
                alpha: float = DEFAULT_ALPHA, **kw) -> EffectEstimate:
        """Recover the standard error from a reported symmetric t interval."""
        se = (ci_high - ci_low) / (2.0 * t_critical(alpha, df))
        return cls(float(estimate), float(se), float(ci_low), float(ci_high), int(df), alpha, **kw)

    @property
    def t(self) -> float:
        return self.estimate / self.se if self.se > 0 else (0.0 if self.estimate == 0 else math.copysign(math.inf, self.estimate))

    @property
    def significant(self) -> bool:
        return self.ci_low > 0 or self.ci_high < 0

    def to_dict(self) -> dict:
        return {
            "method": self.method, "estimand": self.estimand,
            "estimate": self.estimate, "se": self.se,
            "ci_low": self.ci_low, "ci_high": self.ci_high,
            "df": self.df, "alpha": self.alpha, "notes": list(self.notes),
        }


RISK_RATIO = "risk_ratio"
PARTIAL_R2 = "partial_r2"


@dataclass(frozen=True)
class SensitivityPoint:
    """Confounder strength with treatment and outcome on one scale."""

    scale: str
    assoc_treatment: float
    assoc_outcome: float
    prevalence: float | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.scale == RISK_RATIO:
            if self.assoc_treatment < 1 or self.assoc_outcome < 1:
                raise ValidationError("risk ratios are stored away from the null (>= 1)")
        elif self.scale == PARTIAL_R2:
            if not 0 <= self.assoc_treatment < 1:
                raise ValidationError("partial R2 with treatment must lie in [0, 1)")
            if not 0 <= self.assoc_outcome <= 1:
                raise ValidationError("partial R2 with outcome must lie in [0, 1]")
        else:
            raise ValidationError(f"unknown scale {self.scale!r}")
        if self.prevalence is not None and not 0 < self.prevalence < 1:
            raise ValidationError("prevalence must lie in (0, 1)")

    @classmethod
    def risk_ratio(cls, rr_treatment: float, rr_outcome: float, **kw) -> SensitivityPoint:
        """Build an RR-scale point, inverting protective ratios."""
        fold = lambda r: r if r >= 1 else 1.0 / r
        return cls(RISK_RATIO, fold(rr_treatment), fold(rr_outcome), **kw)

    def scaled(self, k: float) -> SensitivityPoint:
        if self.scale == PARTIAL_R2:
            return replace(self, assoc_treatment=min(k * self.assoc_treatment, 1 - 1e-12),
                           assoc_outcome=min(k * self.assoc_outcome, 1.0), label=f"{k:g}x {self.label}")
        return replace(self, assoc_treatment=self.assoc_treatment ** k,
                       assoc_outcome=self.assoc_outcome ** k, label=f"{k:g}x {self.label}")

    def to_dict(self) -> dict:
        return {"scale": self.scale, "assoc_treatment": self.assoc_treatment,
                "assoc_outcome": self.assoc_outcome, "prevalence": self.prevalence,
                "label": self.label}


# ---------------------------------------------------------------------------
# Least squares


@dataclass(frozen=True)
class OLSFit:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    sigma2: float
    df: int
    r2: float
    residuals: np.ndarray
    cov_unscaled: np.ndarray

    @property
    def t(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coef / self.se

    @property
    def partial_r2(self) -> np.ndarray:
        t2 = self.t ** 2
        with np.errstate(invalid="ignore"):
            return np.where(np.isfinite(t2), t2 / (t2 + self.df), 1.0)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def cov(self) -> np.ndarray:
        return self.sigma2 * self.cov_unscaled

    def index(self, name: str) -> int:
        return self.names.index(name)

    def coef_of(self, name: str) -> float:
        return float(self.coef[self.index(name)])

    def se_of(self, name: str) -> float:
        return float(self.se[self.index(name)])

    def partial_r2_of(self, name: str) -> float:
        return float(self.partial_r2[self.index(name)])


def ols(X: np.ndarray, y: np.ndarray, names: Sequence[str] | None = None) -> OLSFit:
    """Least squares through a QR factorisation with relative rank tolerance."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise RankDeficiencyError(f"need n > p (n={n}, p={p})")
    q, r = np.linalg.qr(X, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * max(diag.max(), 1e-300):
        raise RankDeficiencyError("design matrix is rank deficient")
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - X @ coef
    df = n - p
    rss = float(resid @ resid)
    sigma2 = rss / df
    rinv = np.linalg.solve(r, np.eye(p))
    cov_unscaled = rinv @ rinv.T
    se = np.sqrt(sigma2 * np.diag(cov_unscaled))
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    return OLSFit(names, coef, se, sigma2, df, r2, resid, cov_unscaled)


def ols_fit(dataset: Dataset, outcome: str, predictors: Sequence[str]) -> OLSFit:
    """Regress ``outcome`` on an intercept plus ``predictors`` (column names of ``dataset``)."""
    X = dataset.design(predictors)
    return ols(X, dataset.column(outcome), ("intercept", *predictors))


def partial_r2_of(X: np.ndarray, y: np.ndarray, j: int) -> float:
    """Partial R2 of column ``j`` of ``X`` in the regression of ``y`` on ``X``."""
    return float(ols(X, y).partial_r2[j])


# ---------------------------------------------------------------------------
# Logistic regression


@dataclass(frozen=True)
class LogisticFit:
    names: tuple[str, ...]
    coef: np.ndarray
    cov: np.ndarray
    fitted: np.ndarray
    converged: bool
    n_iter: int
    loglik_path: tuple[float, ...]

    @property
    def loglik(self) -> float:
        return self.loglik_path[-1]


def expit(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=float)))


def _loglik(eta: np.ndarray, y: np.ndarray) -> float:
    # log(1+exp(eta)) computed stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def logistic(X: np.ndarray, y: np.ndarray, names: Sequence[str] | None = None, *,
             offset: np.ndarray | None = None, tol: float = 1e-8, max_iter: int = 100,
             init: np.ndarray | None = None) -> LogisticFit:
    """Logistic regression by IRLS with step halving.

    Non-constant columns are standardised internally so the separation check
    (``|beta| > 15``) is scale free; coefficients are returned on the
    original scale.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if max_iter < 1:
        raise ValidationError("max_iter must be >= 1")
    if not np.isin(y, (0.0, 1.0)).all():
        raise ValidationError("logistic response must be binary")
    off = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)

    center = np.zeros(p)
    scale = np.ones(p)
    sd = X.std(axis=0)
    const = sd < 1e-12
    has_intercept = const.any()
    for j in range(p):
        if not const[j]:
            scale[j] = sd[j]
            if has_intercept:
                center[j] = X[:, j].mean()
    Xs = (X - center) / scale
    q, r = np.linalg.qr(Xs, mode="reduced")
    diag = np.abs(np.diag(r))
    if diag.min() <= RANK_TOL * max(diag.max(), 1e-300):
        raise RankDeficiencyError("logistic design matrix is rank deficient")

    # standardized coefficients map back through T: beta = T @ beta_s
    T = np.diag(1.0 / scale)
    if has_intercept:
        k = int(np.flatnonzero(const)[0])
        T[k, :] = -center / scale / X[0, k]
        T[k, k] = 1.0
    if init is not None:
        beta = np.linalg.solve(T, np.asarray(init, dtype=float))
    else:
        beta = np.zeros(p)
    eta = Xs @ beta + off
    ll = _loglik(eta, y)
    path = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = expit(eta)
        w = np.clip(mu * (1 - mu), 1e-12, None)
        grad = Xs.T @ (y - mu)
        info = Xs.T @ (Xs * w[:, None])
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise SeparationError("information matrix singular during IRLS") from None
        frac = 1.0
        for _ in range(40):
            cand = beta + frac * step
            eta_c = Xs @ cand + off
            ll_c = _loglik(eta_c, y)
            if ll_c >= ll - 1e-12 * max(1.0, abs(ll)):
                break
            frac *= 0.5
        else:
            cand, eta_c, ll_c = beta, eta, ll
        change = np.max(np.abs(cand - beta))
        beta, eta, ll = cand, eta_c, max(ll_c, ll)
        path.append(ll)
        if np.max(np.abs(beta)) > SEPARATION_BOUND:
            raise SeparationError(
                "complete or quasi-complete separation: coefficients diverging")
        if change < tol:
            converged = True
            break
    if not converged:
        raise ConvergenceError(f"IRLS did not converge in {max_iter} iterations")
    mu = expit(eta)
    w = mu * (1 - mu)
    info = Xs.T @ (Xs * w[:, None])
    cov_s = np.linalg.inv(info)
    coef = T @ beta
    cov = T @ cov_s @ T.T
    names = tuple(names) if names is not None else tuple(f"x{j}" for j in range(p))
    return LogisticFit(names, coef, cov, mu, converged, it, tuple(path))


def logistic_fit(dataset: Dataset, response: str, predictors: Sequence[str], *,
                 tol: float = 1e-8, max_iter: int = 100) -> LogisticFit:
    X = dataset.design(predictors)
    return logistic(X, dataset.column(response), ("intercept", *predictors),
                    tol=tol, max_iter=max_iter)


# ---------------------------------------------------------------------------
# Small numeric helpers


def bisect(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200) -> float:
    """Root of an increasing-or-decreasing ``f`` bracketed by ``[lo, hi]``."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise ConvergenceError(f"root not bracketed on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0 or hi - lo < tol:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def as_list(values: Iterable[float]) -> list[float]:
    return [float(v) for v in values]


def rubin_pool(estimates: Sequence[float], variances: Sequence[float],
               df_complete: float | None = None) -> tuple[float, float, float, float, float]:
    """Pool per-imputation results.

    Returns ``(estimate, total_variance, df, within, between)``.  The degrees of
    freedom use the Barnard-Rubin small-sample adjustment when ``df_complete``
    is given, the classic Rubin formula otherwise.
    """
    q = np.asarray(estimates, dtype=float)
    u = np.asarray(variances, dtype=float)
    m = len(q)
    if m < 2:
        raise ValidationError("need at least two imputations to pool")
    qbar = float(q.mean())
    w = float(u.mean())
    b = float(q.var(ddof=1))
    total = w + (1.0 + 1.0 / m) * b
    if b <= 0:
        df = float(df_complete) if df_complete is not None else 1e6
        return qbar, total, df, w, b
    lam = (1.0 + 1.0 / m) * b / total
    if lam ** 2 < 1e-300:
        # between-imputation variance negligible: behave as complete data
        df = float(df_complete) if df_complete is not None else 1e6
        return qbar, total, df, w, b
    df_old = (m - 1) / lam ** 2
    if df_complete is None:
        return qbar, total, df_old, w, b
    df_obs = (df_complete + 1) / (df_complete + 3) * df_complete * (1 - lam)
    df = 1.0 / (1.0 / df_old + 1.0 / df_obs)
    return qbar, total, df, w, b
