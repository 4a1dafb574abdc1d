"""Seeded generator for a pilot-like study: main data with hidden U and a single-arm registry.

Covariates come from a Gaussian copula.  U depends on baseline pain; treatment
and outcome depend on the covariates and U, with no treatment effect by
default.  Coefficients are calibrated on each draw so that the realized U
prevalence, the partial R2 of U with treatment and with outcome, and the
standard error of the naive ANCOVA hit their targets.  When ``naive_target``
is set, draws are repeated (with fresh sub-streams) until the naive ANCOVA
estimate falls within ``naive_tolerance`` of it; the number of attempts is
reported in the manifest.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from .model import (MAIN, REGISTRY, ConvergenceError, Dataset, ValidationError, bisect, expit,
                    ols, write_dataset)
from .rng import substream

PAIN = "pain_baseline"


@dataclass(frozen=True)
class CovariateSpec:
    name: str
    kind: str  # "normal" or "bernoulli"
    mu: float = 0.0
    sd: float = 1.0
    p: float = 0.5
    treatment_coef: float = 0.0  # log-odds per standardized unit
    outcome_coef: float = 0.0  # noise-sd units per standardized unit

    def __post_init__(self) -> None:
        if self.kind not in ("normal", "bernoulli"):
            raise ValidationError(f"covariate {self.name}: unknown marginal {self.kind!r}")
        if self.kind == "normal" and not self.sd > 0:
            raise ValidationError(f"covariate {self.name}: sd must be positive")
        if self.kind == "bernoulli" and not 0 < self.p < 1:
            raise ValidationError(f"covariate {self.name}: p must lie in (0, 1)")

    def transform(self, g: np.ndarray) -> np.ndarray:
        """Map standard normal scores to this marginal."""
        if self.kind == "normal":
            return self.mu + self.sd * g
        return (g > stats.norm.ppf(1 - self.p)).astype(float)

    def standardize(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "normal":
            return (x - self.mu) / self.sd
        return (x - self.p) / math.sqrt(self.p * (1 - self.p))

    @property
    def marginal(self):
        if self.kind == "normal":
            return stats.norm(self.mu, self.sd)
        return stats.bernoulli(self.p)


# Stand-in covariates for a fibromyalgia cohort; values are plausible, not sourced.
DEFAULT_COVARIATES: tuple[CovariateSpec, ...] = (
    CovariateSpec("age", "normal", 50.5, 11.5, treatment_coef=-0.10, outcome_coef=-0.05),
    CovariateSpec("female", "bernoulli", p=0.94, treatment_coef=-0.05, outcome_coef=0.03),
    CovariateSpec("white", "bernoulli", p=0.87, treatment_coef=0.05, outcome_coef=-0.03),
    CovariateSpec("bmi", "normal", 31.5, 7.5, treatment_coef=0.08, outcome_coef=0.05),
    CovariateSpec("years_since_dx", "normal", 8.0, 6.5, treatment_coef=0.10, outcome_coef=0.04),
    CovariateSpec(PAIN, "normal", 6.0, 1.6, treatment_coef=0.15, outcome_coef=0.75),
    CovariateSpec("pain_interference", "normal", 6.5, 2.0, treatment_coef=0.15, outcome_coef=0.10),
    CovariateSpec("fiq", "normal", 60.0, 14.0, treatment_coef=0.10, outcome_coef=0.08),
    CovariateSpec("phq8", "normal", 13.0, 5.5, treatment_coef=0.06, outcome_coef=0.06),
    CovariateSpec("gad7", "normal", 11.0, 5.5, treatment_coef=0.04, outcome_coef=0.03),
    CovariateSpec("isi", "normal", 18.0, 5.5, treatment_coef=0.06, outcome_coef=0.05),
    CovariateSpec("sds", "normal", 19.0, 7.0, treatment_coef=0.10, outcome_coef=0.06),
    CovariateSpec("employed", "bernoulli", p=0.45, treatment_coef=-0.15, outcome_coef=-0.04),
    CovariateSpec("smoker", "bernoulli", p=0.25, treatment_coef=0.15, outcome_coef=0.03),
    CovariateSpec("depression_dx", "bernoulli", p=0.35, treatment_coef=0.05, outcome_coef=0.03),
    CovariateSpec("anxiety_dx", "bernoulli", p=0.30, treatment_coef=0.05, outcome_coef=0.02),
)

DEFAULT_CORRELATIONS: tuple[tuple[str, str, float], ...] = (
    ("age", "years_since_dx", 0.30), ("age", "employed", -0.30), ("bmi", PAIN, 0.10),
    (PAIN, "pain_interference", 0.60), (PAIN, "fiq", 0.50), (PAIN, "phq8", 0.35),
    (PAIN, "sds", 0.40), (PAIN, "isi", 0.25),
    ("pain_interference", "fiq", 0.65), ("pain_interference", "sds", 0.55),
    ("pain_interference", "phq8", 0.40),
    ("fiq", "phq8", 0.50), ("fiq", "sds", 0.55),
    ("phq8", "gad7", 0.55), ("phq8", "isi", 0.45), ("gad7", "isi", 0.40),
    ("phq8", "sds", 0.45), ("phq8", "depression_dx", 0.45), ("gad7", "anxiety_dx", 0.45),
    ("phq8", "anxiety_dx", 0.30), ("gad7", "depression_dx", 0.30),
    ("depression_dx", "anxiety_dx", 0.35), ("employed", "sds", -0.35), ("smoker", "phq8", 0.15),
)


def correlation_matrix(names: Sequence[str], pairs=DEFAULT_CORRELATIONS) -> np.ndarray:
    idx = {n: i for i, n in enumerate(names)}
    c = np.eye(len(names))
    for a, b, r in pairs:
        if a in idx and b in idx:
            c[idx[a], idx[b]] = c[idx[b], idx[a]] = r
    return c


@dataclass(frozen=True)
class GenConfig:
    n_main: int = 1000
    n_registry: int = 1000
    covariates: tuple[CovariateSpec, ...] = DEFAULT_COVARIATES
    correlation: tuple[tuple[float, ...], ...] | None = None
    u_prevalence_target: float = 0.54
    u_pain_log_odds: float = 0.30
    u_treatment_r2_target: float = 0.022
    u_outcome_r2_target: float = 0.122
    true_effect: float = 0.0
    treated_fraction: float = 0.35
    naive_se_target: float = 0.1276
    naive_target: float | None = -0.30
    naive_tolerance: float = 0.04
    pain_treatment_r2_target: float | None = 0.009
    pain_outcome_r2_target: float | None = 0.12
    outcome_mean: float = 5.0
    outcome_cutpoint: float = 5.2
    internal_fraction: float = 0.20
    max_attempts: int = 400
    seed: int = 1

    def __post_init__(self) -> None:
        if self.n_main < 100 or self.n_registry < 100:
            raise ValidationError("n_main and n_registry must be at least 100")
        if not 0 < self.u_prevalence_target < 1:
            raise ValidationError("u_prevalence_target must lie in (0, 1)")
        for name in ("u_treatment_r2_target", "u_outcome_r2_target"):
            if not 0 <= getattr(self, name) < 0.5:
                raise ValidationError(f"{name} must lie in [0, 0.5)")
        if not 0 < self.treated_fraction < 1:
            raise ValidationError("treated_fraction must lie in (0, 1)")
        if not 0 < self.internal_fraction <= 1:
            raise ValidationError("internal_fraction must lie in (0, 1]")
        if not self.naive_se_target > 0:
            raise ValidationError("naive_se_target must be positive")
        names = [c.name for c in self.covariates]
        if len(set(names)) != len(names):
            raise ValidationError("covariate names must be unique")
        if PAIN not in names:
            raise ValidationError(f"covariates must include {PAIN!r}")
        corr = self.correlation_array()
        if corr.shape != (len(names), len(names)):
            raise ValidationError("correlation matrix shape does not match covariates")
        if not np.allclose(corr, corr.T, atol=1e-12) or not np.allclose(np.diag(corr), 1.0):
            raise ValidationError("correlation matrix must be symmetric with unit diagonal")
        if np.linalg.eigvalsh(corr).min() < -1e-8:
            raise ValidationError("correlation matrix is not positive semi-definite")

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.covariates)

    def correlation_array(self) -> np.ndarray:
        if self.correlation is None:
            return correlation_matrix(self.covariate_names)
        return np.asarray(self.correlation, dtype=float)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["correlation"] = self.correlation_array().tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> GenConfig:
        d = dict(d)
        if "covariates" in d:
            d["covariates"] = tuple(CovariateSpec(**c) for c in d["covariates"])
        if d.get("correlation") is not None:
            d["correlation"] = tuple(tuple(float(v) for v in row) for row in d["correlation"])
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValidationError(f"unknown datagen config fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Calibration:
    """Coefficients of one calibrated draw and its realized diagnostics."""

    u_intercept: float
    u_pain_log_odds: float
    z_intercept: float
    z_u: float
    z_pain: float
    y_u: float
    y_pain: float
    y_scale: float
    attempts: int
    realized: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _chol(corr: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(corr)
    return v * np.sqrt(np.clip(w, 0, None))


def _draw_covariates(config: GenConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, len(config.covariates))) @ _chol(config.correlation_array()).T
    return np.column_stack([spec.transform(g[:, j]) for j, spec in enumerate(config.covariates)])


def _standardized(config: GenConfig, x: np.ndarray) -> np.ndarray:
    return np.column_stack([spec.standardize(x[:, j]) for j, spec in enumerate(config.covariates)])


def _u_intercept(config: GenConfig, pain_std: np.ndarray, uniforms: np.ndarray) -> float:
    """Intercept of the U model whose realized prevalence (for fixed uniforms) hits the target."""
    a1 = config.u_pain_log_odds
    return bisect(lambda a: float((uniforms < expit(a + a1 * pain_std)).mean())
                  - config.u_prevalence_target, -20.0, 20.0, tol=1e-9)


def _signed_partial(X: np.ndarray, y: np.ndarray, j: int) -> float:
    """Partial correlation of column ``j`` with ``y``: sign of its t times sqrt(partial R2)."""
    fit = ols(X, y)
    return float(np.sign(fit.t[j]) * math.sqrt(fit.partial_r2[j]))


def _solve_signed(f, target_r2: float, lo: float, hi: float, sign: float = 1.0,
                  tol: float = 2e-4, max_iter: int = 80) -> float:
    """Bisection on a coefficient so the signed partial correlation ``f`` reaches ``sign*sqrt(target)``.

    ``f`` is increasing in the coefficient up to sampling jitter; the best
    evaluated point is kept and must land within 0.005 of the R2 target.
    """
    goal = sign * math.sqrt(target_r2)
    flo, fhi = f(lo), f(hi)
    if not flo <= goal <= fhi:
        raise ConvergenceError("calibration target beyond search range")
    best, best_err = (lo, abs(flo ** 2 - target_r2)) if abs(flo - goal) < abs(fhi - goal) \
        else (hi, abs(fhi ** 2 - target_r2))
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        v = f(mid)
        err = abs(np.sign(v) * v * v - sign * target_r2)
        if err < best_err:
            best, best_err = mid, err
        if best_err < tol:
            break
        if v < goal:
            lo = mid
        else:
            hi = mid
    if best_err > 0.005:
        raise ConvergenceError("calibration did not reach its partial R2 target")
    return best


def _calibrate_once(config: GenConfig, attempt: int):
    rng = substream(config.seed, "main", attempt)
    n = config.n_main
    names = config.covariate_names
    jp = names.index(PAIN)
    x = _draw_covariates(config, n, rng)
    xs = _standardized(config, x)
    pain = xs[:, jp]
    vu = rng.random(n)
    a0 = _u_intercept(config, pain, vu)
    u = (vu < expit(a0 + config.u_pain_log_odds * pain)).astype(float)
    if u.min() == u.max():
        raise ConvergenceError("U is constant in the draw")

    bx = np.array([c.treatment_coef for c in config.covariates])
    cx = np.array([c.outcome_coef for c in config.covariates])
    vz = rng.random(n)
    e = rng.standard_normal(n)
    one_x = np.column_stack([np.ones(n), x])
    one_x_u = np.column_stack([one_x, u])

    def treatment(bp, bu):
        lin = xs @ bx + (bp - bx[jp]) * pain + bu * u
        b0 = bisect(lambda b: float(expit(b + lin).mean()) - config.treated_fraction,
                    -30.0, 30.0, tol=1e-12)
        return b0, (vz < expit(b0 + lin)).astype(float)

    bp, bu = bx[jp], 0.0
    for _ in range(3):
        if config.pain_treatment_r2_target is not None:
            bp = _solve_signed(lambda b: _signed_partial(one_x, treatment(b, bu)[1], jp + 1),
                               config.pain_treatment_r2_target, -3.0, 3.0)
        if config.u_treatment_r2_target > 0:
            bu = _solve_signed(lambda b: _signed_partial(one_x_u, treatment(bp, b)[1], -1),
                               config.u_treatment_r2_target, 0.0, 10.0)
        if config.pain_treatment_r2_target is None:
            break
    b0, z = treatment(bp, bu)
    if z.min() == z.max():
        raise ConvergenceError("treatment is constant in the draw")

    naive_design = np.column_stack([np.ones(n), z, x])
    full = np.column_stack([naive_design, u])

    def outcome(cp, cu):
        return xs @ cx + (cp - cx[jp]) * pain - cu * u + e

    cp, cu = cx[jp], 0.0
    for _ in range(3):
        if config.pain_outcome_r2_target is not None:
            cp = _solve_signed(lambda c: _signed_partial(naive_design, outcome(c, cu), jp + 2),
                               config.pain_outcome_r2_target, -5.0, 5.0)
        if config.u_outcome_r2_target > 0:
            cu = _solve_signed(lambda c: -_signed_partial(full, outcome(cp, c), -1),
                               config.u_outcome_r2_target, 0.0, 20.0)
        if config.pain_outcome_r2_target is None:
            break
    y0 = outcome(cp, cu)
    scale = config.naive_se_target / ols(naive_design, y0).se[1]
    y = config.outcome_mean + scale * y0 + config.true_effect * z
    cal = Calibration(a0, config.u_pain_log_odds, b0, bu, bp, -cu * scale, cp, scale, attempt + 1)
    return x, u, z, y, cal


def _diagnostics(x, u, z, y, jp: int) -> dict:
    n = len(y)
    X = np.column_stack([np.ones(n), x])
    naive = ols(np.column_stack([X[:, :1], z, X[:, 1:]]), y)
    adj = ols(np.column_stack([X[:, :1], z, X[:, 1:], u]), y)
    return {
        "u_prevalence": float(u.mean()),
        "treated_fraction": float(z.mean()),
        "r2_tu": float(ols(np.column_stack([X, u]), z).partial_r2[-1]),
        "r2_yu": float(adj.partial_r2[-1]),
        "naive_estimate": float(naive.coef[1]), "naive_se": float(naive.se[1]),
        "adjusted_estimate": float(adj.coef[1]), "adjusted_se": float(adj.se[1]),
        "pain_r2_treatment": float(ols(X, z).partial_r2[jp + 1]),
        "pain_r2_outcome": float(naive.partial_r2[jp + 2]),
    }


def calibrate(config: GenConfig):
    """Draw and calibrate the main study; returns ``(x, u, z, y, Calibration)``."""
    for attempt in range(config.max_attempts):
        try:
            x, u, z, y, cal = _calibrate_once(config, attempt)
        except ConvergenceError:
            continue
        diag = _diagnostics(x, u, z, y, config.covariate_names.index(PAIN))
        if (config.naive_target is None
                or abs(diag["naive_estimate"] - config.naive_target) <= config.naive_tolerance):
            return x, u, z, y, replace(cal, realized=diag)
    raise ConvergenceError(f"no calibrated draw within {config.max_attempts} attempts")


def _ids(prefix: str, n: int) -> tuple[str, ...]:
    width = len(str(n))
    return tuple(f"{prefix}{i + 1:0{width}d}" for i in range(n))


def generate_main(config: GenConfig, calibration: tuple | None = None) -> Dataset:
    """Main study with U present on every row and the internal subsample flagged."""
    x, u, z, y, _ = calibration if calibration is not None else calibrate(config)
    ds = Dataset(_ids("m", config.n_main), z, y, x, config.covariate_names, u=u,
                 source=np.full(config.n_main, MAIN, dtype=object))
    return mark_internal(ds, config.internal_fraction, config.seed)


def generate_registry(config: GenConfig, calibration: tuple | None = None) -> Dataset:
    """Single-arm (z = 0) registry drawn with the main study's calibrated coefficients.

    Only the U intercept is re-solved, so the registry's realized U prevalence
    also matches the target.
    """
    cal = (calibration if calibration is not None else calibrate(config))[4]
    rng = substream(config.seed, "registry")
    n = config.n_registry
    x = _draw_covariates(config, n, rng)
    xs = _standardized(config, x)
    jp = config.covariate_names.index(PAIN)
    pain = xs[:, jp]
    vu = rng.random(n)
    a0 = _u_intercept(config, pain, vu)
    u = (vu < expit(a0 + cal.u_pain_log_odds * pain)).astype(float)
    e = rng.standard_normal(n)
    cx = np.array([c.outcome_coef for c in config.covariates])
    cx[jp] = cal.y_pain
    y = config.outcome_mean + cal.y_scale * (xs @ cx + e) + cal.y_u * u
    return Dataset(_ids("r", n), np.zeros(n), y, x, config.covariate_names, u=u,
                   source=np.full(n, REGISTRY, dtype=object))


def mark_internal(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Flag ``round(fraction * n)`` uniformly chosen rows as the internal subsample."""
    if not 0 < fraction <= 1:
        raise ValidationError("fraction must lie in (0, 1]")
    n = dataset.n
    k = int(math.floor(fraction * n + 0.5))
    flags = np.zeros(n, dtype=bool)
    flags[substream(seed, "internal").permutation(n)[:k]] = True
    return replace(dataset, internal=flags)


def write_study(config: GenConfig, out_dir: str | Path) -> dict:
    """Write main/registry CSVs (U hidden outside the internal subsample) plus a manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cal = calibrate(config)
    main = generate_main(config, cal)
    registry = generate_registry(config, cal)
    write_dataset(main.hide_u(), out / "main.csv")
    write_dataset(registry, out / "registry.csv")
    manifest = study_manifest(config, cal[4])
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")
    return manifest


def study_manifest(config: GenConfig, cal: Calibration) -> dict:
    return {
        "config": config.to_dict(),
        "seed": config.seed,
        "calibration": cal.to_dict(),
        "note": "calibrated stand-in covariates, correlations and noise scale",
    }
