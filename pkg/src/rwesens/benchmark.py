"""Benchmarking: how strong are the measured confounders, and where do they sit on the bounds?"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .bounds.grid import ContourGrid, Marker
from .bounds.ovb import ovb_adjusted_estimate
from .contour import bilinear
from .estimators import ancova
from .model import (DEFAULT_ALPHA, PARTIAL_R2, RISK_RATIO, Dataset, EffectEstimate,
                    SensitivityPoint, ValidationError, ols, t_critical)

ROBUST = "robust"
NOT_ROBUST = "not_robust"
INDETERMINATE = "indeterminate"


def risk_ratio_2x2(a: int, b: int, c: int, d: int) -> float:
    """Risk ratio of an event among exposed (a events, b non-events) vs unexposed (c, d)."""
    if min(a + b, c + d) == 0 or c == 0:
        raise ValidationError("empty cell in 2x2 table")
    return (a / (a + b)) / (c / (c + d))


def _dichotomize(x: np.ndarray, cut) -> np.ndarray:
    vals = np.unique(x)
    if len(vals) <= 2 and set(vals) <= {0.0, 1.0}:
        return x > 0.5
    threshold = float(np.median(x)) if cut in (None, "median") else float(cut)
    return x > threshold


def _rr(exposed: np.ndarray, event: np.ndarray) -> float:
    a = int((exposed & event).sum())
    b = int((exposed & ~event).sum())
    c = int((~exposed & event).sum())
    d = int((~exposed & ~event).sum())
    if min(a, b, c, d) == 0:
        raise ValidationError("empty cell in 2x2 table")
    return risk_ratio_2x2(a, b, c, d)


def outcome_risk_ratio(dataset: Dataset, covariate: str, outcome_cutpoint: float,
                       covariate_cutpoint: float | str = "median") -> float:
    """Risk ratio of ``y > outcome_cutpoint`` for covariate-high vs covariate-low rows.

    Uses every row regardless of source, so it works on a single-arm registry.
    """
    x = dataset.column(covariate)
    return _rr(_dichotomize(x, covariate_cutpoint), dataset.y > outcome_cutpoint)


@dataclass(frozen=True)
class CovariateStrength:
    covariate: str
    r2: SensitivityPoint
    rr: SensitivityPoint
    covariate_cutpoint: float | str
    outcome_cutpoint: float

    @property
    def product(self) -> float:
        return self.r2.assoc_treatment * self.r2.assoc_outcome

    def to_dict(self) -> dict:
        return {"covariate": self.covariate, "partial_r2": self.r2.to_dict(),
                "risk_ratio": self.rr.to_dict(), "covariate_cutpoint": self.covariate_cutpoint,
                "outcome_cutpoint": self.outcome_cutpoint}


def covariate_strength(dataset: Dataset, covariate: str, outcome_cutpoint: float | None,
                       covariate_cutpoint: float | str = "median",
                       covariates: Sequence[str] | None = None) -> CovariateStrength:
    """Strength of a measured covariate with outcome and treatment on both scales.

    Partial R2 comes from the outcome regression on treatment plus all
    covariates and from a linear regression of treatment on all covariates.
    Risk ratios compare covariate-high vs covariate-low groups after
    dichotomizing (binary covariates are used as they are).
    """
    main = dataset.main_rows()
    covs = list(main.covariates if covariates is None else covariates)
    if covariate not in covs:
        raise ValidationError(f"unknown covariate {covariate!r}")
    if outcome_cutpoint is None:
        raise ValidationError("an outcome cutpoint is required for a continuous outcome")
    j = covs.index(covariate)
    X = main.design(covs)
    z = main.z.astype(float)
    r2_y = float(ols(np.column_stack([X[:, :1], z, X[:, 1:]]), main.y).partial_r2[j + 2])
    r2_z = float(ols(X, z).partial_r2[j + 1])
    x = main.column(covariate)
    high = _dichotomize(x, covariate_cutpoint)
    rr_y = _rr(high, main.y > outcome_cutpoint)
    rr_z = _rr(high, main.z == 1)
    cut = covariate_cutpoint if covariate_cutpoint not in (None, "median") else float(np.median(x))
    return CovariateStrength(
        covariate,
        SensitivityPoint(PARTIAL_R2, r2_z, r2_y, label=covariate),
        SensitivityPoint.risk_ratio(rr_z, rr_y, label=covariate),
        cut, float(outcome_cutpoint),
    )


@dataclass(frozen=True)
class BenchmarkReport:
    covariate: str
    strength: CovariateStrength
    k_multiples: tuple[SensitivityPoint, ...]
    adjusted_effect_at_benchmark: EffectEstimate | None
    adjusted_at_multiples: tuple[EffectEstimate | None, ...]
    verdict: str

    @property
    def point(self) -> SensitivityPoint:
        return self.strength.r2

    def to_dict(self) -> dict:
        return {
            "covariate": self.covariate, "verdict": self.verdict,
            "strength": self.strength.to_dict(),
            "k_multiples": [p.to_dict() for p in self.k_multiples],
            "adjusted_effect_at_benchmark": (None if self.adjusted_effect_at_benchmark is None
                                             else self.adjusted_effect_at_benchmark.to_dict()),
            "adjusted_at_multiples": [None if e is None else e.to_dict()
                                      for e in self.adjusted_at_multiples],
        }


def verdict_for(effect: EffectEstimate, point: SensitivityPoint) -> tuple[str, EffectEstimate | None]:
    if point.assoc_treatment >= 1:
        return INDETERMINATE, None
    adj = ovb_adjusted_estimate(effect, point.assoc_outcome, point.assoc_treatment)
    tc = t_critical(effect.alpha, adj.df)
    return (ROBUST if abs(adj.t) >= tc else NOT_ROBUST), adj


def _report(effect: EffectEstimate, strength: CovariateStrength,
            multiples: Sequence[float]) -> BenchmarkReport:
    verdict, adj = verdict_for(effect, strength.r2)
    mults = tuple(strength.r2.scaled(k) for k in multiples)
    adj_mults = tuple(verdict_for(effect, p)[1] for p in mults)
    return BenchmarkReport(strength.covariate, strength, mults, adj, adj_mults, verdict)


def rank_benchmarks(dataset: Dataset, candidates: Sequence[str], outcome_cutpoint: float,
                    effect: EffectEstimate | None = None,
                    covariates: Sequence[str] | None = None,
                    multiples: Sequence[float] = (1.0, 2.0, 3.0)) -> list[BenchmarkReport]:
    """Reports for every candidate, strongest first.

    Strength is the product of the two partial R2 values; ties keep
    alphabetical order.  ``effect`` defaults to the covariate-adjusted ANCOVA.
    """
    if not candidates:
        raise ValidationError("at least one candidate covariate is required")
    covs = list(dataset.covariates if covariates is None else covariates)
    if effect is None:
        effect = ancova(dataset, covs)
    strengths = [covariate_strength(dataset, c, outcome_cutpoint, covariates=covs)
                 for c in sorted(set(candidates))]
    strengths.sort(key=lambda s: -s.product)  # stable sort keeps alphabetical ties
    return [_report(effect, s, multiples) for s in strengths]


def strongest_benchmark(dataset: Dataset, candidates: Sequence[str], outcome_cutpoint: float,
                        effect: EffectEstimate | None = None,
                        covariates: Sequence[str] | None = None,
                        multiples: Sequence[float] = (1.0, 2.0, 3.0)) -> BenchmarkReport:
    """The candidate with the largest product of its two partial R2 values."""
    return rank_benchmarks(dataset, candidates, outcome_cutpoint, effect, covariates, multiples)[0]


def overlay_benchmarks(grid: ContourGrid, benchmarks: Sequence[SensitivityPoint]) -> ContourGrid:
    """Attach benchmarks with bilinearly interpolated adjusted values.

    The benchmark's (treatment, outcome) strengths are read as grid (x, y).
    Points beyond the axes are kept and flagged; their values come from the
    nearest edge.
    """
    markers = list(grid.benchmarks)
    for b in benchmarks:
        if b.scale != grid.scale:
            raise ValidationError(f"benchmark scale {b.scale} does not match grid scale {grid.scale}")
        x, y = b.assoc_treatment, b.assoc_outcome
        oor = not (grid.x_axis[0] <= x <= grid.x_axis[-1] and grid.y_axis[0] <= y <= grid.y_axis[-1])
        est = bilinear(grid.x_axis, grid.y_axis, grid.surface_estimate, x, y)
        t = bilinear(grid.x_axis, grid.y_axis, grid.surface_t, x, y)
        markers.append(Marker(b, est, t, oor, interpolated=True))
    return replace(grid, benchmarks=tuple(markers))


__all__ = [
    "BenchmarkReport", "CovariateStrength", "INDETERMINATE", "NOT_ROBUST", "ROBUST",
    "covariate_strength", "outcome_risk_ratio", "overlay_benchmarks", "rank_benchmarks", "risk_ratio_2x2", "strongest_benchmark",
    "verdict_for", "RISK_RATIO", "DEFAULT_ALPHA",
]
