"""Omitted-variable-bias bounds on the partial R2 scale."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..model import (DEFAULT_ALPHA, PARTIAL_R2, EffectEstimate, SensitivityPoint,
                     ValidationError, bisect, t_critical)
from .grid import ContourGrid, Marker, axis

TOWARD_NULL = "toward_null"
SIGNED = "signed"


@dataclass(frozen=True)
class OvbResult:
    rv_point: float
    rv_alpha: float
    t_observed: float
    dof: int
    f_partial: float
    q: float = 1.0
    alpha: float = DEFAULT_ALPHA

    def to_dict(self) -> dict:
        return {"rv_point": self.rv_point, "rv_alpha": self.rv_alpha,
                "t_observed": self.t_observed, "dof": self.dof,
                "f_partial": self.f_partial, "q": self.q, "alpha": self.alpha}


def _rv(fq: float) -> float:
    if fq <= 0:
        return 0.0
    return 0.5 * (math.sqrt(fq ** 4 + 4 * fq ** 2) - fq ** 2)


def ovb_robustness_value(effect: EffectEstimate, q: float = 1.0,
                         alpha: float | None = None) -> OvbResult:
    """Robustness values for reducing the estimate by ``100 q`` percent."""
    alpha = effect.alpha if alpha is None else alpha
    df = effect.df
    if df <= 2:
        raise ValidationError("robustness value needs df > 2")
    if not 0 < q <= 1:
        raise ValidationError("q must lie in (0, 1]")
    t = effect.t
    f = abs(t) / math.sqrt(df)
    fq = q * f
    rv_point = _rv(fq)
    f_crit = t_critical(alpha, df - 1) / math.sqrt(df - 1)
    fqa = fq - f_crit
    if fqa <= 0:
        rv_alpha = 0.0
    elif fqa > 1.0 / f_crit:
        rv_alpha = (fq ** 2 - f_crit ** 2) / (1.0 + fq ** 2)
    else:
        rv_alpha = _rv(fqa)
    return OvbResult(rv_point, rv_alpha, t, df, f, q, alpha)


def _bias_and_se(se, df, r2_yu, r2_tu):
    r2_yu = np.asarray(r2_yu, dtype=float)
    r2_tu = np.asarray(r2_tu, dtype=float)
    bias = se * math.sqrt(df) * np.sqrt(r2_yu * r2_tu / (1.0 - r2_tu))
    se_adj = se * math.sqrt(df / (df - 1)) * np.sqrt((1.0 - r2_yu) / (1.0 - r2_tu))
    return bias, se_adj


def adjusted_surfaces(effect: EffectEstimate, r2_yu, r2_tu, direction: str = TOWARD_NULL):
    """Vectorised adjusted estimates, standard errors and t values."""
    if np.any(np.asarray(r2_tu) >= 1):
        raise ValidationError("partial R2 with treatment must be < 1")
    bias, se_adj = _bias_and_se(effect.se, effect.df, r2_yu, r2_tu)
    s = -1.0 if effect.estimate < 0 else 1.0
    if direction == TOWARD_NULL:
        est = effect.estimate - s * bias
    elif direction == SIGNED:
        est = effect.estimate + s * bias
    else:
        raise ValidationError(f"unknown direction {direction!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se_adj > 0, est / np.where(se_adj > 0, se_adj, 1.0),
                     np.sign(est) * np.inf)
    return est, se_adj, t


def ovb_adjusted_estimate(effect: EffectEstimate, r2_yu: float, r2_tu: float,
                          direction: str = TOWARD_NULL) -> EffectEstimate:
    """Effect after accounting for a confounder with the given partial R2 values.

    ``toward_null`` removes bias that inflated the observed effect;
    ``signed`` assumes the confounder masked part of it.
    """
    if not 0 <= r2_yu <= 1 or not 0 <= r2_tu:
        raise ValidationError("partial R2 values must lie in [0, 1]")
    est, se_adj, _ = adjusted_surfaces(effect, r2_yu, r2_tu, direction)
    est, se_adj = float(est), float(se_adj)
    if r2_yu == 0 and r2_tu == 0:
        est = effect.estimate
    return EffectEstimate.from_t(est, se_adj, effect.df - 1, effect.alpha,
                                 estimand=effect.estimand,
                                 method=f"{effect.method} adjusted (R2_YU={r2_yu:.4g}, R2_TU={r2_tu:.4g})".strip())


def ovb_markers(effect: EffectEstimate, benchmarks: Sequence[SensitivityPoint],
                x_max: float | None = None, y_max: float | None = None) -> tuple[Marker, ...]:
    out = []
    for b in benchmarks:
        if b.scale != PARTIAL_R2:
            raise ValidationError("benchmark scale does not match the partial R2 grid")
        adj = ovb_adjusted_estimate(effect, b.assoc_outcome, b.assoc_treatment)
        oor = ((x_max is not None and b.assoc_treatment > x_max)
               or (y_max is not None and b.assoc_outcome > y_max))
        out.append(Marker(b, adj.estimate, adj.t, oor))
    return tuple(out)


def ovb_contour(effect: EffectEstimate, resolution: int = 101, max_r2_tu: float = 0.3,
                max_r2_yu: float = 0.3, benchmarks: Sequence[SensitivityPoint] = (),
                alpha: float | None = None) -> ContourGrid:
    """Grid over (R2 with treatment) x (R2 with outcome) with level curves."""
    alpha = effect.alpha if alpha is None else alpha
    for m in (max_r2_tu, max_r2_yu):
        if not 0 < m < 1:
            raise ValidationError("axis maxima must lie in (0, 1)")
    xs = axis(0.0, max_r2_tu, resolution)
    ys = axis(0.0, max_r2_yu, resolution)
    tu, yu = np.meshgrid(xs, ys, indexing="ij")
    est, _, t = adjusted_surfaces(effect, yu, tu)
    est[0, 0] = effect.estimate
    grid = ContourGrid(
        scale=PARTIAL_R2, x_axis=xs, y_axis=ys, surface_estimate=est, surface_t=t,
        observed_estimate=effect.estimate, t_crit=t_critical(alpha, effect.df - 1),
        benchmarks=ovb_markers(effect, benchmarks, max_r2_tu, max_r2_yu),
        x_label="Partial R2 of confounder with treatment",
        y_label="Partial R2 of confounder with outcome",
        title="Omitted variables",
    )
    return grid.with_levels()


def ovb_threshold(effect: EffectEstimate, r2_yu: float, alpha: float | None = None,
                  significance: bool = False, tol: float = 1e-6) -> float:
    """Largest R2 with treatment (at fixed R2 with outcome) that keeps the conclusion.

    Without ``significance`` this is where the adjusted estimate reaches zero,
    otherwise where its confidence limit reaches zero.
    """
    alpha = effect.alpha if alpha is None else alpha
    s = -1.0 if effect.estimate < 0 else 1.0
    tc = t_critical(alpha, effect.df - 1) if significance else 0.0

    def g(r2_tu):
        est, se_adj, _ = adjusted_surfaces(effect, r2_yu, r2_tu)
        return float(s * est - tc * se_adj)

    if g(0.0) <= 0:
        return 0.0
    hi = 1.0 - 1e-15
    if g(hi) > 0:
        return 1.0
    return bisect(g, 0.0, hi, tol=tol)


def extreme_scenario(effect: EffectEstimate, r2_yu_levels: Sequence[float] = (1.0, 0.75, 0.5),
                     alpha: float | None = None) -> list[dict]:
    """Per outcome-R2 level, the treatment-R2 tipping points for estimate and significance."""
    if effect.df <= 2:
        raise ValidationError("extreme scenario analysis needs df > 2")
    return [{"r2_yu": float(level),
             "r2_tu_nullify": ovb_threshold(effect, level, alpha),
             "r2_tu_significance": ovb_threshold(effect, level, alpha, significance=True)}
            for level in r2_yu_levels]
