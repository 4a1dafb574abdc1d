"""External adjustment for a binary confounder (array approach) and RR-scale contours."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..model import RISK_RATIO, EffectEstimate, SensitivityPoint, ValidationError, t_critical
from .evalue import SMD_TO_LOG_RR, bounding_factor
from .grid import ContourGrid, Marker, axis


def confounding_rr(p_u_treated, p_u_control, rr_ud):
    return (p_u_treated * (rr_ud - 1.0) + 1.0) / (p_u_control * (rr_ud - 1.0) + 1.0)


def array_adjusted_rr(rr_observed: float, p_u_treated: float, p_u_control: float,
                      rr_ud: float) -> float:
    """Observed risk ratio divided by the confounding risk ratio of a binary U."""
    for p in (p_u_treated, p_u_control):
        if not 0 <= p <= 1:
            raise ValidationError("prevalences must lie in [0, 1]")
    if not rr_ud > 0:
        raise ValidationError("rr_ud must be positive")
    return rr_observed / confounding_rr(p_u_treated, p_u_control, rr_ud)


def _outcome_scale(effect, sd_outcome, log_rr_adj):
    """Map adjusted log risk ratios back to outcome units, keeping the observed sign."""
    s = -1.0 if effect.estimate < 0 else 1.0
    return s * log_rr_adj / SMD_TO_LOG_RR * sd_outcome


def array_grid(effect: EffectEstimate, sd_outcome: float, prevalence_slices: Sequence[float],
               resolution: int = 51, max_imbalance: float = 0.5, max_rr_ud: float = 4.0,
               benchmarks: Sequence[SensitivityPoint] = (), alpha: float | None = None
               ) -> list[ContourGrid]:
    """One grid per overall prevalence of U.

    Axes are the prevalence imbalance ``p1 - p0`` (treated minus control,
    split symmetrically around the slice prevalence) and the U-outcome risk
    ratio.  Imbalances that would push a prevalence outside [0, 1] are clipped
    per slice.
    """
    if not sd_outcome > 0:
        raise ValidationError("sd_outcome must be positive")
    alpha = effect.alpha if alpha is None else alpha
    rr_obs = math.exp(SMD_TO_LOG_RR * abs(effect.estimate) / sd_outcome)
    grids = []
    for p in prevalence_slices:
        if not 0 < p < 1:
            raise ValidationError(f"prevalence slice {p} outside (0, 1)")
        dmax = min(max_imbalance, 2 * min(p, 1 - p))
        xs = axis(0.0, dmax, resolution)
        ys = axis(1.0, max_rr_ud, resolution)
        d, r = np.meshgrid(xs, ys, indexing="ij")
        crr = confounding_rr(p + d / 2, p - d / 2, r)
        est = _outcome_scale(effect, sd_outcome, np.log(rr_obs / crr))
        est[0, :] = effect.estimate
        t = est / effect.se
        markers = []
        for b in benchmarks:
            if b.scale != RISK_RATIO:
                raise ValidationError("benchmark scale does not match the risk-ratio grid")
            bp = p if b.prevalence is None else b.prevalence
            imbalance = _imbalance_for(b.assoc_treatment, bp)
            e = float(_outcome_scale(effect, sd_outcome, math.log(
                rr_obs / confounding_rr(bp + imbalance / 2, bp - imbalance / 2, b.assoc_outcome))))
            markers.append(Marker(b, e, e / effect.se,
                                  imbalance > dmax or b.assoc_outcome > max_rr_ud))
        grids.append(ContourGrid(
            scale=RISK_RATIO, x_axis=xs, y_axis=ys, surface_estimate=est, surface_t=t,
            observed_estimate=effect.estimate, t_crit=t_critical(alpha, effect.df),
            benchmarks=tuple(markers), prevalence_slice=float(p),
            x_label="Prevalence difference of U (treated - control)",
            y_label="Risk ratio of U with outcome",
            title=f"Array approach, P(U=1) = {p:g}",
        ).with_levels())
    return grids


def _imbalance_for(rr_zu: float, p: float) -> float:
    """Prevalence gap implied by a U-treatment risk ratio when split around ``p``.

    Solves ``(p + d/2) / (p - d/2) = rr_zu``.
    """
    d = 2 * p * (rr_zu - 1) / (rr_zu + 1)
    return min(d, 2 * min(p, 1 - p))


def evalue_contour(effect: EffectEstimate, sd_outcome: float, resolution: int = 61,
                   max_rr: float = 4.0, benchmarks: Sequence[SensitivityPoint] = (),
                   alpha: float | None = None) -> ContourGrid:
    """Adjusted effects over (RR_ZU, RR_UY) using the worst-case bounding factor."""
    if not sd_outcome > 0:
        raise ValidationError("sd_outcome must be positive")
    alpha = effect.alpha if alpha is None else alpha
    rr_obs = math.exp(SMD_TO_LOG_RR * abs(effect.estimate) / sd_outcome)
    xs = axis(1.0, max_rr, resolution)
    ys = axis(1.0, max_rr, resolution)
    a, b = np.meshgrid(xs, ys, indexing="ij")
    est = _outcome_scale(effect, sd_outcome, np.log(rr_obs / bounding_factor(a, b)))
    est[0, :] = effect.estimate
    est[:, 0] = effect.estimate
    t = est / effect.se
    markers = []
    for bm in benchmarks:
        if bm.scale != RISK_RATIO:
            raise ValidationError("benchmark scale does not match the risk-ratio grid")
        e = float(_outcome_scale(effect, sd_outcome, math.log(
            rr_obs / bounding_factor(bm.assoc_treatment, bm.assoc_outcome))))
        markers.append(Marker(bm, e, e / effect.se,
                              bm.assoc_treatment > max_rr or bm.assoc_outcome > max_rr))
    return ContourGrid(
        scale=RISK_RATIO, x_axis=xs, y_axis=ys, surface_estimate=est, surface_t=t,
        observed_estimate=effect.estimate, t_crit=t_critical(alpha, effect.df),
        benchmarks=tuple(markers),
        x_label="Risk ratio of U with treatment", y_label="Risk ratio of U with outcome",
        title="E-value",
    ).with_levels()
