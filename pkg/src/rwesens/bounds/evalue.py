"""E-values for ratio and standardized-difference effects."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..model import EffectEstimate, ValidationError

SMD_TO_LOG_RR = 0.91


def smd_to_rr(d: float) -> float:
    """Approximate risk ratio for a standardized mean difference, ``exp(0.91 |d|)``."""
    if not math.isfinite(d):
        raise ValidationError("d must be finite")
    return math.exp(SMD_TO_LOG_RR * abs(d))


def rr_to_smd(rr: float) -> float:
    if rr <= 0:
        raise ValidationError("risk ratio must be positive")
    return abs(math.log(rr)) / SMD_TO_LOG_RR


def evalue_rr(rr: float) -> float:
    """E-value of a single risk ratio; protective ratios are inverted first."""
    if rr <= 0:
        raise ValidationError("risk ratio must be positive")
    if rr < 1:
        rr = 1.0 / rr
    return rr + math.sqrt(rr * (rr - 1.0))


def bounding_factor(rr_zu: float, rr_uy: float) -> float:
    """Maximum bias factor produced by a confounder of the given strengths."""
    return rr_zu * rr_uy / (rr_zu + rr_uy - 1.0)


@dataclass(frozen=True)
class EValueResult:
    rr_observed: float
    rr_ci_limit: float
    e_point: float
    e_ci: float
    conversion_note: str

    def to_dict(self) -> dict:
        return {"rr_observed": self.rr_observed, "rr_ci_limit": self.rr_ci_limit,
                "e_point": self.e_point, "e_ci": self.e_ci,
                "conversion_note": self.conversion_note}


def evalue_from_rr(rr: float, lo: float, hi: float, note: str = "risk ratio") -> EValueResult:
    if not 0 < lo <= rr <= hi:
        raise ValidationError("need 0 < lo <= rr <= hi")
    if rr >= 1:
        limit = lo
        crosses = lo <= 1
    else:
        limit = hi
        crosses = hi >= 1
    rr_away = rr if rr >= 1 else 1.0 / rr
    if crosses:
        lim_away, e_ci = 1.0, 1.0
    else:
        lim_away = limit if limit >= 1 else 1.0 / limit
        e_ci = evalue_rr(lim_away)
    return EValueResult(rr_away, lim_away, evalue_rr(rr_away), e_ci, note)


def evalue_smd(d: float, d_lo: float | None = None, d_hi: float | None = None) -> EValueResult:
    """E-value for a standardized difference via ``RR = exp(0.91 d)``."""
    d_lo = d if d_lo is None else d_lo
    d_hi = d if d_hi is None else d_hi
    k = SMD_TO_LOG_RR
    return evalue_from_rr(math.exp(k * d), math.exp(k * d_lo), math.exp(k * d_hi),
                          note="standardized difference converted with RR = exp(0.91 d)")


def evalue(effect: EffectEstimate | float, sd_outcome: float | None = None, *,
           scale: str = "difference") -> EValueResult:
    """E-value of an effect estimate.

    ``scale`` says what ``effect`` measures: ``"difference"`` (raw outcome
    units, ``sd_outcome`` required), ``"smd"`` (already standardized) or
    ``"rr"`` (a risk ratio and its interval).  A bare float is treated as a
    point estimate without interval.
    """
    if isinstance(effect, EffectEstimate):
        est, lo, hi = effect.estimate, effect.ci_low, effect.ci_high
    else:
        est = lo = hi = float(effect)
    if scale == "rr":
        return evalue_from_rr(est, lo, hi)
    if scale == "smd":
        return evalue_smd(est, lo, hi)
    if scale != "difference":
        raise ValidationError(f"unknown effect scale {scale!r}")
    if sd_outcome is None:
        raise ValidationError("sd_outcome is required for a continuous outcome")
    if not sd_outcome > 0:
        raise ValidationError("sd_outcome must be positive")
    res = evalue_smd(est / sd_outcome, lo / sd_outcome, hi / sd_outcome)
    return EValueResult(res.rr_observed, res.rr_ci_limit, res.e_point, res.e_ci,
                        f"difference / sd ({sd_outcome:.6g}) converted with RR = exp(0.91 d)")
