"""Tipping-point and bounding analyses."""

from .array import array_adjusted_rr, array_grid, confounding_rr, evalue_contour
from .evalue import (EValueResult, bounding_factor, evalue, evalue_from_rr, evalue_rr,
                     evalue_smd, rr_to_smd, smd_to_rr)
from .grid import ContourGrid, Marker
from .ovb import (SIGNED, TOWARD_NULL, OvbResult, adjusted_surfaces, extreme_scenario,
                  ovb_adjusted_estimate, ovb_contour, ovb_robustness_value, ovb_threshold)
from .simframe import realized_partial_r2, simulate_confounder_adjustment, zeta_from_partial_r2

__all__ = [
    "ContourGrid", "EValueResult", "Marker", "OvbResult", "SIGNED", "TOWARD_NULL",
    "adjusted_surfaces", "array_adjusted_rr", "array_grid", "bounding_factor",
    "confounding_rr", "evalue", "evalue_contour", "evalue_from_rr", "evalue_rr", "evalue_smd",
    "extreme_scenario", "ovb_adjusted_estimate", "ovb_contour", "ovb_robustness_value",
    "ovb_threshold", "realized_partial_r2", "rr_to_smd", "simulate_confounder_adjustment",
    "smd_to_rr", "zeta_from_partial_r2",
]
