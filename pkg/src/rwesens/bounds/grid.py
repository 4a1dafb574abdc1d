"""Contour grids of adjusted effects and their serialisation."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from ..contour import polylines
from ..model import SensitivityPoint, ValidationError


@dataclass(frozen=True)
class Marker:
    """A benchmark placed on a grid."""

    point: SensitivityPoint
    adjusted_estimate: float
    adjusted_t: float
    out_of_range: bool = False
    interpolated: bool = False

    def to_dict(self) -> dict:
        return {**self.point.to_dict(), "adjusted_estimate": self.adjusted_estimate,
                "adjusted_t": self.adjusted_t, "out_of_range": self.out_of_range,
                "interpolated": self.interpolated}


@dataclass(frozen=True)
class ContourGrid:
    """Adjusted estimates over a rectangle of sensitivity parameters.

    ``surface_estimate[i, j]`` belongs to ``(x_axis[i], y_axis[j])``.
    """

    scale: str
    x_axis: np.ndarray
    y_axis: np.ndarray
    surface_estimate: np.ndarray
    surface_t: np.ndarray
    observed_estimate: float
    t_crit: float
    level_nullify: tuple[tuple[tuple[float, float], ...], ...] = ()
    level_significance: tuple[tuple[tuple[float, float], ...], ...] = ()
    benchmarks: tuple[Marker, ...] = ()
    prevalence_slice: float | None = None
    x_label: str = "x"
    y_label: str = "y"
    title: str = ""

    @property
    def sign(self) -> float:
        return -1.0 if self.observed_estimate < 0 else 1.0

    def with_levels(self) -> ContourGrid:
        """Extract nullify and significance curves from the surfaces."""
        s = self.sign
        if self.observed_estimate == 0:
            null = (((float(self.x_axis[0]), float(self.y_axis[-1])),
                     (float(self.x_axis[0]), float(self.y_axis[0])),
                     (float(self.x_axis[-1]), float(self.y_axis[0]))),)
            return replace(self, level_nullify=null, level_significance=())
        null = _freeze(polylines(self.x_axis, self.y_axis, s * self.surface_estimate, 0.0))
        sig = _freeze(polylines(self.x_axis, self.y_axis, s * self.surface_t, self.t_crit))
        return replace(self, level_nullify=null, level_significance=sig)

    def significant_mask(self) -> np.ndarray:
        return self.sign * self.surface_t >= self.t_crit

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "adjusted_estimate", "adjusted_t", "significant"])
            sig = self.significant_mask()
            for i, xv in enumerate(self.x_axis):
                for j, yv in enumerate(self.y_axis):
                    w.writerow([_fmt(xv), _fmt(yv), _fmt(self.surface_estimate[i, j]),
                                _fmt(self.surface_t[i, j]), int(sig[i, j])])

    def sidecar(self) -> dict:
        return {
            "scale": self.scale, "title": self.title,
            "x_label": self.x_label, "y_label": self.y_label,
            "x_range": [float(self.x_axis[0]), float(self.x_axis[-1])],
            "y_range": [float(self.y_axis[0]), float(self.y_axis[-1])],
            "shape": [len(self.x_axis), len(self.y_axis)],
            "observed_estimate": self.observed_estimate, "t_crit": self.t_crit,
            "prevalence_slice": self.prevalence_slice,
            "level_nullify": [[list(p) for p in line] for line in self.level_nullify],
            "level_significance": [[list(p) for p in line] for line in self.level_significance],
            "benchmarks": [m.to_dict() for m in self.benchmarks],
        }


def _fmt(v: float) -> str:
    return format(float(v), ".10g")


def _freeze(lines) -> tuple:
    return tuple(tuple((float(a), float(b)) for a, b in line) for line in lines)


def axis(lo: float, hi: float, resolution: int) -> np.ndarray:
    if resolution < 2:
        raise ValidationError("a grid needs at least 2 points per axis")
    if not hi > lo:
        raise ValidationError("axis maximum must exceed its minimum")
    return np.linspace(lo, hi, resolution)
