"""Sensitivity analysis for unmeasured confounding in observational comparative studies."""

__version__ = "0.1.0"

from .model import (ConvergenceError, Dataset, EffectEstimate, NumericalError,  # noqa: E402
                    RankDeficiencyError, RwesensError, SensitivityPoint, SeparationError,
                    ValidationError, load_dataset, write_dataset)

__all__ = [
    "ConvergenceError", "Dataset", "EffectEstimate", "NumericalError", "RankDeficiencyError",
    "RwesensError", "SensitivityPoint", "SeparationError", "ValidationError", "__version__",
    "load_dataset", "write_dataset",
]
