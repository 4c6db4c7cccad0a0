"""Exact and Monte Carlo tools for the lazy walk killed at the edges of {1..d}."""
from .model import (
    ConvergenceError,
    EnumerationTooLarge,
    Kernel,
    Measure,
    Model,
    QswlabError,
    TotalAbsorptionError,
    ZeroMassError,
    fixture,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "EnumerationTooLarge",
    "Kernel",
    "Measure",
    "Model",
    "QswlabError",
    "TotalAbsorptionError",
    "ZeroMassError",
    "fixture",
]
