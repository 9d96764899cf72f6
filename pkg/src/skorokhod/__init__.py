"""Measure-valued Skorokhod map toolkit for priority-queue fluid models and simulation."""

from .measures import FiniteMeasure, MeasurePath, levy_distance, sup_cdf_distance
from .mvsm import MvsmSolution, kclass_solve, theta, theta_lifo, verify_mvsp
from .step_paths import StepPath, shift, skorokhod_map

__version__ = "0.1.0"

__all__ = [
    "FiniteMeasure",
    "MeasurePath",
    "MvsmSolution",
    "StepPath",
    "kclass_solve",
    "levy_distance",
    "shift",
    "skorokhod_map",
    "sup_cdf_distance",
    "theta",
    "theta_lifo",
    "verify_mvsp",
]
