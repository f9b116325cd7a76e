"""Temporal-structure fidelity metrics for synthetic longitudinal data.

The package quantifies how well a synthetic long-format dataset preserves
the temporal behaviour of the original: marginal profiles, covariance
structure, individual trajectories, and the timing/frequency of
measurements.  A simulation module provides ground-truth generators for
validating the estimators, and the CLI ties everything into a report.
"""

from .data_model import (
    CONTINUOUS,
    DISCRETE,
    NO_MEASUREMENTS,
    DropoutVector,
    LongDataset,
    MeasurementMatrix,
    Observation,
    TimeGrid,
    VariableSpec,
    build_measurement_matrix,
    build_time_grid,
    dropout_points,
)
from .errors import ConfigurationError, DataError, LongfidError

__version__ = "0.1.0"

__all__ = [
    "CONTINUOUS",
    "DISCRETE",
    "NO_MEASUREMENTS",
    "ConfigurationError",
    "DataError",
    "DropoutVector",
    "LongDataset",
    "LongfidError",
    "MeasurementMatrix",
    "Observation",
    "TimeGrid",
    "VariableSpec",
    "build_measurement_matrix",
    "build_time_grid",
    "dropout_points",
    "__version__",
]
