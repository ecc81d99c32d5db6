"""2D-location-aware neural beamforming for two-speaker multichannel separation."""

__version__ = "0.1.0"

from labnet.errors import (
    ConstraintInfeasibleError,
    DatasetError,
    GeometryMismatchError,
    InvalidInputError,
    LabnetError,
    NumericalDegeneracyError,
    TrainingDivergedError,
    TriangulationDegenerateError,
)

__all__ = [
    "ConstraintInfeasibleError",
    "DatasetError",
    "GeometryMismatchError",
    "InvalidInputError",
    "LabnetError",
    "NumericalDegeneracyError",
    "TrainingDivergedError",
    "TriangulationDegenerateError",
]
