"""Exception types shared across the package."""


class LabnetError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(LabnetError, ValueError):
    """An argument violates an operation's preconditions."""


class NumericalDegeneracyError(LabnetError, ArithmeticError):
    """A computation hit a degenerate numerical condition (zero norm, zero envelope)."""


class TriangulationDegenerateError(NumericalDegeneracyError):
    """Observer rays are parallel or divergent; no intersection exists."""


class ConstraintInfeasibleError(LabnetError, RuntimeError):
    """Scene rejection sampling exhausted its draw budget."""


class DatasetError(LabnetError, RuntimeError):
    """A dataset directory, manifest or audio file is missing or malformed."""


class GeometryMismatchError(DatasetError):
    """Ingested impulse responses disagree with the scene geometry."""


class CheckpointError(LabnetError, RuntimeError):
    """A checkpoint file is missing, malformed or incompatible."""


class TrainingDivergedError(LabnetError, RuntimeError):
    """The training loss became non-finite."""

    def __init__(self, message: str, batch_examples=None):
        super().__init__(message)
        self.batch_examples = list(batch_examples) if batch_examples else []
