"""Shared exception types."""


class Wc2AvgError(Exception):
    """Base class for all library errors."""


class SingularBasisError(Wc2AvgError):
    """Basis matrix has zero determinant."""


class InvalidInstanceError(Wc2AvgError):
    """Instance data violates a construction invariant."""


class ParameterError(Wc2AvgError):
    """Parameter derivation failed or produced an infeasible value."""


class SolverError(Wc2AvgError):
    """Solver preconditions violated (size caps, alphabet, budget)."""


class ExtractionError(Wc2AvgError):
    """Solution vector cannot be turned into a lattice vector."""


class TranscriptCorruptionError(ExtractionError):
    """Stored transcript data is inconsistent with the extraction algebra."""
