"""Exception hierarchy shared across the package."""


class NetCPIError(Exception):
    """Base class for all package errors."""


class DataError(NetCPIError):
    """Input data is malformed or violates an accounting identity."""


class StructuralError(DataError):
    """Array shapes do not match the declared sector/factor/import lists."""


class SchemaError(DataError):
    """A file does not follow the expected layout."""


class NumericError(NetCPIError):
    """A numerical procedure failed (singularity, non-convergence)."""


class NonProductiveError(NumericError):
    """The domestic input-output matrix has spectral radius of at least one."""


class IndeterminacyError(NumericError):
    """A linear system meant to pin down equilibrium objects is singular."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class IdentificationError(NumericError):
    """A regression design does not identify the requested parameters."""


class CalibrationError(NetCPIError):
    """Model parameters are invalid or imply an infeasible steady state."""


class LinearizationError(NumericError):
    """Finite-difference linearization produced non-finite derivatives."""
