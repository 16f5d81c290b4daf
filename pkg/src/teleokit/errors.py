"""Exception hierarchy shared across the package.

Every error carries a ``kind`` used by the service and CLI to map failures
onto HTTP statuses and process exit codes: ``usage`` -> 1, ``data`` -> 2,
``solver`` -> 3.
"""


class TeleoKitError(Exception):
    kind = "data"


class ModelError(TeleoKitError):
    """Malformed or inconsistent robot description."""


class UnknownFrameError(ModelError):
    """Requested link frame does not exist in the model."""


class LimitError(TeleoKitError):
    """Joint configuration outside the model's limits."""


class RecordingError(TeleoKitError):
    """Malformed recording or fixture file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ProtocolError(TeleoKitError):
    """Wire-protocol framing or version failure."""


class CalibrationError(TeleoKitError):
    """Unusable tactile calibration table."""


class SolverError(TeleoKitError):
    """Optimization failed in a way a result cannot express (non-finite cost)."""

    kind = "solver"


class ConfigError(TeleoKitError):
    """Invalid session, problem, or CLI configuration."""

    kind = "usage"
