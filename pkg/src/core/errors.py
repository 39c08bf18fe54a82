class PivotStabilityError(Exception):
    """
    Base error of the package.
    `exit_code` is what the command line returns when the error reaches it,
    `detail` is the message printed to stderr.
    """
    exit_code = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# --- Usage errors (exit 2) ---
class InvalidParameterError(PivotStabilityError, ValueError):
    """A parameter violates a documented precondition."""
    exit_code = 2


class UnsupportedWaveformError(InvalidParameterError):
    """The requested operation has no meaning for this waveform."""


class ConfigError(InvalidParameterError):
    """The run configuration could not be loaded or validated."""


# --- Computation failures (exit 1) ---
class IntegrationError(PivotStabilityError):
    """The fixed-step integrator produced non-finite values."""


class ResultWriteError(PivotStabilityError):
    """An output file could not be written or read back."""


class VerificationError(PivotStabilityError):
    """A verification suite check failed."""


class UnimodularityError(PivotStabilityError, ArithmeticError):
    """A transfer-matrix product drifted away from determinant one."""
