"""Exception types raised by the solvers and the command line front end."""


class NumericalDiagnosticError(RuntimeError):
    """A numerical precondition failed (resolution, bracketing, blow-up)."""


class ConfigError(ValueError):
    """Invalid or missing configuration value."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
