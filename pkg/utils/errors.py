from typing import Any, Optional


class PreconditionError(ValueError):
    """Raised when an operation is called outside its documented preconditions."""


class ConfigError(ValueError):
    """Invalid run configuration (solver settings, CLI combinations, config files)."""


class DomainError(ValueError):
    """Argument outside the domain a numerical routine supports."""


class UndefinedTimescaleError(PreconditionError):
    """T_pi has a zero denominator (no drive and exact resonance)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge; carries the residual it reached."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class XiRootError(NumericalError):
    """No root of the xi self-consistency condition was bracketed on [0, 1]."""

    def __init__(self, message: str, scan: Optional[Any] = None):
        super().__init__(message)
        self.scan = scan
