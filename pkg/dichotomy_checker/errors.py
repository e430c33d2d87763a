"""
Exception taxonomy for the dichotomy checker.

Every exception carries a short ``code`` that the command line front end
writes into its JSON report.
"""

from typing import Optional


class DichotomyError(Exception):
    """Base class for all errors raised by the package."""
    code = "DichotomyError"


class ConfigurationError(DichotomyError):
    code = "ConfigurationError"


class InvalidMatrix(DichotomyError):
    code = "InvalidMatrix"


class DimensionMismatch(DichotomyError):
    code = "DimensionMismatch"


class NotComplementary(DichotomyError):
    """Raised when range + nullspace do not span the ambient space."""
    code = "NotComplementary"


class ComplementError(DichotomyError):
    """Raised when a requested complement cannot contain the given subspace."""
    code = "ComplementError"


class IndexOutsideInterval(DichotomyError):
    code = "IndexOutsideInterval"


class ProjectionUndefined(DichotomyError):
    code = "ProjectionUndefined"


class OverflowDetected(DichotomyError):
    code = "OverflowDetected"


class NotInjectiveOnNullspace(DichotomyError):
    code = "NotInjectiveOnNullspace"


class NoDecay(DichotomyError):
    code = "NoDecay"


class NoGap(DichotomyError):
    code = "NoGap"


class ComplementConstraintViolated(DichotomyError):
    code = "ComplementConstraintViolated"


class RankMismatch(DichotomyError):
    code = "RankMismatch"


class TransversalityFailure(DichotomyError):
    code = "TransversalityFailure"


class ExtensionObstructed(DichotomyError):
    """Raised by the constructive extension at the first failing step."""
    code = "ExtensionObstructed"

    def __init__(self, message: str, index: Optional[int] = None, obstruction: Optional[str] = None):
        super().__init__(message)
        self.index = index
        self.obstruction = obstruction


class SigmaTooLarge(DichotomyError):
    code = "SigmaTooLarge"


class NotAdmissible(DichotomyError):
    code = "NotAdmissible"


class WindowTooSmall(DichotomyError):
    code = "WindowTooSmall"


class ProblemFileError(DichotomyError):
    """Raised for malformed problem files; ``field`` names the offending path."""
    code = "ProblemFileError"

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class UsageError(DichotomyError):
    """Raised for malformed command lines."""
    code = "UsageError"
