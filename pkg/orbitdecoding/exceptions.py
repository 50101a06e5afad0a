"""
Error hierarchy shared by every app of the orbit decoding project.
"""


class OrbitDecodingError(Exception):
    """Base class for all project errors."""


class ShapeError(OrbitDecodingError, ValueError):
    """Dimensions of operands do not agree."""


class SingularMatrixError(OrbitDecodingError, ArithmeticError):
    """A square matrix has no inverse over GF(2)."""


class InconsistentSystemError(OrbitDecodingError, ArithmeticError):
    """The right-hand side is not in the row space of the matrix."""


class ValidationError(OrbitDecodingError, ValueError):
    """An input violates a structural precondition."""


class AutomorphismViolationError(ValidationError):
    """A permutation does not preserve the dynamic frozen matrix."""


class LabelingError(ValidationError):
    """Published group generators do not act on the chosen coordinate labels."""


class CapacityError(OrbitDecodingError):
    """Requested work exceeds a desk-scale limit."""


class InputError(OrbitDecodingError, ValueError):
    """Channel input cannot be decoded (non-finite values)."""


class ConfigError(OrbitDecodingError, ValueError):
    """An experiment configuration cannot be used."""


EXIT_CONFIG = 1
EXIT_VERIFICATION = 2
EXIT_CAPACITY = 3


def exit_code_for(exc: Exception) -> int:
    """Process exit status reported by management commands for ``exc``."""
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    if isinstance(exc, (ConfigError, InputError)):
        return EXIT_CONFIG
    if isinstance(exc, (ValidationError, ShapeError, SingularMatrixError, InconsistentSystemError)):
        return EXIT_VERIFICATION
    return EXIT_CONFIG
