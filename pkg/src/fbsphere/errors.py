"""Exception types shared across the library.

The CLI maps these onto stable exit codes: input/parse problems exit 2,
constraint violations exit 3.
"""


class FbsphereError(Exception):
    """Base class for all library errors."""


class DomainError(FbsphereError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConstraintError(FbsphereError, ValueError):
    """A structural constraint on a model or type is violated
    (e.g. beta > kappa/2, non-orthonormal frame, unnormalized mixture)."""


class InputError(FbsphereError, ValueError):
    """Malformed external input (JSON/CSV documents, CLI arguments)."""
