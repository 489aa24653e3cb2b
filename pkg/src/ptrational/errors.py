"""Exception hierarchy.

Validation problems (bad input, bad configuration, violated preconditions)
derive from :class:`InputError`; failed certificates and invariant checks
derive from :class:`CertificationError`.  The command line maps the first
family to exit status 1 and the second to exit status 2.
"""

from __future__ import annotations


class ArtifactError(Exception):
    """Base class for every error raised by this package."""


class InputError(ArtifactError, ValueError):
    """Malformed or out-of-domain input data."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ConfigError(InputError):
    """A scenario or vertex configuration is incomplete or inconsistent."""


class PreconditionError(InputError):
    """An operation was called outside its domain (e.g. unbounded slices)."""


class RecursionWindowError(ConfigError):
    """The PT recursion was asked for n inside the uncovered middle window."""


class CertificationError(ArtifactError):
    """A fitted object or an invariant failed verification.

    ``witness`` carries whatever concrete data exhibits the failure.
    """

    def __init__(self, message: str, witness=None):
        self.witness = witness
        text = message if witness is None else f"{message} (witness: {witness!r})"
        super().__init__(text)


class NotLieError(CertificationError):
    """A word sum is not primitive, so it cannot be rewritten with brackets."""


class NotQuasiPolynomialError(CertificationError):
    """Sampled data violates the expected difference equation."""


class NotUnipotentError(CertificationError):
    """``id - J`` is not nilpotent within the configured cap."""
