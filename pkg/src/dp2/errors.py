"""Shared exception hierarchy.

Validation errors signal bad inputs or out-of-domain requests (CLI exit
code 2).  Numerical errors signal a computation that broke down at run
time, e.g. non-finite fields or a collapsed step size (CLI exit code 3).
"""


class Dp2Error(Exception):
    """Base class for all library errors."""


class ValidationError(Dp2Error):
    """Invalid input or a request outside an operation's domain."""


class NumericalError(Dp2Error):
    """A numerical computation failed mid-run."""
